// Operator console UI: live canvas, per-driver toggles, template editing.

import { ConfigUpdate, OverlayTemplate } from "./protocol.js";
import { paintScene } from "./render.js";
import { buildScene, Viewport } from "./scene.js";
import { ConsoleSession, SocketLike } from "./session.js";

const VIRTUAL: Viewport = { width: 1280, height: 720 };

function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const like: SocketLike = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onopen: null,
    onmessage: null,
    onclose: null,
    onerror: null,
  };
  ws.onopen = () => like.onopen?.();
  ws.onmessage = (event) => like.onmessage?.(String(event.data));
  ws.onclose = () => like.onclose?.();
  ws.onerror = () => like.onerror?.();
  return like;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function main(): void {
  const canvas = el<HTMLCanvasElement>("scene");
  const maybeCtx = canvas.getContext("2d");
  if (!maybeCtx) throw new Error("canvas 2d context unavailable");
  const ctx: CanvasRenderingContext2D = maybeCtx;
  const statusEl = el<HTMLSpanElement>("status");
  const latencyEl = el<HTMLSpanElement>("latency");
  const frameEl = el<HTMLSpanElement>("frame-counter");
  const togglesEl = el<HTMLDivElement>("driver-toggles");
  const addressInput = el<HTMLInputElement>("address");

  let session: ConsoleSession | null = null;
  let draftTemplates: OverlayTemplate[] = [];

  function rebuildToggles(config: ConfigUpdate): void {
    draftTemplates = config.templates.map((t) => ({ ...t }));
    togglesEl.innerHTML = "";
    const drivers = [...new Set(draftTemplates.map((t) => t.driver_id))].sort((a, b) => a - b);
    for (const driverId of drivers) {
      const wrapper = document.createElement("label");
      wrapper.className = "toggle";
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = draftTemplates.some((t) => t.driver_id === driverId && t.enabled);
      box.onchange = () => {
        draftTemplates = draftTemplates.map((t) =>
          t.driver_id === driverId ? { ...t, enabled: box.checked } : t,
        );
        if (session) {
          const revision = session.commit({ templates: draftTemplates });
          statusEl.textContent = `pending r${revision}`;
        }
      };
      wrapper.appendChild(box);
      wrapper.appendChild(document.createTextNode(` driver ${driverId}`));
      togglesEl.appendChild(wrapper);
    }
  }

  function connect(): void {
    session?.close();
    session = new ConsoleSession(addressInput.value, browserSocket, {
      onState: (state) => {
        statusEl.textContent = state;
        statusEl.className = `state-${state}`;
        if (state === "version-mismatch") {
          statusEl.textContent = "protocol version mismatch - update the console";
        }
      },
      onConfig: (config) => rebuildToggles(config),
      onAck: (revision) => {
        statusEl.textContent = `config r${revision}`;
      },
    });
  }

  el<HTMLButtonElement>("connect").onclick = connect;
  connect();

  function repaint(): void {
    if (session) {
      const items = buildScene(session.lastFrame, session.currentConfig, VIRTUAL);
      paintScene(ctx, items, VIRTUAL);
      if (session.lastFrame) {
        frameEl.textContent = `frame ${session.lastFrame.frame_id}`;
        latencyEl.textContent = `${session.latencyMs.toFixed(0)} ms`;
      }
    }
    requestAnimationFrame(repaint);
  }
  requestAnimationFrame(repaint);
}

window.addEventListener("load", main);
