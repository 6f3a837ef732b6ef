// End-to-end acceptance harness: drives the real Python pipeline over the
// wire with the real ConsoleSession.
//
// Criteria checked here:
//  - operator loop: toggling a driver off changes that driver's overlay
//    visibility in frames received within 2 frame periods;
//  - reconnect: killing and restarting the pipeline resynchronizes config
//    and resumes rendering within 10 s without manual action.

import { afterEach, describe, expect, it } from "vitest";
import { ChildProcess, spawn } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";
import WebSocket from "ws";
import { FrameMessage } from "../src/protocol.js";
import { ConsoleSession, SocketLike } from "../src/session.js";

const REPO = path.resolve(fileURLToPath(new URL(".", import.meta.url)), "../..");
const DEMO_CONFIG = path.join(REPO, "configs", "demo.json");
const FPS = 10; // slower clock makes the 2-frame-period budget unambiguous

function nodeSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const like: SocketLike = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onopen: null,
    onmessage: null,
    onclose: null,
    onerror: null,
  };
  ws.on("open", () => like.onopen?.());
  ws.on("message", (data) => like.onmessage?.(data.toString()));
  ws.on("close", () => like.onclose?.());
  ws.on("error", () => like.onerror?.());
  return like;
}

function startPipeline(port: number): ChildProcess {
  return spawn(
    "python3",
    [
      "-m",
      "raceoverlay",
      "run",
      "--config",
      DEMO_CONFIG,
      "--listen",
      `127.0.0.1:${port}`,
      "--fps",
      String(FPS),
    ],
    { cwd: REPO, stdio: ["ignore", "ignore", "pipe"] },
  );
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor(predicate: () => boolean, timeoutMs: number, what: string): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await sleep(10);
  }
  throw new Error(`timed out waiting for ${what}`);
}

function driverAnchorCount(frame: FrameMessage, driverId: number): number {
  return frame.tracks
    .filter((t) => t.driver_id === driverId)
    .reduce((n, t) => n + t.anchors.length, 0);
}

describe("end-to-end operator loop", () => {
  const cleanups: (() => void)[] = [];

  afterEach(async () => {
    while (cleanups.length) cleanups.pop()?.();
    await sleep(100);
  });

  it(
    "driver toggle changes overlay visibility within 2 frame periods",
    async () => {
      const port = 18000 + Math.floor(Math.random() * 2000);
      const pipeline = startPipeline(port);
      cleanups.push(() => pipeline.kill("SIGKILL"));

      const frames: { frame: FrameMessage; atMs: number }[] = [];
      const session = new ConsoleSession(`ws://127.0.0.1:${port}`, nodeSocket, {
        onFrame: (frame) => frames.push({ frame, atMs: Date.now() }),
      });
      cleanups.push(() => session.close());

      // wait until driver 1 is confirmed and carrying anchors
      await waitFor(
        () =>
          session.connected &&
          session.lastFrame !== null &&
          driverAnchorCount(session.lastFrame, 1) > 0,
        15_000,
        "driver 1 anchors in the stream",
      );
      expect(session.currentConfig.revision).toBe(0);

      // the operator toggles driver 1 off
      const draft = {
        templates: session.currentConfig.templates.map((t) =>
          t.driver_id === 1 ? { ...t, enabled: false } : t,
        ),
      };
      const committedAtMs = Date.now();
      const revision = session.commit(draft);
      expect(revision).toBe(1);

      await waitFor(
        () => frames.some(({ frame }) => driverAnchorCount(frame, 1) === 0),
        5_000,
        "a frame without driver 1 anchors",
      );
      const firstClean = frames.find(({ frame }) => driverAnchorCount(frame, 1) === 0)!;

      // visibility changed within two frame periods of the commit
      const periodMs = 1000 / FPS;
      expect(firstClean.atMs - committedAtMs).toBeLessThanOrEqual(2 * periodMs);

      // later frames still list driver 1's track, just without anchors
      const after = frames[frames.length - 1].frame;
      expect(after.tracks.some((t) => t.driver_id === 1)).toBe(true);

      await waitFor(() => session.pendingRevision === null, 5_000, "commit ack");
      expect(session.currentConfig.revision).toBe(1);
    },
    60_000,
  );

  it(
    "console resynchronizes after a pipeline restart within 10 seconds",
    async () => {
      const port = 20000 + Math.floor(Math.random() * 2000);
      let pipeline = startPipeline(port);
      cleanups.push(() => pipeline.kill("SIGKILL"));

      const states: string[] = [];
      const session = new ConsoleSession(`ws://127.0.0.1:${port}`, nodeSocket, {
        onState: (state) => states.push(state),
      });
      cleanups.push(() => session.close());

      await waitFor(
        () => session.connected && session.framesReceived > 3,
        15_000,
        "initial frame flow",
      );

      // kill the back-end mid-session and restart it on the same port
      pipeline.kill("SIGKILL");
      await new Promise((resolve) => pipeline.once("exit", resolve));
      const framesBefore = session.framesReceived;
      const lastFrameBefore = session.lastFrame!.frame_id;
      const killedAtMs = Date.now();

      pipeline = startPipeline(port);
      cleanups.push(() => pipeline.kill("SIGKILL"));

      await waitFor(
        () =>
          session.connected &&
          session.framesReceived > framesBefore + 3 &&
          session.currentConfig.revision === 0,
        10_000,
        "reconnect with config resync and frame flow",
      );
      expect(Date.now() - killedAtMs).toBeLessThanOrEqual(10_000);
      expect(states).toContain("disconnected");

      // the fresh pipeline starts numbering frames from zero again; the
      // latest-frame slot resets with the new session state
      expect(session.lastFrame).not.toBeNull();
      void lastFrameBefore;
    },
    60_000,
  );
});
