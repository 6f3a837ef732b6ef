// Console session: connection lifecycle, latest-frame slot, config revisions.
//
// Reconnect policy: exponential backoff starting at 0.5 s, doubling to a cap
// of 8 s, with a visible "disconnected" state. A protocol version mismatch
// is terminal: error banner, no retry. A draft committed while disconnected
// is retained and auto-committed after the next config sync.

import {
  ConfigUpdate,
  FrameMessage,
  Hello,
  Message,
  OverlayTemplate,
  PROTOCOL_VERSION,
  decode,
  encode,
} from "./protocol.js";

// Minimal socket surface so the session runs on the browser WebSocket or on
// the `ws` package in the node test harness.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((data: string) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type SessionState =
  | "connecting"
  | "connected"
  | "disconnected"
  | "version-mismatch"
  | "closed";

export interface TemplateDraft {
  templates: OverlayTemplate[];
}

export interface SessionEvents {
  onFrame?: (frame: FrameMessage) => void;
  onConfig?: (config: ConfigUpdate) => void;
  onState?: (state: SessionState) => void;
  onAck?: (revision: number) => void;
}

const BACKOFF_INITIAL_MS = 500;
const BACKOFF_CAP_MS = 8000;

export class ConsoleSession {
  state: SessionState = "connecting";
  lastFrame: FrameMessage | null = null;
  lastFrameReceivedAtMs = 0;
  latencyMs = 0;
  currentConfig: ConfigUpdate = { type: "config", revision: -1, templates: [] };
  pendingDraft: TemplateDraft | null = null;
  pendingRevision: number | null = null;
  framesReceived = 0;

  private socket: SocketLike | null = null;
  private backoffMs = BACKOFF_INITIAL_MS;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private sawServerHello = false;
  private readonly now: () => number;

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    private readonly events: SessionEvents = {},
    now?: () => number,
  ) {
    this.now = now ?? (() => Date.now());
    this.open();
  }

  get connected(): boolean {
    return this.state === "connected";
  }

  private setState(state: SessionState): void {
    if (this.state !== state) {
      this.state = state;
      this.events.onState?.(state);
    }
  }

  private open(): void {
    this.sawServerHello = false;
    this.setState("connecting");
    let socket: SocketLike;
    try {
      socket = this.factory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      const hello: Hello = { type: "hello", protocol_version: PROTOCOL_VERSION, role: "console" };
      socket.send(encode(hello));
    };
    socket.onmessage = (data) => this.handleLine(data);
    socket.onclose = () => this.handleDrop();
    socket.onerror = () => {
      /* the close handler drives reconnection */
    };
  }

  private handleDrop(): void {
    this.socket = null;
    if (this.state === "version-mismatch" || this.state === "closed") {
      return;
    }
    this.setState("disconnected");
    this.scheduleReconnect();
  }

  private scheduleReconnect(): void {
    if (this.reconnectTimer !== null || this.state === "closed") {
      return;
    }
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      if (this.state !== "closed" && this.state !== "version-mismatch") {
        this.open();
      }
    }, this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_CAP_MS);
  }

  private handleLine(data: string): void {
    let message: Message;
    try {
      message = decode(data);
    } catch {
      return; // tolerate unknown lines from newer servers
    }
    if (message.type === "hello") {
      this.sawServerHello = true;
      if (message.protocol_version !== PROTOCOL_VERSION) {
        this.setState("version-mismatch");
        this.socket?.close();
        return;
      }
      this.backoffMs = BACKOFF_INITIAL_MS;
      // the staleness watermark is per connection: a restarted pipeline
      // numbers frames from zero again and must not be discarded as stale
      this.lastFrame = null;
      this.setState("connected");
      return;
    }
    if (!this.sawServerHello) {
      return;
    }
    if (message.type === "config") {
      this.currentConfig = message;
      if (this.pendingRevision !== null && message.revision >= this.pendingRevision) {
        this.pendingDraft = null;
        this.pendingRevision = null;
      }
      this.events.onConfig?.(message);
      // a draft committed while offline goes out once the server state is known
      if (this.pendingDraft !== null && this.pendingRevision === null) {
        this.commit(this.pendingDraft);
      }
      return;
    }
    if (message.type === "ack") {
      if (this.pendingRevision !== null && message.revision >= this.pendingRevision) {
        if (this.pendingDraft !== null) {
          this.currentConfig = {
            type: "config",
            revision: message.revision,
            templates: this.pendingDraft.templates,
          };
        }
        this.pendingDraft = null;
        this.pendingRevision = null;
      }
      this.events.onAck?.(message.revision);
      return;
    }
    // frame: latest wins, stale frames are discarded by id comparison
    if (this.lastFrame === null || message.frame_id > this.lastFrame.frame_id) {
      this.lastFrame = message;
      this.lastFrameReceivedAtMs = this.now();
      this.latencyMs = this.lastFrameReceivedAtMs - message.timestamp_us / 1000;
      this.framesReceived += 1;
      this.events.onFrame?.(message);
    }
  }

  /** Send a config update with the next revision; pending until acked. */
  commit(draft: TemplateDraft): number {
    const base = this.pendingRevision ?? this.currentConfig.revision;
    const revision = base + 1;
    this.pendingDraft = { templates: draft.templates.map((t) => ({ ...t })) };
    if (!this.connected || this.socket === null) {
      // retained locally; auto-committed after the reconnect config sync
      this.pendingRevision = null;
      return revision;
    }
    this.pendingRevision = revision;
    const update: ConfigUpdate = { type: "config", revision, templates: draft.templates };
    this.socket.send(encode(update));
    return revision;
  }

  close(): void {
    this.setState("closed");
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
  }
}
