// Wire protocol types and codec, mirroring the pipeline's canonical JSON:
// one message per line, keys sorted at every level, floats with exactly four
// decimals (round-half-even), integers as-is. Decoding is lenient about key
// order and whitespace.

export const PROTOCOL_VERSION = "overlay/1";

export type AnchorKind = "center" | "above_box" | "part";

export interface OverlayTemplate {
  template_id: number;
  driver_id: number;
  anchor_kind: AnchorKind;
  part_id?: string;
  offset: [number, number];
  label: string;
  color: [number, number, number];
  enabled: boolean;
}

export interface AnchorRecord {
  template_id: number;
  u: number;
  v: number;
}

export interface TrackRecord {
  driver_id: number;
  track_id: number;
  state: "tentative" | "confirmed" | "coasting";
  bbox: [number, number, number, number];
  confidence: number;
  prior_index: number;
  observation_yaw: number;
  anchors: AnchorRecord[];
}

export interface FrameMessage {
  type: "frame";
  frame_id: number;
  timestamp_us: number;
  tracks: TrackRecord[];
}

export interface ConfigUpdate {
  type: "config";
  revision: number;
  templates: OverlayTemplate[];
}

export interface Hello {
  type: "hello";
  protocol_version: string;
  role: "producer" | "console";
}

export interface Ack {
  type: "ack";
  revision: number;
}

export type Message = FrameMessage | ConfigUpdate | Hello | Ack;

export class ProtocolError extends Error {}

// printf-%.4f semantics: round-half-even on the exact binary value.
// toFixed(12) is correctly rounded, and any true tie at the fourth decimal
// comes from a dyadic with at most five decimals, so twelve digits decide
// every case exactly.
export function formatFixed4(value: number): string {
  if (!Number.isFinite(value)) {
    throw new ProtocolError(`cannot encode non-finite value ${value}`);
  }
  const negative = value < 0 || Object.is(value, -0);
  const text = Math.abs(value).toFixed(12);
  const dot = text.indexOf(".");
  let intPart = text.slice(0, dot);
  const frac = text.slice(dot + 1);
  let kept = frac.slice(0, 4);
  const next = frac.charCodeAt(4) - 48;
  const rest = frac.slice(5);
  let roundUp: boolean;
  if (next > 5) {
    roundUp = true;
  } else if (next < 5) {
    roundUp = false;
  } else if (/[1-9]/.test(rest)) {
    roundUp = true;
  } else {
    roundUp = (kept.charCodeAt(3) - 48) % 2 === 1; // half-even
  }
  if (roundUp) {
    let carried = (BigInt(intPart + kept) + 1n).toString().padStart(5, "0");
    kept = carried.slice(-4);
    intPart = carried.slice(0, -4);
  }
  const result = `${intPart}.${kept}`;
  if (negative && result !== "0.0000") {
    return `-${result}`;
  }
  return result;
}

class Float {
  constructor(readonly value: number) {}
}

function writeCanonical(value: unknown, out: string[]): void {
  if (value instanceof Float) {
    out.push(formatFixed4(value.value));
  } else if (typeof value === "boolean") {
    out.push(value ? "true" : "false");
  } else if (typeof value === "number") {
    if (!Number.isSafeInteger(value)) {
      throw new ProtocolError(`expected an integer, got ${value}`);
    }
    out.push(String(value));
  } else if (typeof value === "string") {
    out.push(JSON.stringify(value));
  } else if (Array.isArray(value)) {
    out.push("[");
    value.forEach((item, i) => {
      if (i > 0) out.push(",");
      writeCanonical(item, out);
    });
    out.push("]");
  } else if (value !== null && typeof value === "object") {
    out.push("{");
    Object.keys(value as object)
      .sort()
      .forEach((key, i) => {
        if (i > 0) out.push(",");
        out.push(JSON.stringify(key), ":");
        writeCanonical((value as Record<string, unknown>)[key], out);
      });
    out.push("}");
  } else {
    throw new ProtocolError(`cannot encode ${typeof value}`);
  }
}

function canonicalLine(wire: Record<string, unknown>): string {
  const out: string[] = [];
  writeCanonical(wire, out);
  out.push("\n");
  return out.join("");
}

function templateWire(template: OverlayTemplate): Record<string, unknown> {
  const wire: Record<string, unknown> = {
    template_id: template.template_id,
    driver_id: template.driver_id,
    anchor_kind: template.anchor_kind,
    offset: [new Float(template.offset[0]), new Float(template.offset[1])],
    label: template.label,
    color: template.color,
    enabled: template.enabled,
  };
  if (template.part_id !== undefined) {
    wire.part_id = template.part_id;
  }
  return wire;
}

export function encode(message: Message): string {
  switch (message.type) {
    case "hello":
      return canonicalLine({
        type: "hello",
        protocol_version: message.protocol_version,
        role: message.role,
      });
    case "ack":
      return canonicalLine({ type: "ack", revision: message.revision });
    case "config":
      return canonicalLine({
        type: "config",
        revision: message.revision,
        templates: message.templates.map(templateWire),
      });
    case "frame":
      return canonicalLine({
        type: "frame",
        frame_id: message.frame_id,
        timestamp_us: message.timestamp_us,
        tracks: message.tracks.map((track) => ({
          driver_id: track.driver_id,
          track_id: track.track_id,
          state: track.state,
          bbox: track.bbox.map((x) => new Float(x)),
          confidence: new Float(track.confidence),
          prior_index: track.prior_index,
          observation_yaw: new Float(track.observation_yaw),
          anchors: track.anchors.map((anchor) => ({
            template_id: anchor.template_id,
            u: new Float(anchor.u),
            v: new Float(anchor.v),
          })),
        })),
      });
  }
}

function asObject(value: unknown, path: string): Record<string, unknown> {
  if (value === null || typeof value !== "object" || Array.isArray(value)) {
    throw new ProtocolError(`${path}: expected an object`);
  }
  return value as Record<string, unknown>;
}

function getNumber(obj: Record<string, unknown>, key: string, path: string): number {
  const value = obj[key];
  if (typeof value !== "number") {
    throw new ProtocolError(`${path}.${key}: expected a number`);
  }
  return value;
}

function getInt(obj: Record<string, unknown>, key: string, path: string): number {
  const value = getNumber(obj, key, path);
  if (!Number.isInteger(value)) {
    throw new ProtocolError(`${path}.${key}: expected an integer`);
  }
  return value;
}

function getString(obj: Record<string, unknown>, key: string, path: string): string {
  const value = obj[key];
  if (typeof value !== "string") {
    throw new ProtocolError(`${path}.${key}: expected a string`);
  }
  return value;
}

function numberArray(value: unknown, length: number, path: string): number[] {
  if (!Array.isArray(value) || value.length !== length || value.some((x) => typeof x !== "number")) {
    throw new ProtocolError(`${path}: expected an array of ${length} numbers`);
  }
  return value as number[];
}

const TRACK_STATES = new Set(["tentative", "confirmed", "coasting"]);
const ANCHOR_KINDS = new Set(["center", "above_box", "part"]);

function parseTrack(value: unknown, path: string): TrackRecord {
  const obj = asObject(value, path);
  const state = getString(obj, "state", path);
  if (!TRACK_STATES.has(state)) {
    throw new ProtocolError(`${path}.state: unknown state ${state}`);
  }
  const anchors = obj.anchors;
  if (!Array.isArray(anchors)) {
    throw new ProtocolError(`${path}.anchors: expected an array`);
  }
  return {
    driver_id: getInt(obj, "driver_id", path),
    track_id: getInt(obj, "track_id", path),
    state: state as TrackRecord["state"],
    bbox: numberArray(obj.bbox, 4, `${path}.bbox`) as TrackRecord["bbox"],
    confidence: getNumber(obj, "confidence", path),
    prior_index: getInt(obj, "prior_index", path),
    observation_yaw: getNumber(obj, "observation_yaw", path),
    anchors: anchors.map((anchor, i) => {
      const a = asObject(anchor, `${path}.anchors[${i}]`);
      return {
        template_id: getInt(a, "template_id", `${path}.anchors[${i}]`),
        u: getNumber(a, "u", `${path}.anchors[${i}]`),
        v: getNumber(a, "v", `${path}.anchors[${i}]`),
      };
    }),
  };
}

function parseTemplate(value: unknown, path: string): OverlayTemplate {
  const obj = asObject(value, path);
  const kind = getString(obj, "anchor_kind", path);
  if (!ANCHOR_KINDS.has(kind)) {
    throw new ProtocolError(`${path}.anchor_kind: unknown kind ${kind}`);
  }
  const template: OverlayTemplate = {
    template_id: getInt(obj, "template_id", path),
    driver_id: getInt(obj, "driver_id", path),
    anchor_kind: kind as AnchorKind,
    offset: numberArray(obj.offset, 2, `${path}.offset`) as [number, number],
    label: getString(obj, "label", path),
    color: numberArray(obj.color, 3, `${path}.color`) as [number, number, number],
    enabled: Boolean(obj.enabled),
  };
  if (typeof obj.part_id === "string") {
    template.part_id = obj.part_id;
  }
  return template;
}

export function decode(line: string): Message {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch (error) {
    throw new ProtocolError(`invalid JSON: ${error}`);
  }
  const obj = asObject(parsed, "message");
  const type = obj.type;
  if (type === "frame") {
    const tracks = obj.tracks;
    if (!Array.isArray(tracks)) {
      throw new ProtocolError("tracks: expected an array");
    }
    return {
      type: "frame",
      frame_id: getInt(obj, "frame_id", "frame"),
      timestamp_us: getInt(obj, "timestamp_us", "frame"),
      tracks: tracks.map((track, i) => parseTrack(track, `tracks[${i}]`)),
    };
  }
  if (type === "config") {
    const templates = obj.templates;
    if (!Array.isArray(templates)) {
      throw new ProtocolError("templates: expected an array");
    }
    return {
      type: "config",
      revision: getInt(obj, "revision", "config"),
      templates: templates.map((t, i) => parseTemplate(t, `templates[${i}]`)),
    };
  }
  if (type === "hello") {
    const role = getString(obj, "role", "hello");
    if (role !== "producer" && role !== "console") {
      throw new ProtocolError(`hello.role: unknown role ${role}`);
    }
    return {
      type: "hello",
      protocol_version: getString(obj, "protocol_version", "hello"),
      role,
    };
  }
  if (type === "ack") {
    return { type: "ack", revision: getInt(obj, "revision", "ack") };
  }
  if (type === "record") {
    throw new ProtocolError("dataset records do not appear on the live wire");
  }
  throw new ProtocolError(`unknown message type ${String(type)}`);
}
