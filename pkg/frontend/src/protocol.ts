// Wire protocol "telescale/1": JSON text messages over a websocket, one
// message per frame, {type, seq, payload}, seq strictly increasing per
// direction. The server is authoritative for everything in here; this
// file just gives the messages names and shapes.

export const PROTOCOL = "telescale/1";

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];

/** 0 open, 1 closed. */
export type JawState = 0 | 1;

export interface WireArm {
  position: Vec3;
  orientation?: Quat;
  jaw?: JawState;
}

export interface MasterInput {
  left?: WireArm;
  right?: WireArm;
  client_ms?: number;
}

export interface ConfigureRequest {
  scenario?: string;
  delay_ms?: number;
  scaling?: string;
}

// -- server payloads --

export interface GripperView {
  position: Vec3;
  jaw: JawState;
  held: number; // ring index, -1 when empty
}

export interface RingView {
  center: Vec3;
  threaded: number; // peg index, -1 when free
  stretch: number;
}

export const PEG_UPRIGHT = 0;
export const PEG_DISPLACED = 1;
export const PEG_KNOCKED_DOWN = 2;

export interface PegView {
  condition: number;
}

export interface EventView {
  tick: number;
  kind: string;
  weight: number;
  source: string;
}

export interface HudView {
  elapsed_s: number;
  weighted_error: number;
  events: EventView[];
}

/** The delayed world snapshot; the only state the console ever renders. */
export interface Frame {
  tick: number;
  sim_time_s: number;
  observed_tick: number;
  left: GripperView;
  right: GripperView;
  rings: RingView[];
  pegs: PegView[];
  hud: HudView;
  complete: boolean;
}

/** The slice of the start-ack scenario snapshot the console reads. */
export interface ScenarioInfo {
  name: string;
  board: {
    pegs: Vec3[];
    rings: { name: string; start: number; dest: number }[];
  };
  homes: { left: Vec3; right: Vec3 };
}

export interface HelloAck {
  protocol: string;
  scenario: string;
  presets: string[];
}

export interface ConfigureAck {
  scenario: string;
  delay_ms: number;
  scaling: string;
}

export interface StartAck {
  scenario: ScenarioInfo;
  fs_hz: number;
  rt_ticks: number;
  frame_stride: number;
}

export interface ResetAck {
  running: boolean;
}

export interface TrialDone {
  scenario: string;
  seed: number;
  completion_time_s: number;
  timed_out: boolean;
  weighted_error: number;
  log_ref: string | null;
  events: { tick: number; kind: string; source: string }[];
  transport?: { inputs: number };
}

export interface Envelope {
  type: string;
  seq: number;
  payload: unknown;
}

export function parseEnvelope(raw: string): Envelope | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const m = msg as Record<string, unknown>;
  if (typeof m.type !== "string" || typeof m.seq !== "number") return null;
  return { type: m.type, seq: m.seq, payload: m.payload ?? {} };
}

function isVec3(v: unknown): v is Vec3 {
  return Array.isArray(v) && v.length === 3 && v.every((c) => typeof c === "number" && Number.isFinite(c));
}

function isGripper(g: unknown): g is GripperView {
  if (typeof g !== "object" || g === null) return false;
  const o = g as Record<string, unknown>;
  return isVec3(o.position) && typeof o.jaw === "number" && typeof o.held === "number";
}

/** Structural check; a frame that fails it is skipped, not rendered. */
export function isFrame(p: unknown): p is Frame {
  if (typeof p !== "object" || p === null) return false;
  const f = p as Record<string, unknown>;
  if (typeof f.tick !== "number" || typeof f.sim_time_s !== "number") return false;
  if (!isGripper(f.left) || !isGripper(f.right)) return false;
  if (!Array.isArray(f.rings) || !f.rings.every((r) => isVec3((r as RingView)?.center))) return false;
  if (!Array.isArray(f.pegs) || !f.pegs.every((g) => typeof (g as PegView)?.condition === "number")) return false;
  const hud = f.hud as Record<string, unknown> | undefined;
  if (typeof hud !== "object" || hud === null) return false;
  if (typeof hud.elapsed_s !== "number" || typeof hud.weighted_error !== "number") return false;
  return typeof f.complete === "boolean";
}

/** "KNOCK_DOWN_PEG" -> "Knock down peg". */
export function eventLabel(kind: string): string {
  const words = kind.toLowerCase().split("_").join(" ");
  return words.charAt(0).toUpperCase() + words.slice(1);
}

export function toastText(ev: EventView): string {
  return `${eventLabel(ev.kind)} (+${ev.weight})`;
}
