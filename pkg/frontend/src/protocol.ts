// Session wire protocol (schema v:1), matching the server message shapes exactly.

export const PROTOCOL_VERSION = 1;

export interface SceneMsg {
  v: 1;
  type: "scene";
  width: number;
  height: number;
  resolution: number;
  occupied: [number, number][];
  goals: [number, number][];
  guide_goal: number;
  affordance: [number, number][];
  name: string;
}

export interface MetricsMsg {
  success: boolean;
  ambiguity_ratio: number;
  discomfort_ratio_p: number;
  discomfort_ratio_i: number;
}

export interface StateFrame {
  v: 1;
  type: "state-frame";
  t: number;
  human: [number, number];
  robot: [number, number];
  behavior: "lead" | "point" | null;
  distance: number;
  in_affordance: boolean;
  layer: number[][];
  metrics: MetricsMsg;
}

export interface TrialEnd {
  v: 1;
  type: "trial-end";
  outcome: "success" | "timeout" | "aborted";
  metrics: MetricsMsg;
}

export interface ErrorMsg {
  v: 1;
  type: "error";
  message: string;
}

export type ServerMessage = SceneMsg | StateFrame | TrialEnd | ErrorMsg;

export interface JoinMsg {
  v: 1;
  type: "join" | "reset";
}

export interface HumanMoveMsg {
  v: 1;
  type: "human-move";
  dx: number;
  dy: number;
}

export type ClientMessage = JoinMsg | HumanMoveMsg;

export function joinMessage(): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "join" });
}

export function resetMessage(): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "reset" });
}

export function humanMoveMessage(dx: number, dy: number): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "human-move", dx, dy });
}

const SERVER_TYPES = new Set(["scene", "state-frame", "trial-end", "error"]);

/** Parse one raw frame; returns null for anything malformed (callers log and skip). */
export function parseServerMessage(raw: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const msg = doc as { v?: unknown; type?: unknown };
  if (msg.v !== PROTOCOL_VERSION || typeof msg.type !== "string") return null;
  if (!SERVER_TYPES.has(msg.type)) return null;
  if (msg.type === "state-frame") {
    const f = doc as Partial<StateFrame>;
    if (typeof f.t !== "number" || !Array.isArray(f.human) || !Array.isArray(f.robot)) {
      return null;
    }
  }
  if (msg.type === "scene") {
    const s = doc as Partial<SceneMsg>;
    if (typeof s.width !== "number" || typeof s.height !== "number") return null;
  }
  return doc as ServerMessage;
}
