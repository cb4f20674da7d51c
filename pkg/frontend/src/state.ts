// View state: a pure reduction of server messages. Positions are only ever what
// the server last confirmed; stale or post-trial frames are dropped.

import { SceneMsg, ServerMessage, StateFrame, TrialEnd } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "closed";

export interface ViewState {
  scene: SceneMsg | null;
  frame: StateFrame | null;
  lastT: number;
  ended: TrialEnd | null;
  errors: string[];
  status: ConnectionStatus;
}

export function initialState(): ViewState {
  return { scene: null, frame: null, lastT: -1, ended: null, errors: [], status: "connecting" };
}

export function withStatus(state: ViewState, status: ConnectionStatus): ViewState {
  return { ...state, status };
}

export function reduce(state: ViewState, msg: ServerMessage): ViewState {
  switch (msg.type) {
    case "scene":
      // a scene message starts (or restarts) a trial
      return { ...state, scene: msg, frame: null, lastT: -1, ended: null };
    case "state-frame":
      if (state.ended !== null) return state;      // no updates after trial end
      if (msg.t <= state.lastT) return state;      // stale frame: ignore
      return { ...state, frame: msg, lastT: msg.t };
    case "trial-end":
      return { ...state, ended: msg };
    case "error":
      return { ...state, errors: [...state.errors, msg.message].slice(-10) };
  }
}
