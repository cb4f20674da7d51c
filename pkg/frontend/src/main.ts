// Browser bootstrap: canvas, status banner, metrics panel, keyboard control.

import { SessionClient } from "./client.js";
import { KeyTracker } from "./input.js";
import { drawTo, frameDrawOps, sceneDrawOps, Viewport } from "./render.js";
import { initialState, reduce, ViewState, withStatus } from "./state.js";

const CELL_PX = 48;
const TICK_MS = 120;

let state: ViewState = initialState();
let showHeatmap = true;

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const metricsEl = document.getElementById("metrics")!;
const resetBtn = document.getElementById("reset") as HTMLButtonElement;
const heatmapToggle = document.getElementById("heatmap") as HTMLInputElement;

const keys = new KeyTracker();
window.addEventListener("keydown", (e) => {
  keys.down(e.code);
  if (["ArrowUp", "ArrowDown", "ArrowLeft", "ArrowRight"].includes(e.code)) e.preventDefault();
});
window.addEventListener("keyup", (e) => keys.up(e.code));
window.addEventListener("blur", () => keys.clear());

const url = `ws://${location.hostname}:8765/session`;
const client = new SessionClient(url, {
  onMessage: (msg) => {
    state = reduce(state, msg);
    render();
  },
  onStatus: (status) => {
    state = withStatus(state, status);
    render();
  },
});
client.connect();

resetBtn.addEventListener("click", () => {
  if (state.status === "closed") {
    state = initialState();
    client.connect();
  } else {
    client.reset();
  }
});
heatmapToggle.addEventListener("change", () => {
  showHeatmap = heatmapToggle.checked;
  render();
});

setInterval(() => {
  if (state.ended !== null || state.status !== "connected") return;
  const intent = keys.intent();
  if (intent !== null) client.sendIntent(intent.dx, intent.dy);
}, TICK_MS);

function render(): void {
  const scene = state.scene;
  banner.textContent = state.status === "connected"
    ? (state.ended ? `trial ended: ${state.ended.outcome}` : "connected - steer with WASD/arrows")
    : state.status;
  banner.className = state.status === "connected" ? "ok" : "warn";

  if (scene === null) return;
  const v: Viewport = { cellPx: CELL_PX, heightCells: scene.height };
  canvas.width = scene.width * CELL_PX;
  canvas.height = scene.height * CELL_PX;
  drawTo(ctx, sceneDrawOps(scene, v));
  if (state.frame !== null) {
    drawTo(ctx, frameDrawOps(scene, state.frame, v, showHeatmap));
    const m = state.frame.metrics;
    metricsEl.textContent =
      `t=${state.frame.t.toFixed(1)}s  behavior=${state.frame.behavior ?? "-"}  ` +
      `ambiguity=${m.ambiguity_ratio.toFixed(3)}  ` +
      `discomfort_p=${m.discomfort_ratio_p.toFixed(3)}  ` +
      `discomfort_i=${m.discomfort_ratio_i.toFixed(3)}`;
  }
  if (state.errors.length > 0) {
    console.warn("session errors:", state.errors[state.errors.length - 1]);
  }
}
