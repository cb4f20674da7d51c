// Scene rendering as a pure list of draw operations plus a thin canvas executor.
// Color code: pointing guide draws red, leading guide draws green.

import { SceneMsg, StateFrame } from "./protocol.js";

export const LEAD_COLOR = "#2e8b57"; // green
export const POINT_COLOR = "#d62728"; // red
export const IDLE_COLOR = "#888888";

export function behaviorColor(behavior: "lead" | "point" | null): string {
  if (behavior === "point") return POINT_COLOR;
  if (behavior === "lead") return LEAD_COLOR;
  return IDLE_COLOR;
}

export interface RectOp {
  kind: "rect";
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
  alpha?: number;
}

export interface CircleOp {
  kind: "circle";
  x: number;
  y: number;
  r: number;
  color: string;
  alpha?: number;
}

export interface TextOp {
  kind: "text";
  x: number;
  y: number;
  text: string;
  color: string;
}

export type DrawOp = RectOp | CircleOp | TextOp;

export interface Viewport {
  cellPx: number;
  heightCells: number;
}

/** World meters -> canvas pixels (canvas y is flipped). */
export function toCanvas(v: Viewport, resolution: number, x: number, y: number): [number, number] {
  const px = (x / resolution) * v.cellPx;
  const py = (v.heightCells - y / resolution) * v.cellPx;
  return [px, py];
}

export function sceneDrawOps(scene: SceneMsg, v: Viewport): DrawOp[] {
  const ops: DrawOp[] = [];
  const cell = (cx: number, cy: number, color: string, alpha?: number): RectOp => ({
    kind: "rect",
    x: cx * v.cellPx,
    y: (v.heightCells - 1 - cy) * v.cellPx,
    w: v.cellPx,
    h: v.cellPx,
    color,
    alpha,
  });
  ops.push({ kind: "rect", x: 0, y: 0, w: scene.width * v.cellPx,
             h: scene.height * v.cellPx, color: "#fafafa" });
  for (const [cx, cy] of scene.affordance) ops.push(cell(cx, cy, "#c9a0dc", 0.6));
  for (const [cx, cy] of scene.occupied) ops.push(cell(cx, cy, "#333333"));
  scene.goals.forEach(([cx, cy], i) => {
    ops.push(cell(cx, cy, i === scene.guide_goal ? "#ffd700" : "#9ecae1", 0.9));
    ops.push({ kind: "text", x: (cx + 0.25) * v.cellPx, y: (v.heightCells - cy - 0.3) * v.cellPx,
               text: i === scene.guide_goal ? "G" : "g", color: "#111111" });
  });
  return ops;
}

export function frameDrawOps(scene: SceneMsg, frame: StateFrame, v: Viewport,
                             showHeatmap: boolean): DrawOp[] {
  const ops: DrawOp[] = [];
  if (showHeatmap && frame.layer.length === scene.height) {
    let peak = 0;
    for (const row of frame.layer) for (const p of row) peak = Math.max(peak, p);
    if (peak > 0) {
      for (let cy = 0; cy < scene.height; cy++) {
        for (let cx = 0; cx < scene.width; cx++) {
          const p = frame.layer[cy][cx];
          if (p > 0) {
            ops.push({ kind: "rect", x: cx * v.cellPx, y: (v.heightCells - 1 - cy) * v.cellPx,
                       w: v.cellPx, h: v.cellPx, color: "#ff8c00", alpha: 0.65 * (p / peak) });
          }
        }
      }
    }
  }
  const [hx, hy] = toCanvas(v, scene.resolution, frame.human[0], frame.human[1]);
  const [rx, ry] = toCanvas(v, scene.resolution, frame.robot[0], frame.robot[1]);
  ops.push({ kind: "circle", x: rx, y: ry, r: v.cellPx * 0.45,
             color: behaviorColor(frame.behavior) });
  ops.push({ kind: "circle", x: hx, y: hy, r: v.cellPx * 0.38, color: "#1f77b4" });
  return ops;
}

export function drawTo(ctx: CanvasRenderingContext2D, ops: DrawOp[]): void {
  for (const op of ops) {
    ctx.globalAlpha = op.kind === "text" ? 1 : op.alpha ?? 1;
    ctx.fillStyle = op.color;
    if (op.kind === "rect") {
      ctx.fillRect(op.x, op.y, op.w, op.h);
    } else if (op.kind === "circle") {
      ctx.beginPath();
      ctx.arc(op.x, op.y, op.r, 0, 2 * Math.PI);
      ctx.fill();
    } else {
      ctx.font = "12px sans-serif";
      ctx.fillText(op.text, op.x, op.y);
    }
  }
  ctx.globalAlpha = 1;
}
