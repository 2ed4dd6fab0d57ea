// Canvas rendering of the live scene: belief map, plan, robot + trail,
// trajectory reference point, obstacle discs, VFH histogram rose, and the
// tracking-error sparkline.

import type { Camera } from "./camera.js";
import type { ViewState } from "./state.js";

const COLOR_FREE = "#f5f5f2";
const COLOR_OCCUPIED = "#262a2e";
const COLOR_UNKNOWN = "#b9bdb9";
const COLOR_PLAN = "#d33030";
const COLOR_TRAIL = "#1f5fd0";
const COLOR_REF = "#e69a1f";
const COLOR_GOAL = "#188c3c";
const COLOR_OBSTACLE = "rgba(150, 40, 170, 0.75)";
const MODE_COLORS: Record<string, string> = {
  TRACKING: "#1f5fd0",
  AVOIDING: "#d37f16",
  REPLANNING: "#8123a8",
  ARRIVED: "#188c3c",
  FAILED: "#c22121",
};

export function renderScene(
  ctx: CanvasRenderingContext2D,
  view: ViewState,
  camera: Camera,
): void {
  ctx.fillStyle = "#dfe2df";
  ctx.fillRect(0, 0, camera.viewWidth, camera.viewHeight);
  if (!view.hello || !view.grid) return;
  drawGrid(ctx, view, camera);
  drawPlan(ctx, view, camera);
  drawTrail(ctx, view, camera);
  drawObstacles(ctx, view, camera);
  drawGoal(ctx, view, camera);
  drawReference(ctx, view, camera);
  drawRobot(ctx, view, camera);
  drawHistogramRose(ctx, view, camera);
}

function drawGrid(ctx: CanvasRenderingContext2D, view: ViewState, camera: Camera): void {
  const { width, height, resolution, origin } = view.hello!.map;
  const grid = view.grid!;
  const [left, bottom] = camera.toScreen(origin[0], origin[1]);
  const [right, top] = camera.toScreen(
    origin[0] + width * resolution, origin[1] + height * resolution);
  ctx.fillStyle = COLOR_UNKNOWN;
  ctx.fillRect(left, top, right - left, bottom - top);
  const cellPx = resolution * camera.state.scale;
  for (let row = 0; row < height; row++) {
    for (let col = 0; col < width; col++) {
      const state = grid.stateAt(col, row);
      if (state === -1) continue;
      ctx.fillStyle = state === 1 ? COLOR_OCCUPIED : COLOR_FREE;
      const [sx, sy] = camera.toScreen(
        origin[0] + col * resolution, origin[1] + (row + 1) * resolution);
      ctx.fillRect(sx, sy, cellPx + 0.5, cellPx + 0.5);
    }
  }
}

function drawPolyline(
  ctx: CanvasRenderingContext2D,
  camera: Camera,
  xs: ArrayLike<number>,
  ys: ArrayLike<number>,
  color: string,
  lineWidth: number,
): void {
  if (xs.length < 2) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = lineWidth;
  ctx.beginPath();
  for (let i = 0; i < xs.length; i++) {
    const [sx, sy] = camera.toScreen(xs[i], ys[i]);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  }
  ctx.stroke();
}

function drawPlan(ctx: CanvasRenderingContext2D, view: ViewState, camera: Camera): void {
  if (!view.plan) return;
  drawPolyline(ctx, camera, view.plan.xs, view.plan.ys, COLOR_PLAN, 2);
}

function drawTrail(ctx: CanvasRenderingContext2D, view: ViewState, camera: Camera): void {
  const xs = view.trail.map((p) => p[0]);
  const ys = view.trail.map((p) => p[1]);
  drawPolyline(ctx, camera, xs, ys, COLOR_TRAIL, 2);
}

function drawObstacles(ctx: CanvasRenderingContext2D, view: ViewState, camera: Camera): void {
  if (!view.frame) return;
  ctx.fillStyle = COLOR_OBSTACLE;
  for (const obstacle of view.frame.obstacles) {
    const [sx, sy] = camera.toScreen(obstacle.x, obstacle.y);
    ctx.beginPath();
    ctx.arc(sx, sy, obstacle.r * camera.state.scale, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function drawGoal(ctx: CanvasRenderingContext2D, view: ViewState, camera: Camera): void {
  if (!view.frame) return;
  const [sx, sy] = camera.toScreen(view.frame.goal[0], view.frame.goal[1]);
  ctx.strokeStyle = COLOR_GOAL;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(sx, sy, 8, 0, 2 * Math.PI);
  ctx.moveTo(sx - 11, sy);
  ctx.lineTo(sx + 11, sy);
  ctx.moveTo(sx, sy - 11);
  ctx.lineTo(sx, sy + 11);
  ctx.stroke();
}

function drawReference(ctx: CanvasRenderingContext2D, view: ViewState, camera: Camera): void {
  const ref = view.frame?.ref;
  if (!ref) return;
  const [sx, sy] = camera.toScreen(ref[0], ref[1]);
  ctx.fillStyle = COLOR_REF;
  ctx.beginPath();
  ctx.arc(sx, sy, 4, 0, 2 * Math.PI);
  ctx.fill();
}

function drawRobot(ctx: CanvasRenderingContext2D, view: ViewState, camera: Camera): void {
  if (!view.frame) return;
  const [x, y, theta] = view.frame.pose;
  const [sx, sy] = camera.toScreen(x, y);
  const radius = 0.15 * camera.state.scale;
  ctx.fillStyle = MODE_COLORS[view.frame.mode] ?? "#444";
  ctx.beginPath();
  ctx.arc(sx, sy, radius, 0, 2 * Math.PI);
  ctx.fill();
  ctx.strokeStyle = "#ffffff";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(sx, sy);
  ctx.lineTo(sx + radius * 1.4 * Math.cos(theta), sy - radius * 1.4 * Math.sin(theta));
  ctx.stroke();
}

export function histogramSpokes(
  densities: number[],
  maxLength: number,
): Array<{ angle: number; length: number; blocked: boolean }> {
  const peak = Math.max(...densities, 1e-9);
  const sectorWidth = (2 * Math.PI) / densities.length;
  return densities.map((density, i) => ({
    angle: i * sectorWidth,
    length: (density / peak) * maxLength,
    blocked: density >= 1.0,
  }));
}

function drawHistogramRose(ctx: CanvasRenderingContext2D, view: ViewState, camera: Camera): void {
  const frame = view.frame;
  if (!frame || !frame.histogram || frame.mode !== "AVOIDING") return;
  const [x, y, theta] = frame.pose;
  const [cx, cy] = camera.toScreen(x, y);
  const rose = histogramSpokes(frame.histogram.densities, 0.9 * camera.state.scale);
  for (const spoke of rose) {
    const world = theta + spoke.angle;
    ctx.strokeStyle = spoke.blocked ? "rgba(200,40,40,0.8)" : "rgba(60,160,60,0.5)";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + spoke.length * Math.cos(world), cy - spoke.length * Math.sin(world));
    ctx.stroke();
  }
  const sel = frame.histogram.theta_sel;
  if (sel !== null) {
    const world = theta + sel;
    ctx.strokeStyle = "#e69a1f";
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + camera.state.scale * Math.cos(world),
               cy - camera.state.scale * Math.sin(world));
    ctx.stroke();
  }
}

export function renderErrorPlot(
  ctx: CanvasRenderingContext2D,
  view: ViewState,
  width: number,
  height: number,
): void {
  ctx.fillStyle = "#1b1e22";
  ctx.fillRect(0, 0, width, height);
  const samples = view.errors;
  if (samples.length < 2) return;
  const peak = Math.max(
    0.2,
    ...samples.map((s) => Math.max(Math.abs(s.e1), Math.abs(s.e2), Math.abs(s.e3))),
  );
  const series: Array<{ key: "e1" | "e2" | "e3"; color: string }> = [
    { key: "e1", color: "#6fa8ff" },
    { key: "e2", color: "#ffb36f" },
    { key: "e3", color: "#8fe08f" },
  ];
  ctx.strokeStyle = "#3a3f45";
  ctx.beginPath();
  ctx.moveTo(0, height / 2);
  ctx.lineTo(width, height / 2);
  ctx.stroke();
  for (const { key, color } of series) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.4;
    ctx.beginPath();
    samples.forEach((s, i) => {
      const px = (i / (samples.length - 1)) * width;
      const py = height / 2 - (s[key] / peak) * (height / 2 - 4);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
}
