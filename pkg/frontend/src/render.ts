/** Canvas rendering of the memorisation map.
 *
 * All drawing goes through the Canvas2D subset below so the render path is
 * testable with a recording stub; no DOM types are required here.
 */

import type { Bounds, MapPoint, Metric } from "./api.js";
import type { Scales } from "./scales.js";

export interface Canvas2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

/** Colour ramp for a metric value in [0, 1]: dark blue at 0 (diagonal) to
 * dark red at 1, matching the map convention. */
export function colorFor(value: number): string {
  const v = Math.min(1, Math.max(0, value));
  const hue = 240 - 240 * v; // blue -> red
  const lightness = 42 - 12 * Math.abs(v - 0.5);
  return `hsl(${hue.toFixed(0)}, 78%, ${lightness.toFixed(0)}%)`;
}

function drawFrame(ctx: Canvas2D, axis: Bounds, scales: Scales): void {
  ctx.strokeStyle = "#444";
  ctx.lineWidth = 1;
  ctx.strokeRect(
    scales.plotLeft,
    scales.plotTop,
    scales.plotRight - scales.plotLeft,
    scales.plotBottom - scales.plotTop,
  );
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(axis.minTm.toFixed(2), scales.plotLeft, scales.plotBottom + 16);
  ctx.fillText(axis.maxTm.toFixed(2), scales.plotRight - 24, scales.plotBottom + 16);
  ctx.fillText(axis.minGs.toFixed(2), 8, scales.plotBottom);
  ctx.fillText(axis.maxGs.toFixed(2), 8, scales.plotTop + 10);
  ctx.fillText("training memorisation", scales.plotLeft + 8, scales.plotBottom + 32);
  ctx.fillText("generalisation score", 8, scales.plotTop - 2);
}

function drawDiagonal(ctx: Canvas2D, axis: Bounds, scales: Scales): void {
  // cm = 0 guide: the tm = gs line, clipped to the viewport
  const lo = Math.max(axis.minTm, axis.minGs);
  const hi = Math.min(axis.maxTm, axis.maxGs);
  if (lo >= hi) return;
  ctx.strokeStyle = "#999";
  ctx.lineWidth = 1;
  ctx.globalAlpha = 0.8;
  ctx.beginPath();
  ctx.moveTo(scales.xToPixel(lo), scales.yToPixel(lo));
  ctx.lineTo(scales.xToPixel(hi), scales.yToPixel(hi));
  ctx.stroke();
  ctx.globalAlpha = 1;
}

export interface RenderResult {
  glyphs: number;
}

/** Draw the scatter; returns how many point glyphs were painted. */
export function renderMap(
  ctx: Canvas2D,
  points: readonly MapPoint[],
  axis: Bounds,
  metric: Metric,
  scales: Scales,
  width: number,
  height: number,
): RenderResult {
  ctx.clearRect(0, 0, width, height);
  drawFrame(ctx, axis, scales);
  drawDiagonal(ctx, axis, scales);
  const size = points.length > 20000 ? 2 : 3;
  ctx.globalAlpha = points.length > 5000 ? 0.45 : 0.8;
  let glyphs = 0;
  for (const p of points) {
    ctx.fillStyle = colorFor(p[metric]);
    ctx.fillRect(scales.xToPixel(p.tm) - size / 2, scales.yToPixel(p.gs) - size / 2, size, size);
    glyphs += 1;
  }
  ctx.globalAlpha = 1;
  return { glyphs };
}

export function renderBrush(ctx: Canvas2D, brush: Bounds | null, scales: Scales): void {
  if (brush === null) return;
  const x = scales.xToPixel(brush.minTm);
  const y = scales.yToPixel(brush.maxGs);
  const w = scales.xToPixel(brush.maxTm) - x;
  const h = scales.yToPixel(brush.minGs) - y;
  ctx.globalAlpha = 0.15;
  ctx.fillStyle = "#3366cc";
  ctx.fillRect(x, y, w, h);
  ctx.globalAlpha = 1;
  ctx.strokeStyle = "#3366cc";
  ctx.lineWidth = 1.5;
  ctx.strokeRect(x, y, w, h);
}

export function renderError(ctx: Canvas2D, message: string, width: number, height: number): void {
  // failed fetches must never leave stale points on screen
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#b00020";
  ctx.font = "14px sans-serif";
  ctx.fillText(`API error: ${message}`, 24, height / 2);
}
