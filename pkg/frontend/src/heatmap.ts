/** Raster rendering of per-stage activation heatmaps.
 *
 * The service supplies integer grayscale levels 0-255; cells are filled
 * with exactly rgb(level, level, level) — no rescaling on this side.
 */

import type { HeatmapStage } from "./types.js";

/** The subset of CanvasRenderingContext2D the renderer needs. */
export interface FillContext {
  fillStyle: string | CanvasGradient | CanvasPattern;
  fillRect(x: number, y: number, w: number, h: number): void;
}

export function levelToStyle(level: number): string {
  return `rgb(${level}, ${level}, ${level})`;
}

export function stageSize(stage: HeatmapStage, cellPx: number): { width: number; height: number } {
  return { width: stage.cols * cellPx, height: stage.rows * cellPx };
}

export function drawStage(ctx: FillContext, stage: HeatmapStage, cellPx: number): void {
  for (let r = 0; r < stage.rows; r++) {
    for (let c = 0; c < stage.cols; c++) {
      ctx.fillStyle = levelToStyle(stage.levels[r * stage.cols + c]);
      ctx.fillRect(c * cellPx, r * cellPx, cellPx, cellPx);
    }
  }
}

/** Draw a raw pixel grid (values in [0, 1]) for the dataset gallery. */
export function drawPixels(
  ctx: FillContext,
  pixels: number[],
  cols: number,
  cellPx: number,
): void {
  const rows = Math.ceil(pixels.length / cols);
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const value = pixels[r * cols + c] ?? 0;
      ctx.fillStyle = levelToStyle(Math.round(255 * value));
      ctx.fillRect(c * cellPx, r * cellPx, cellPx, cellPx);
    }
  }
}
