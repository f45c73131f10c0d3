import { describe, expect, it } from "vitest";

import { drawPixels, drawStage, levelToStyle, stageSize } from "../src/heatmap.js";
import type { FillContext } from "../src/heatmap.js";

class RecordingContext implements FillContext {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  rects: { style: string; x: number; y: number; w: number; h: number }[] = [];

  fillRect(x: number, y: number, w: number, h: number): void {
    this.rects.push({ style: String(this.fillStyle), x, y, w, h });
  }
}

describe("heatmap rendering", () => {
  it("maps levels to exact gray styles", () => {
    expect(levelToStyle(0)).toBe("rgb(0, 0, 0)");
    expect(levelToStyle(255)).toBe("rgb(255, 255, 255)");
    expect(levelToStyle(128)).toBe("rgb(128, 128, 128)");
  });

  it("fills one cell per unit with the API's levels untouched", () => {
    const ctx = new RecordingContext();
    const stage = { name: "dense_1", rows: 1, cols: 4, levels: [0, 64, 128, 255] };
    drawStage(ctx, stage, 10);
    expect(ctx.rects).toHaveLength(4);
    expect(ctx.rects.map((r) => r.style)).toEqual([
      "rgb(0, 0, 0)",
      "rgb(64, 64, 64)",
      "rgb(128, 128, 128)",
      "rgb(255, 255, 255)",
    ]);
    expect(ctx.rects[3]).toMatchObject({ x: 30, y: 0, w: 10, h: 10 });
  });

  it("lays grids out row-major", () => {
    const ctx = new RecordingContext();
    const stage = { name: "input", rows: 2, cols: 2, levels: [1, 2, 3, 4] };
    drawStage(ctx, stage, 5);
    expect(ctx.rects.map((r) => [r.x, r.y])).toEqual([
      [0, 0],
      [5, 0],
      [0, 5],
      [5, 5],
    ]);
  });

  it("reports pixel dimensions for canvas sizing", () => {
    expect(stageSize({ name: "x", rows: 6, cols: 6, levels: [] }, 8)).toEqual({
      width: 48,
      height: 48,
    });
  });

  it("renders gallery pixels scaled to bytes", () => {
    const ctx = new RecordingContext();
    drawPixels(ctx, [0, 1, 0.5, 1], 2, 4);
    expect(ctx.rects.map((r) => r.style)).toEqual([
      "rgb(0, 0, 0)",
      "rgb(255, 255, 255)",
      "rgb(128, 128, 128)",
      "rgb(255, 255, 255)",
    ]);
  });
});
