/** Drawing-grid state: 36 cell intensities in [0, 1] plus the brush mode.
 * Pure data; the DOM layer renders from it and calls back into it. */

export type BrushMode = "paint" | "erase";

export const GRID_ROWS = 6;
export const GRID_COLS = 6;
export const GRID_CELLS = GRID_ROWS * GRID_COLS;

export class GridState {
  cells: number[];
  mode: BrushMode = "paint";
  /** Set when cells changed since the last acknowledged prediction. */
  dirty = false;

  constructor() {
    this.cells = new Array(GRID_CELLS).fill(0);
  }

  setCell(index: number, value: number): void {
    if (index < 0 || index >= GRID_CELLS) return;
    const clamped = Math.min(1, Math.max(0, value));
    if (this.cells[index] !== clamped) {
      this.cells[index] = clamped;
      this.dirty = true;
    }
  }

  applyBrush(index: number): void {
    this.setCell(index, this.mode === "paint" ? 1 : 0);
  }

  clear(): void {
    for (let i = 0; i < GRID_CELLS; i++) {
      if (this.cells[i] !== 0) this.dirty = true;
      this.cells[i] = 0;
    }
  }

  loadPattern(values: number[]): void {
    if (values.length !== GRID_CELLS) {
      throw new Error(`pattern must have ${GRID_CELLS} values`);
    }
    values.forEach((v, i) => this.setCell(i, v));
  }

  markClean(): void {
    this.dirty = false;
  }

  snapshot(): number[] {
    return this.cells.slice();
  }
}
