/** Debounced live prediction with in-flight cancellation.
 *
 * Grid edits arrive faster than we want to hit the API; requests are
 * debounced (trailing edge, default 150 ms) and at most one is ever in
 * flight: firing a new request aborts the previous one, and responses from
 * superseded requests are dropped.
 */

import type { PredictPayload } from "./types.js";

export type SendFn = (
  pixels: number[],
  signal: AbortSignal,
) => Promise<PredictPayload>;

export class LivePredictor {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private controller: AbortController | null = null;
  private sequence = 0;
  inFlight = 0;

  constructor(
    private readonly send: SendFn,
    private readonly onResult: (payload: PredictPayload, pixels: number[]) => void,
    private readonly onError: (error: unknown) => void,
    readonly delayMs = 150,
  ) {}

  /** Schedule a prediction for the latest grid contents. */
  request(pixels: number[]): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire(pixels);
    }, this.delayMs);
  }

  /** Fire immediately, skipping the debounce delay. */
  flush(pixels: number[]): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    return this.fire(pixels);
  }

  private async fire(pixels: number[]): Promise<void> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const ticket = ++this.sequence;
    this.inFlight += 1;
    try {
      const payload = await this.send(pixels, controller.signal);
      if (ticket === this.sequence) this.onResult(payload, pixels);
    } catch (error) {
      if (!controller.signal.aborted && ticket === this.sequence) {
        this.onError(error);
      }
    } finally {
      this.inFlight -= 1;
    }
  }
}
