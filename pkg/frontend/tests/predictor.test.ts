import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { LivePredictor } from "../src/predictor.js";
import type { PredictPayload } from "../src/types.js";

function payloadFor(tag: number): PredictPayload {
  return {
    prediction: {
      class_index: tag,
      class_name: String(tag),
      probabilities: [1],
      status: "confident",
    },
    probabilities: [1],
    activations: [],
  };
}

describe("LivePredictor", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("debounces rapid edits into one request", async () => {
    const calls: number[][] = [];
    const predictor = new LivePredictor(
      async (pixels) => {
        calls.push(pixels);
        return payloadFor(0);
      },
      () => {},
      () => {},
      150,
    );
    predictor.request([1]);
    predictor.request([2]);
    predictor.request([3]);
    await vi.advanceTimersByTimeAsync(149);
    expect(calls).toHaveLength(0);
    await vi.advanceTimersByTimeAsync(2);
    expect(calls).toEqual([[3]]);
  });

  it("never keeps more than one request in flight", async () => {
    let maxInFlight = 0;
    const predictor = new LivePredictor(
      (pixels, signal) =>
        new Promise((resolve, reject) => {
          signal.addEventListener("abort", () => reject(new Error("aborted")));
          setTimeout(() => resolve(payloadFor(pixels[0])), 1000);
        }),
      () => {},
      () => {},
      10,
    );
    const probe = setInterval(() => {
      maxInFlight = Math.max(maxInFlight, predictor.inFlight);
    }, 5);
    predictor.request([1]);
    await vi.advanceTimersByTimeAsync(50); // first fires, still pending
    predictor.request([2]); // supersedes: aborts the pending one
    await vi.advanceTimersByTimeAsync(2000);
    clearInterval(probe);
    expect(maxInFlight).toBeLessThanOrEqual(1);
  });

  it("drops results from superseded requests", async () => {
    const shown: number[] = [];
    let delay = 500;
    const predictor = new LivePredictor(
      (pixels) =>
        new Promise((resolve) => {
          const d = delay;
          delay = 10; // second request resolves faster
          setTimeout(() => resolve(payloadFor(pixels[0])), d);
        }),
      (payload) => shown.push(payload.prediction.class_index),
      () => {},
      10,
    );
    void predictor.flush([1]);
    await vi.advanceTimersByTimeAsync(5);
    void predictor.flush([2]);
    await vi.advanceTimersByTimeAsync(1000);
    expect(shown).toEqual([2]);
  });

  it("reports errors only for the live request", async () => {
    const errors: unknown[] = [];
    const predictor = new LivePredictor(
      () => Promise.reject(new Error("boom")),
      () => {},
      (e) => errors.push(e),
      10,
    );
    predictor.request([1]);
    await vi.advanceTimersByTimeAsync(50);
    expect(errors).toHaveLength(1);
  });

  it("flush bypasses the debounce delay", async () => {
    const calls: number[][] = [];
    const predictor = new LivePredictor(
      async (pixels) => {
        calls.push(pixels);
        return payloadFor(0);
      },
      () => {},
      () => {},
      150,
    );
    await predictor.flush([9]);
    expect(calls).toEqual([[9]]);
  });
});
