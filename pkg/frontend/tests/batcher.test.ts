import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { FLUSH_INTERVAL_MS, InputBatcher, MAX_BATCH } from "../src/batcher.js";
import type { Bit } from "../src/types.js";

function collector() {
  const batches: string[] = [];
  let failNext = false;
  const send = vi.fn(async (bits: string) => {
    if (failNext) throw new Error("network down");
    batches.push(bits);
  });
  return { batches, send, setFail: (v: boolean) => (failNext = v) };
}

describe("InputBatcher", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("buffers a single press until the flush interval", async () => {
    const { batches, send } = collector();
    const batcher = new InputBatcher(send);
    batcher.press(0);
    expect(batcher.state().pending).toBe(1);
    expect(send).not.toHaveBeenCalled();
    await vi.advanceTimersByTimeAsync(FLUSH_INTERVAL_MS + 1);
    expect(batches).toEqual(["0"]);
    expect(batcher.state().pending).toBe(0);
  });

  it("sends exactly one request for a 64-press burst", async () => {
    const { batches, send } = collector();
    const batcher = new InputBatcher(send);
    for (let i = 0; i < MAX_BATCH; i++) batcher.press((i % 2) as Bit);
    await vi.runAllTimersAsync();
    expect(send).toHaveBeenCalledTimes(1);
    expect(batches[0]).toHaveLength(64);
  });

  it("splits oversized bursts and preserves order", async () => {
    const { batches, send } = collector();
    const batcher = new InputBatcher(send);
    const pressed: string[] = [];
    for (let i = 0; i < 100; i++) {
      const bit = (i % 3 === 0 ? 1 : 0) as Bit;
      pressed.push(String(bit));
      batcher.press(bit);
    }
    await vi.runAllTimersAsync();
    expect(batches.join("")).toBe(pressed.join(""));
    expect(batches.every((b) => b.length <= MAX_BATCH)).toBe(true);
  });

  it("keeps bits and raises the offline flag when the network fails", async () => {
    const { batches, send, setFail } = collector();
    const states: boolean[] = [];
    const batcher = new InputBatcher(send, (s) => states.push(s.offline));
    setFail(true);
    batcher.press(1);
    await vi.advanceTimersByTimeAsync(FLUSH_INTERVAL_MS + 1);
    expect(batcher.state().offline).toBe(true);
    expect(batcher.state().pending).toBe(1);
    expect(batches).toEqual([]);

    setFail(false);
    batcher.press(0);
    await vi.advanceTimersByTimeAsync(2 * FLUSH_INTERVAL_MS + 1);
    expect(batches).toEqual(["10"]); // retried in order, nothing lost
    expect(batcher.state().offline).toBe(false);
  });

  it("explicit flush is awaitable and immediate", async () => {
    const { batches, send } = collector();
    const batcher = new InputBatcher(send);
    batcher.press(1);
    batcher.press(1);
    await batcher.flush();
    expect(batches).toEqual(["11"]);
  });
});
