// Key presses buffer locally and flush as batched POSTs: at most 64 bits per
// request, or whatever accumulated after 250 ms, whichever comes first.
// Human burst rates must never translate into one request per keypress.
// On transport failure the bits stay buffered (oldest first) and are retried
// on the next flush tick; the UI shows an offline badge meanwhile.

import type { Bit } from "./types.js";

export const MAX_BATCH = 64;
export const FLUSH_INTERVAL_MS = 250;

export type SendFn = (bits: string) => Promise<void>;

export interface BatcherState {
  pending: number;
  offline: boolean;
  sentBits: number;
}

export class InputBatcher {
  private buffer: Bit[] = [];
  private timer: ReturnType<typeof setTimeout> | null = null;
  private sending = false;
  private offline = false;
  private sentBits = 0;

  constructor(
    private readonly send: SendFn,
    private readonly onState?: (state: BatcherState) => void,
  ) {}

  state(): BatcherState {
    return { pending: this.buffer.length, offline: this.offline, sentBits: this.sentBits };
  }

  press(bit: Bit): void {
    this.buffer.push(bit);
    if (this.buffer.length >= MAX_BATCH) {
      void this.flush();
    } else if (this.timer === null) {
      this.timer = setTimeout(() => void this.flush(), FLUSH_INTERVAL_MS);
    }
    this.notify();
  }

  /** Send everything buffered (in order). Resolves when the attempt finishes. */
  async flush(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.sending) return;
    this.sending = true;
    try {
      while (this.buffer.length > 0) {
        const batch = this.buffer.slice(0, MAX_BATCH);
        try {
          await this.send(batch.join(""));
        } catch {
          // keep the bits, flag offline, retry on a later tick
          this.offline = true;
          this.scheduleRetry();
          return;
        }
        this.buffer.splice(0, batch.length);
        this.sentBits += batch.length;
        this.offline = false;
      }
    } finally {
      this.sending = false;
      this.notify();
    }
  }

  private scheduleRetry(): void {
    if (this.timer === null) {
      this.timer = setTimeout(() => void this.flush(), FLUSH_INTERVAL_MS);
    }
  }

  private notify(): void {
    this.onState?.(this.state());
  }
}
