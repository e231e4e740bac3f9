// Server-sent-events subscription. Browsers get a native EventSource; test
// and node environments fall back to reading the fetch body stream and
// parsing `data:` frames by hand.

import type { Snapshot } from "./types.js";
import type { FetchLike } from "./api.js";

export interface Subscription {
  close(): void;
  done: Promise<void>;
}

export function parseSseChunk(buffer: string): { events: string[]; rest: string } {
  const events: string[] = [];
  let rest = buffer;
  for (;;) {
    const cut = rest.indexOf("\n\n");
    if (cut < 0) break;
    const frame = rest.slice(0, cut);
    rest = rest.slice(cut + 2);
    const data = frame
      .split("\n")
      .filter((line) => line.startsWith("data:"))
      .map((line) => line.slice(5).trimStart())
      .join("\n");
    if (data) events.push(data);
  }
  return { events, rest };
}

export function subscribeSnapshots(
  url: string,
  onSnapshot: (snap: Snapshot) => void,
  fetchImpl?: FetchLike,
): Subscription {
  if (typeof EventSource !== "undefined" && !fetchImpl) {
    const source = new EventSource(url);
    let resolveDone: () => void;
    const done = new Promise<void>((resolve) => (resolveDone = resolve));
    source.onmessage = (event) => onSnapshot(JSON.parse(event.data) as Snapshot);
    source.onerror = () => {
      // the service ends the stream when a session closes
      source.close();
      resolveDone();
    };
    return {
      close: () => {
        source.close();
        resolveDone();
      },
      done,
    };
  }

  const doFetch: FetchLike = fetchImpl ?? ((u, init) => fetch(u, init));
  const controller = new AbortController();
  let reader: ReadableStreamDefaultReader<Uint8Array> | null = null;
  let closed = false;
  const done = (async () => {
    let response: Response;
    try {
      response = await doFetch(url, { signal: controller.signal });
    } catch {
      return;
    }
    reader = response.body?.getReader() ?? null;
    if (!reader) return;
    if (closed) {
      await reader.cancel().catch(() => {});
      return;
    }
    const decoder = new TextDecoder();
    let buffer = "";
    try {
      for (;;) {
        const { value, done: finished } = await reader.read();
        if (finished) break;
        buffer += decoder.decode(value, { stream: true });
        const { events, rest } = parseSseChunk(buffer);
        buffer = rest;
        for (const data of events) {
          onSnapshot(JSON.parse(data) as Snapshot);
        }
      }
    } catch {
      // aborted or dropped; subscriber sees the stream simply end
    }
  })();
  return {
    close: () => {
      closed = true;
      controller.abort();
      void reader?.cancel().catch(() => {});
    },
    done,
  };
}
