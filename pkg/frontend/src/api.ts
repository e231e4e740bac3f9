// Thin typed client for the session service. A fetch implementation is
// injectable so tests (and non-browser runs) can supply their own.

import type { Role, Snapshot } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface SessionApi {
  createSession(body: Record<string, unknown>): Promise<string>;
  pushBits(id: string, role: Role, bits: string): Promise<number>;
  getStats(id: string): Promise<Snapshot>;
  closeSession(id: string): Promise<void>;
  eventsUrl(id: string): string;
  logUrl(id: string): string;
}

async function asJson(response: Response): Promise<any> {
  if (!response.ok) {
    throw new Error(`HTTP ${response.status}: ${await response.text()}`);
  }
  return response.json();
}

export function createApi(baseUrl: string, fetchImpl?: FetchLike): SessionApi {
  const doFetch: FetchLike = fetchImpl ?? ((url, init) => fetch(url, init));
  const json = { "Content-Type": "application/json" };
  return {
    async createSession(body) {
      const response = await doFetch(`${baseUrl}/sessions`, {
        method: "POST",
        headers: json,
        body: JSON.stringify(body),
      });
      return (await asJson(response)).id as string;
    },
    async pushBits(id, role, bits) {
      const response = await doFetch(`${baseUrl}/sessions/${id}/bits`, {
        method: "POST",
        headers: json,
        body: JSON.stringify({ role, bits }),
      });
      return (await asJson(response)).accepted as number;
    },
    async getStats(id) {
      return (await asJson(await doFetch(`${baseUrl}/sessions/${id}/stats`))) as Snapshot;
    },
    async closeSession(id) {
      await asJson(await doFetch(`${baseUrl}/sessions/${id}`, { method: "DELETE" }));
    },
    eventsUrl(id) {
      return `${baseUrl}/sessions/${id}/events`;
    },
    logUrl(id) {
      return `${baseUrl}/sessions/${id}/log`;
    },
  };
}
