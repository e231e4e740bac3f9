// Wires capture, batching, the event stream, and the dashboard together.
// Kept DOM-library-free so tests can drive it inside jsdom.

import type { SessionApi } from "./api.js";
import type { FetchLike } from "./api.js";
import { InputBatcher } from "./batcher.js";
import { Dashboard } from "./dashboard.js";
import { subscribeSnapshots, Subscription } from "./sse.js";
import type { Bit, Role, Snapshot } from "./types.js";

export interface ControllerOptions {
  role?: Role; // default: single-player alternate split
  fetchImpl?: FetchLike; // forwarded to the SSE fallback reader
  historyTail?: number;
}

export class SessionController {
  readonly dashboard: Dashboard;
  private batcher: InputBatcher;
  private subscription: Subscription | null = null;
  private sessionId: string | null = null;
  private readonly role: Role;
  private readonly history: Bit[] = [];
  private readonly historyTail: number;
  private lastSnapshot: Snapshot | null = null;
  private keyHandler = (event: KeyboardEvent) => {
    if (event.key === "0" || event.key === "1") {
      this.press(Number(event.key) as Bit);
    }
  };

  constructor(
    private readonly doc: Document,
    private readonly api: SessionApi,
    private readonly options: ControllerOptions = {},
  ) {
    this.role = options.role ?? "interleaved";
    this.historyTail = options.historyTail ?? 32;
    this.dashboard = new Dashboard(this.el("dashboard"));
    this.batcher = new InputBatcher(
      async (bits) => {
        if (!this.sessionId) throw new Error("no session");
        await this.api.pushBits(this.sessionId, this.role, bits);
      },
      (state) => {
        this.el("offline-badge").hidden = !state.offline;
        this.el("pending").textContent = String(state.pending);
      },
    );
    this.el("btn-zero").addEventListener("click", () => this.press(0));
    this.el("btn-one").addEventListener("click", () => this.press(1));
    this.el("btn-start").addEventListener("click", () => void this.start());
    this.el("btn-stop").addEventListener("click", () => void this.stop());
    this.setConnected(false);
  }

  private el(id: string): HTMLElement {
    const node = this.doc.getElementById(id);
    if (!node) throw new Error(`missing #${id} in page skeleton`);
    return node;
  }

  private setConnected(connected: boolean): void {
    this.el("session-state").textContent = connected
      ? `session ${this.sessionId}`
      : "no session";
    (this.el("btn-start") as HTMLButtonElement).disabled = connected;
    (this.el("btn-stop") as HTMLButtonElement).disabled = !connected;
  }

  snapshot(): Snapshot | null {
    return this.lastSnapshot;
  }

  async start(preset: "chsh" | "mdl" = this.presetFromSelect()): Promise<string> {
    if (this.sessionId) return this.sessionId;
    const id = await this.api.createSession({ preset });
    this.sessionId = id;
    this.subscription = subscribeSnapshots(
      this.api.eventsUrl(id),
      (snap) => {
        this.lastSnapshot = snap;
        this.dashboard.update(snap);
      },
      this.options.fetchImpl,
    );
    this.doc.addEventListener("keydown", this.keyHandler);
    this.setConnected(true);
    return id;
  }

  press(bit: Bit): void {
    if (!this.sessionId) return;
    this.history.push(bit);
    if (this.history.length > this.historyTail) this.history.shift();
    this.el("history").textContent = this.history.join("");
    this.batcher.press(bit);
  }

  async flush(): Promise<void> {
    await this.batcher.flush();
  }

  /** Close the session; idempotent. Leaves a log download link behind. */
  async stop(): Promise<void> {
    if (!this.sessionId) return;
    const id = this.sessionId;
    await this.batcher.flush();
    this.doc.removeEventListener("keydown", this.keyHandler);
    await this.api.closeSession(id);
    if (this.subscription) {
      // the service pushes one final closed snapshot and ends the stream;
      // wait for it so the numbers on screen cover the whole log
      await Promise.race([
        this.subscription.done,
        new Promise((resolve) => setTimeout(resolve, 3000)),
      ]);
      this.subscription.close();
    }
    this.subscription = null;
    const link = this.el("log-link") as HTMLAnchorElement;
    link.href = this.api.logUrl(id);
    link.hidden = false;
    link.textContent = `download log (${id})`;
    this.sessionId = null;
    this.setConnected(false);
  }

  private presetFromSelect(): "chsh" | "mdl" {
    const select = this.doc.getElementById("preset") as HTMLSelectElement | null;
    return select?.value === "chsh" ? "chsh" : "mdl";
  }
}

export function mount(doc: Document, api: SessionApi,
                      options: ControllerOptions = {}): SessionController {
  return new SessionController(doc, api, options);
}
