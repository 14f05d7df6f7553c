// Session state: an append-only history of verdicts, newest rendered first.
// At most one predict request matters at a time; responses for superseded
// submissions are discarded.

import { ApiClient, Prediction } from "./api.js";

export interface SessionEntry {
  submittedText: string;
  prediction: Prediction;
  timestamp: number;
}

export type SubmitOutcome =
  | { kind: "ok"; entry: SessionEntry }
  | { kind: "stale" }
  | { kind: "error"; message: string };

export class SessionStore {
  private entries: SessionEntry[] = [];
  private sequence = 0;
  private listeners: Array<() => void> = [];

  constructor(
    private readonly api: ApiClient,
    private readonly now: () => number = Date.now,
  ) {}

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  /** History entries, newest first. */
  history(): SessionEntry[] {
    return [...this.entries].reverse();
  }

  get pending(): boolean {
    return this.inflight > 0;
  }

  private inflight = 0;

  async submit(text: string): Promise<SubmitOutcome> {
    const trimmed = text.trim();
    if (!trimmed) return { kind: "error", message: "Enter a claim first." };
    const mySequence = ++this.sequence;
    this.inflight += 1;
    this.notify();
    try {
      const prediction = await this.api.predict(text);
      if (mySequence !== this.sequence) return { kind: "stale" };
      const entry: SessionEntry = {
        submittedText: text,
        prediction,
        timestamp: this.now(),
      };
      this.entries.push(entry);
      return { kind: "ok", entry };
    } catch (err) {
      if (mySequence !== this.sequence) return { kind: "stale" };
      const message = err instanceof Error ? err.message : String(err);
      return { kind: "error", message };
    } finally {
      this.inflight -= 1;
      this.notify();
    }
  }
}
