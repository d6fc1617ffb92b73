/** Review-screen state machine: a queue of pending candidates reviewed one
 * at a time, keyboard-first. Decisions are applied optimistically, rolled
 * back on a stale-snapshot conflict, and kept as unsynced drafts when the
 * network is down.
 */

import { ApiError, type ApiClient, type CandidateView, type Verdict } from "./api.js";

export interface UnsyncedDraft {
  candidate: CandidateView;
  verdict: Verdict;
}

export interface ReviewState {
  pending: CandidateView[];
  current: CandidateView | null;
  decided: number;
  drafts: UnsyncedDraft[];
  error: string | null;
}

export class ReviewController {
  private pending: CandidateView[] = [];
  private decided = 0;
  private drafts: UnsyncedDraft[] = [];
  private error: string | null = null;
  private listeners: Array<(state: ReviewState) => void> = [];

  constructor(
    private readonly api: ApiClient,
    private readonly cxnId: number,
    private readonly reviewer: string,
  ) {}

  onChange(listener: (state: ReviewState) => void): void {
    this.listeners.push(listener);
  }

  state(): ReviewState {
    return {
      pending: [...this.pending],
      current: this.pending[0] ?? null,
      decided: this.decided,
      drafts: [...this.drafts],
      error: this.error,
    };
  }

  private notify(): void {
    const snapshot = this.state();
    for (const listener of this.listeners) listener(snapshot);
  }

  async load(): Promise<void> {
    const page = await this.api.listCandidates(this.cxnId, "pending", 1, 200);
    this.pending = page.items;
    this.error = null;
    this.notify();
  }

  accept(): Promise<void> {
    return this.decide("accepted");
  }

  reject(): Promise<void> {
    return this.decide("rejected");
  }

  /** Move the current candidate to the back of the queue. */
  skip(): void {
    const current = this.pending.shift();
    if (current) this.pending.push(current);
    this.notify();
  }

  private async decide(verdict: Verdict): Promise<void> {
    const candidate = this.pending[0];
    if (!candidate) return;
    // optimistic: advance immediately, undo if the server disagrees
    this.pending = this.pending.slice(1);
    this.decided += 1;
    this.error = null;
    this.notify();
    try {
      await this.api.postDecision(candidate.candidate_id, {
        verdict,
        reviewer: this.reviewer,
        expected_status: candidate.status,
      });
    } catch (err) {
      this.decided -= 1;
      if (err instanceof ApiError && err.status === 409) {
        // someone else decided first: drop our attempt, refresh the queue
        await this.load();
        this.error = `candidate ${candidate.candidate_id} was decided elsewhere`;
        this.notify();
        return;
      }
      if (err instanceof ApiError) {
        this.pending = [candidate, ...this.pending];
        this.error = err.message;
        this.notify();
        return;
      }
      // network failure: keep the decision locally, flagged unsynced
      this.drafts.push({ candidate, verdict });
      this.error = null;
      this.notify();
    }
  }

  /** Re-post unsynced drafts; drafts that fail again stay in the list. */
  async syncDrafts(): Promise<void> {
    const drafts = this.drafts;
    this.drafts = [];
    for (const draft of drafts) {
      try {
        await this.api.postDecision(draft.candidate.candidate_id, {
          verdict: draft.verdict,
          reviewer: this.reviewer,
          expected_status: draft.candidate.status,
        });
        this.decided += 1;
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) continue; // already decided
        this.drafts.push(draft);
      }
    }
    this.notify();
  }

  /** Keyboard mapping: a = accept, r = reject, s = skip. */
  handleKey(key: string): Promise<void> | void {
    switch (key) {
      case "a":
        return this.accept();
      case "r":
        return this.reject();
      case "s":
        return this.skip();
    }
  }
}
