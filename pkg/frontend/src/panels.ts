/** The four linked session lists: cluster members, suggested candidates,
 * draw-selection candidates, and ignored items.
 *
 * The panels hold no authoritative state. Every button maps to exactly one
 * session operation; after each mutation the session is refetched (with
 * candidates recomputed while members exist) and the panels mirror that
 * snapshot verbatim. A failed call surfaces its machine code inline and
 * leaves the mirrored state untouched.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Point, SessionState } from "./types.js";

export interface PanelError {
  code: string;
  message: string;
}

export class SessionPanels {
  state: SessionState | null = null;
  lastError: PanelError | null = null;
  /** Set when the server reports a conflict; the UI shows a reload prompt. */
  staleSession = false;
  onChange: (state: SessionState | null) => void = () => undefined;

  constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
  ) {}

  get members(): string[] {
    return this.state?.members ?? [];
  }

  get candidates(): string[] {
    return (this.state?.candidates ?? []).map((e) => e.item_id);
  }

  get polygonCandidates(): string[] {
    return this.state?.polygon_candidates ?? [];
  }

  get ignored(): string[] {
    return this.state?.ignored ?? [];
  }

  /** Pull the server snapshot, recomputing candidates while members exist. */
  async refresh(): Promise<SessionState> {
    let state = await this.api.getSession(this.sessionId);
    if (state.members.length > 0) {
      await this.api.computeCandidates(this.sessionId);
      state = await this.api.getSession(this.sessionId);
    }
    this.state = state;
    this.lastError = null;
    this.onChange(state);
    return state;
  }

  seed(itemId: string): Promise<SessionState> {
    return this.mutate(() => this.api.seed(this.sessionId, itemId));
  }

  accept(itemIds: string[]): Promise<SessionState> {
    return this.mutate(() => this.api.accept(this.sessionId, itemIds));
  }

  reject(itemIds: string[]): Promise<SessionState> {
    return this.mutate(() => this.api.reject(this.sessionId, itemIds));
  }

  unignore(itemIds: string[]): Promise<SessionState> {
    return this.mutate(() => this.api.unignore(this.sessionId, itemIds));
  }

  polygonSelect(outputId: string, dataPolygon: Point[]): Promise<SessionState> {
    return this.mutate(() =>
      this.api.polygonSelect(this.sessionId, outputId, dataPolygon),
    );
  }

  switchOutput(outputId: string): Promise<SessionState> {
    return this.mutate(() => this.api.switchOutput(this.sessionId, outputId));
  }

  async commit(label: string): Promise<SessionState> {
    return this.mutate(async () => {
      await this.api.commit(this.sessionId, label);
    });
  }

  private async mutate(op: () => Promise<unknown>): Promise<SessionState> {
    try {
      await op();
    } catch (err) {
      if (err instanceof ApiError) {
        this.lastError = { code: err.code, message: err.message };
        // conflicts that mean our mirror diverged from the server
        if (err.status === 409 && (err.code === "item_assigned" || err.code === "not_suggested")) {
          this.staleSession = true;
        }
        if (this.state === null) {
          throw err;
        }
        return this.state; // mirrored state unchanged on failure
      }
      throw err;
    }
    return this.refresh();
  }
}
