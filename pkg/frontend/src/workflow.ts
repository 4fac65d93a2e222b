import { ApiClient, ApiError } from "./api";
import type { NextQuery, SessionHandle } from "./types";

/**
 * One labeling round: fetch the pending query, accept exactly one label,
 * submit it, and report the advanced handle. Stale-query conflicts trigger
 * a refetch; re-entrant submits while a request is in flight are dropped so
 * a double click can never advance the session twice.
 */
export class LabelWorkflow {
  private pending: NextQuery | null = null;
  private inFlight = false;

  constructor(
    private api: ApiClient,
    readonly sessionId: string,
  ) {}

  get current(): NextQuery | null {
    return this.pending;
  }

  async refresh(): Promise<NextQuery | null> {
    try {
      this.pending = await this.api.getNext(this.sessionId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.pending = null; // retraining or complete
      } else {
        throw error;
      }
    }
    return this.pending;
  }

  async submit(label: string): Promise<SessionHandle | null> {
    if (this.inFlight || this.pending === null) return null;
    this.inFlight = true;
    const query = this.pending;
    try {
      const handle = await this.api.submitLabel(
        this.sessionId,
        query.trajectory_id,
        label,
        query.step,
      );
      this.pending = null;
      return handle;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // stale pending query: re-sync with the service and let the caller re-render
        await this.refresh();
        return null;
      }
      throw error;
    } finally {
      this.inFlight = false;
    }
  }
}
