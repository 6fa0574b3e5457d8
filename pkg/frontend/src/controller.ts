/** Review-session controller: fetches documents, gates submission, and keeps
 * all durable state server-side so a page reload reconstructs progress from
 * the API alone. */

import { ApiClient, ApiError, DocumentSummary, Rating } from "./api.js";
import { ReviewViewState, allSet, freshState } from "./state.js";

export type Screen =
  | { kind: "review"; state: ReviewViewState }
  | { kind: "done"; ratedDocs: number; totalDocs: number }
  | { kind: "error"; message: string; retry: () => Promise<Screen> };

export interface Notice {
  message: string;
}

export class ReviewController {
  private queue: number[] = [];
  private totalDocs = 0;
  private ratedDocs = 0;
  readonly notices: Notice[] = [];

  constructor(
    private readonly api: ApiClient,
    readonly reviewerId: string,
  ) {}

  /** Rebuild the work queue from the server. The per-document rating counter
   * aggregates (tag, reviewer) pairs, so a document with at least k ratings
   * is treated as covered; everything else is queued in server order. */
  async start(): Promise<Screen> {
    let k: number;
    let docs: DocumentSummary[];
    try {
      k = (await this.api.getSession()).k;
      docs = await this.api.getDocuments();
    } catch (e) {
      return this.networkError(e, () => this.start());
    }
    this.totalDocs = docs.length;
    this.queue = docs.filter((d) => d.rated_counts < k).map((d) => d.id);
    this.ratedDocs = this.totalDocs - this.queue.length;
    return this.loadNextDocument();
  }

  /** Fetch the next queued document with all controls reset to unset. A 404
   * (document removed server-side) is skipped with a visible notice; a
   * network failure surfaces a retry screen without losing the queue. */
  async loadNextDocument(): Promise<Screen> {
    while (this.queue.length > 0) {
      const id = this.queue[0];
      try {
        const doc = await this.api.getDocument(id);
        return {
          kind: "review",
          state: freshState(doc, this.reviewerId, this.ratedDocs, this.totalDocs),
        };
      } catch (e) {
        if (e instanceof ApiError && e.status === 404) {
          this.notices.push({ message: `document ${id} no longer exists; skipped` });
          this.queue.shift();
          this.totalDocs -= 1;
          continue;
        }
        return this.networkError(e, () => this.loadNextDocument());
      }
    }
    return { kind: "done", ratedDocs: this.ratedDocs, totalDocs: this.totalDocs };
  }

  /** POST one rating per label. Submission is refused until every control is
   * set; on partial failure the acknowledged labels stay recorded (the
   * server is append-only, resubmission overwrites) and only the unacked
   * ones remain pending — the view does not advance. */
  async submitRatings(state: ReviewViewState): Promise<Screen> {
    if (!allSet(state)) {
      return { kind: "review", state };
    }
    const pending = state.rows.map((r) => ({ tag: r.tag, rating: r.rating as Rating }));
    const failed: typeof pending = [];
    let lastError: unknown = null;
    for (const p of pending) {
      try {
        await this.api.postRating(state.docId, p.tag, state.reviewerId, p.rating);
      } catch (e) {
        failed.push(p);
        lastError = e;
      }
    }
    if (failed.length > 0) {
      this.notices.push({
        message: `${failed.length} rating(s) not saved (${describe(lastError)}); resubmit`,
      });
      return { kind: "review", state };
    }
    this.queue.shift();
    this.ratedDocs += 1;
    return this.loadNextDocument();
  }

  private networkError(e: unknown, retry: () => Promise<Screen>): Screen {
    return { kind: "error", message: describe(e), retry };
  }
}

function describe(e: unknown): string {
  if (e instanceof ApiError) return `server error ${e.status}: ${e.message}`;
  return e instanceof Error ? e.message : String(e);
}
