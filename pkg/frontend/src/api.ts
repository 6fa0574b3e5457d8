/** Typed client for the validation service HTTP API — the UI's only network
 * surface. The fetch function is injectable so tests can run without a
 * browser or a server. */

export interface SessionInfo {
  k: number;
  document_count: number;
  reviewers: string[];
  created_at: number;
  warnings: string[];
}

export interface DocumentSummary {
  id: number;
  path: string;
  length: number;
  rated_counts: number;
}

export interface Prediction {
  tag: string;
  certainty: number;
}

export interface DocumentDetail {
  id: number;
  path: string;
  text: string;
  predictions: Prediction[];
}

export type Rating = "agree" | "disagree" | "unsure";

export interface Results {
  ground_truth: { positive: number; negative: number; excluded: number };
  roc: { fpr: number[]; tpr: number[] } | null;
  auc: number | null;
  top1: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
      } catch {
        /* non-JSON error body: keep statusText */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  getSession(): Promise<SessionInfo> {
    return this.request("/api/session");
  }

  getDocuments(): Promise<DocumentSummary[]> {
    return this.request("/api/documents");
  }

  getDocument(id: number): Promise<DocumentDetail> {
    return this.request(`/api/documents/${id}`);
  }

  postRating(docId: number, tag: string, reviewerId: string, rating: Rating): Promise<void> {
    return this.request("/api/ratings", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ doc_id: docId, tag, reviewer_id: reviewerId, rating }),
    });
  }

  getResults(): Promise<Results> {
    return this.request("/api/results");
  }
}
