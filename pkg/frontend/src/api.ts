/** Thin typed client for the /v1 API; the fetch function is injectable so
 * tests can run against a scripted backend. */

import type {
  ApiErrorBody,
  CandidateEntry,
  CorpusResponse,
  ItemSearchResponse,
  NeighborsResponse,
  OutputCell,
  OutputDetail,
  Point,
  SessionState,
  TaxonomyClass,
} from "./types.js";

export interface FetchLike {
  (url: string, init?: { method?: string; headers?: Record<string, string>; body?: string }): Promise<{
    ok: boolean;
    status: number;
    json(): Promise<unknown>;
  }>;
}

/** A protocol-level rejection carrying the server's stable machine code. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: { method: string; headers?: Record<string, string>; body?: string } = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(`${this.base}/v1${path}`, init);
    const payload = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, payload as ApiErrorBody);
    }
    return payload as T;
  }

  getCorpus(): Promise<CorpusResponse> {
    return this.request("GET", "/corpus");
  }

  searchItems(query: string, offset = 0, limit = 50): Promise<ItemSearchResponse> {
    const params = new URLSearchParams({ query, offset: String(offset), limit: String(limit) });
    return this.request("GET", `/corpus/items?${params}`);
  }

  listOutputs(): Promise<OutputCell[]> {
    return this.request("GET", "/outputs");
  }

  getOutput(outputId: string): Promise<OutputDetail> {
    return this.request("GET", `/outputs/${outputId}`);
  }

  getNeighbors(itemId: string, k = 25, model = ""): Promise<NeighborsResponse> {
    const params = new URLSearchParams({ k: String(k), model });
    return this.request("GET", `/items/${itemId}/neighbors?${params}`);
  }

  createSession(outputId: string): Promise<SessionState> {
    return this.request("POST", "/sessions", { output_id: outputId });
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  seed(sessionId: string, itemId: string): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/seed`, { item_id: itemId });
  }

  computeCandidates(sessionId: string): Promise<{ entries: CandidateEntry[] }> {
    return this.request("POST", `/sessions/${sessionId}/candidates`);
  }

  accept(sessionId: string, itemIds: string[]): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/accept`, { item_ids: itemIds });
  }

  reject(sessionId: string, itemIds: string[]): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/reject`, { item_ids: itemIds });
  }

  unignore(sessionId: string, itemIds: string[]): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/unignore`, { item_ids: itemIds });
  }

  polygonSelect(sessionId: string, outputId: string, points: Point[]): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/polygon`, {
      output_id: outputId,
      points,
    });
  }

  switchOutput(sessionId: string, outputId: string): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/switch`, { output_id: outputId });
  }

  commit(sessionId: string, label: string): Promise<TaxonomyClass> {
    return this.request("POST", `/sessions/${sessionId}/commit`, { label });
  }

  getTaxonomy(): Promise<{ classes: TaxonomyClass[] }> {
    return this.request("GET", "/taxonomy");
  }
}
