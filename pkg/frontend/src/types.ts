/** Payload shapes of the /v1 HTTP API. */

export interface CorpusItem {
  id: string;
  canonical_text: string;
  total_count: number;
  merged_raw_forms: string[];
}

export interface CorpusResponse {
  version: number;
  size: number;
  items: CorpusItem[];
  pipeline_report: Record<string, unknown>;
}

export interface ItemSearchResponse {
  total: number;
  offset: number;
  limit: number;
  items: CorpusItem[];
}

/** One grid cell descriptor as listed by GET /outputs. */
export interface OutputCell {
  output_id: string;
  model_id: string;
  method: string;
  params: Record<string, unknown>;
  cluster_params: Record<string, unknown>;
}

/** Full cell payload from GET /outputs/{id}. */
export interface OutputDetail extends OutputCell {
  coords: [number, number][];
  diagnostics: Record<string, unknown>;
  clusters: { labels: number[]; params_used: Record<string, unknown> };
}

export interface CandidateEntry {
  item_id: string;
  score: number;
  via_member: string;
}

export interface SessionState {
  session_id: string;
  active_output_id: string;
  seed: string | null;
  members: string[];
  candidates: CandidateEntry[];
  polygon_candidates: string[];
  ignored: string[];
  k_per_member: number;
}

export interface NeighborEntry {
  item_id: string;
  distance: number;
  canonical_text: string;
}

export interface NeighborsResponse {
  item_id: string;
  model_id: string;
  k: number;
  neighbors: NeighborEntry[];
}

export interface TaxonomyClass {
  class_id: string;
  label: string;
  member_ids: string[];
  source_output_id: string;
  committed_at: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}

export type Point = [number, number];
