"""Request and response models for the /v1 HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CorpusItemModel(BaseModel):
    id: str
    canonical_text: str
    total_count: int
    merged_raw_forms: list[str]


class CorpusResponse(BaseModel):
    version: int
    size: int
    items: list[CorpusItemModel]
    pipeline_report: dict


class ItemSearchResponse(BaseModel):
    total: int
    offset: int
    limit: int
    items: list[CorpusItemModel]


class OutputDetail(BaseModel):
    output_id: str
    model_id: str
    method: str
    params: dict
    cluster_params: dict
    coords: list[list[float]]
    diagnostics: dict
    clusters: dict


class NeighborEntry(BaseModel):
    item_id: str
    distance: float
    canonical_text: str


class NeighborsResponse(BaseModel):
    item_id: str
    model_id: str
    k: int
    neighbors: list[NeighborEntry]


class CandidateEntry(BaseModel):
    item_id: str
    score: float
    via_member: str


class SessionState(BaseModel):
    session_id: str
    active_output_id: str
    seed: str | None
    members: list[str]
    candidates: list[CandidateEntry]
    polygon_candidates: list[str]
    ignored: list[str]
    k_per_member: int


class CreateSessionRequest(BaseModel):
    output_id: str


class SeedRequest(BaseModel):
    item_id: str


class ItemIdsRequest(BaseModel):
    item_ids: list[str] = Field(min_length=1)


class PolygonRequest(BaseModel):
    output_id: str
    points: list[tuple[float, float]]


class SwitchRequest(BaseModel):
    output_id: str


class CommitRequest(BaseModel):
    label: str


class TaxonomyClassModel(BaseModel):
    class_id: str
    label: str
    member_ids: list[str]
    source_output_id: str
    committed_at: str


class TaxonomyResponse(BaseModel):
    classes: list[TaxonomyClassModel]


class ExportResponse(BaseModel):
    version: int
    classes: list[TaxonomyClassModel]
    unassigned: list[str]
    ignored_at_export: list[str]


class ErrorBody(BaseModel):
    code: str
    message: str
