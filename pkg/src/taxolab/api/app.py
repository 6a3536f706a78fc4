"""HTTP facade over the workspace: corpora, grid outputs, neighbours, sessions.

Every mutation is validated by the session engine; protocol violations map
to stable machine codes so clients can react without parsing messages.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import APIRouter, FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..session import ProtocolError
from ..workspace import Workspace
from . import schemas

# http status per machine code; unlisted codes fall back to 409
ERROR_STATUS = {
    "unknown_item": 404,
    "unknown_output": 404,
    "unknown_session": 404,
    "unknown_model": 404,
    "item_ignored": 409,
    "item_assigned": 409,
    "not_suggested": 409,
    "not_ignored": 409,
    "duplicate_label": 409,
    "empty_members": 409,
    "invalid_label": 422,
    "invalid_polygon": 422,
}


def _session_state(session) -> dict:
    state = session.snapshot()
    state.pop("version", None)
    return state


def create_app(workspace: Workspace, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="taxolab", version="1.0")
    v1 = APIRouter(prefix="/v1")
    engine = workspace.engine
    corpus = workspace.corpus

    @app.exception_handler(ProtocolError)
    async def protocol_error_handler(_request: Request, exc: ProtocolError):
        status = ERROR_STATUS.get(exc.code, 409)
        return JSONResponse(
            status_code=status, content={"code": exc.code, "message": exc.message}
        )

    def item_model(item) -> dict:
        return {
            "id": item.id,
            "canonical_text": item.canonical_text,
            "total_count": item.total_count,
            "merged_raw_forms": list(item.merged_raw_forms),
        }

    @v1.get("/corpus", response_model=schemas.CorpusResponse)
    def get_corpus():
        return {
            "version": 1,
            "size": len(corpus),
            "items": [item_model(it) for it in corpus.items],
            "pipeline_report": corpus.pipeline_report,
        }

    @v1.get("/corpus/items", response_model=schemas.ItemSearchResponse)
    def search_items(query: str = "", offset: int = 0, limit: int = 50):
        offset = max(0, offset)
        limit = max(1, min(limit, 1000))
        needle = query.lower()
        hits = [
            it for it in corpus.items if needle in it.canonical_text.lower()
        ]
        page = hits[offset : offset + limit]
        return {
            "total": len(hits),
            "offset": offset,
            "limit": limit,
            "items": [item_model(it) for it in page],
        }

    @v1.get("/outputs")
    def list_outputs():
        return workspace.grid["cells"]

    @v1.get("/outputs/{output_id}", response_model=schemas.OutputDetail)
    def get_output(output_id: str):
        doc = workspace.output_docs.get(output_id)
        if doc is None:
            raise ProtocolError("unknown_output", f"no grid output {output_id!r}")
        return doc

    @v1.get("/items/{item_id}/neighbors", response_model=schemas.NeighborsResponse)
    def get_neighbors(item_id: str, k: int = 25, model: str = ""):
        if item_id not in corpus:
            raise ProtocolError("unknown_item", f"no corpus item {item_id!r}")
        model_id = model or next(iter(workspace.trees))
        tree = workspace.trees.get(model_id)
        if tree is None:
            raise ProtocolError("unknown_model", f"no model {model_id!r}")
        k = max(1, min(k, len(corpus)))
        hits = tree.knn(item_id, k, exclude={item_id})
        return {
            "item_id": item_id,
            "model_id": model_id,
            "k": k,
            "neighbors": [
                {
                    "item_id": h["id"],
                    "distance": h["distance"],
                    "canonical_text": corpus.get(h["id"]).canonical_text,
                }
                for h in hits
            ],
        }

    @v1.post("/sessions", response_model=schemas.SessionState, status_code=201)
    def create_session(body: schemas.CreateSessionRequest):
        session = engine.create_session(body.output_id)
        return _session_state(session)

    @v1.get("/sessions/{session_id}", response_model=schemas.SessionState)
    def get_session(session_id: str):
        return _session_state(engine.get_session(session_id))

    @v1.post("/sessions/{session_id}/seed", response_model=schemas.SessionState)
    def seed(session_id: str, body: schemas.SeedRequest):
        return _session_state(engine.seed_item(session_id, body.item_id))

    @v1.post("/sessions/{session_id}/candidates")
    def candidates(session_id: str):
        return {"entries": engine.compute_candidates(session_id)}

    @v1.post("/sessions/{session_id}/accept", response_model=schemas.SessionState)
    def accept(session_id: str, body: schemas.ItemIdsRequest):
        return _session_state(engine.accept_candidates(session_id, body.item_ids))

    @v1.post("/sessions/{session_id}/reject", response_model=schemas.SessionState)
    def reject(session_id: str, body: schemas.ItemIdsRequest):
        return _session_state(engine.reject_candidates(session_id, body.item_ids))

    @v1.post("/sessions/{session_id}/unignore", response_model=schemas.SessionState)
    def unignore(session_id: str, body: schemas.ItemIdsRequest):
        return _session_state(engine.unignore(session_id, body.item_ids))

    @v1.post("/sessions/{session_id}/polygon", response_model=schemas.SessionState)
    def polygon(session_id: str, body: schemas.PolygonRequest):
        return _session_state(
            engine.polygon_select(session_id, body.output_id, body.points)
        )

    @v1.post("/sessions/{session_id}/switch", response_model=schemas.SessionState)
    def switch(session_id: str, body: schemas.SwitchRequest):
        return _session_state(engine.switch_output(session_id, body.output_id))

    @v1.post("/sessions/{session_id}/commit", response_model=schemas.TaxonomyClassModel)
    def commit(session_id: str, body: schemas.CommitRequest):
        return engine.commit_class(session_id, body.label).to_dict()

    @v1.get("/taxonomy", response_model=schemas.TaxonomyResponse)
    def get_taxonomy():
        return engine.taxonomy.to_dict()

    @v1.get("/taxonomy/export", response_model=schemas.ExportResponse)
    def export_taxonomy():
        return engine.export()

    app.include_router(v1)
    if ui_dir is not None:
        # same-origin hosting of the built workbench; /v1 routes keep priority
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
