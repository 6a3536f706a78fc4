"""Execute the precompute grid: embeddings, indexes, and every projection cell.

All interactive machinery runs off artifacts produced here in advance. The
run is resumable: cells whose artifact already exists with a valid content
hash are skipped, and artifact bytes are independent of the worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import ClusterParams, dbscan
from .embeddings import (
    EmbeddingMatrix,
    ModelCatalog,
    emb1_bytes,
    hash_embed,
    load_embeddings,
    normalize_rows,
)
from .ingest import CleanCorpus
from .reduction import GridConfig, ReductionSpec, expand_grid, reduce_2d
from .store import ArtifactStore, canonical_json_bytes, sha256_hex
from .vptree import build as build_tree
from .workspace import matrix_from_emb1_bytes

PRODUCER = f"precompute taxolab-{__version__}"


class PrecomputeError(Exception):
    pass


def load_grid_config(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in ("models", "specs", "cluster_params"):
        if key not in doc or not doc[key]:
            raise PrecomputeError(f"grid config is missing a non-empty {key!r} list")
    return doc


def _resolve_matrix(
    corpus: CleanCorpus, model: dict, default_seed: int
) -> EmbeddingMatrix:
    """Produce the model's raw matrix from its configured source."""
    model_id = model["model_id"]
    source = model.get("source", {})
    if "file" in source:
        return load_embeddings(source["file"], corpus, model_id=model_id)
    if "builtin" in source:
        builtin = source["builtin"]
        return hash_embed(
            corpus,
            dim=int(builtin["dim"]),
            seed=int(builtin.get("seed", default_seed)),
            model_id=model_id,
        )
    raise PrecomputeError(f"model {model_id!r} needs a 'file' or 'builtin' source")


def _cell_payload(vectors: np.ndarray, item_ids: list[str], cell: dict) -> dict:
    """Pure per-cell computation: reduce to 2D, then cluster the plane."""
    matrix = EmbeddingMatrix(
        model_id=cell["model_id"], vectors=vectors, item_ids=item_ids
    )
    spec = ReductionSpec(method=cell["method"], params=dict(cell["params"]))
    projection = reduce_2d(matrix, spec, output_id=cell["output_id"])
    raw_params = cell["cluster_params"]
    labeling = dbscan(
        projection.coords,
        ClusterParams(eps=raw_params.get("eps", "auto"), min_pts=int(raw_params.get("min_pts", 5))),
        output_id=cell["output_id"],
    )
    return {
        "version": 1,
        "output_id": cell["output_id"],
        "model_id": cell["model_id"],
        "method": cell["method"],
        "params": cell["params"],
        "cluster_params": cell["cluster_params"],
        "coords": [[float(x), float(y)] for x, y in projection.coords],
        "diagnostics": projection.diagnostics,
        "clusters": {
            "labels": [int(v) for v in labeling.labels],
            "params_used": labeling.params_used,
        },
    }


def run_precompute(
    store: ArtifactStore,
    grid_config: dict,
    seed: int = 0,
    workers: int = 1,
    progress=None,
) -> dict:
    """Run (or resume) the full grid; returns per-stage counts and failures."""

    def report(msg: str):
        if progress is not None:
            progress(msg)

    corpus = CleanCorpus.from_json_dict(store.load_json("corpus", "corpus"))
    store.record_config("tree_seed", seed)

    models = grid_config["models"]
    ModelCatalog(
        entries=[
            {
                "model_id": m["model_id"],
                "dim": m.get("source", {}).get("builtin", {}).get("dim"),
                "source": m.get("source", {}),
                "display_label": m.get("display_label", m["model_id"]),
            }
            for m in models
        ]
    )  # rejects duplicate model ids up front
    specs = [
        ReductionSpec(method=s["method"], params=dict(s.get("params", {})))
        for s in grid_config["specs"]
    ]
    cluster_params = [dict(c) for c in grid_config["cluster_params"]]
    config = GridConfig(
        model_ids=[m["model_id"] for m in models],
        specs=specs,
        cluster_params=cluster_params,
    )
    cells = expand_grid(config)
    if len(cells) != config.size():
        raise PrecomputeError("grid expansion disagrees with the product rule")

    # Embeddings and trees per model. The canonical matrix is always the
    # one re-read from the stored float32 artifact, so index radii and all
    # projections agree with what a later serve run will load.
    matrices: dict[str, EmbeddingMatrix] = {}
    model_records = []
    for model in models:
        model_id = model["model_id"]
        if store.has_valid("embeddings", model_id):
            report(f"embeddings {model_id}: reusing stored artifact")
        else:
            raw = _resolve_matrix(corpus, model, seed)
            normalized = normalize_rows(raw)
            store.save_artifact(
                "embeddings",
                model_id,
                emb1_bytes(normalized.item_ids, normalized.vectors),
                PRODUCER,
                suffix=".emb1",
            )
            report(f"embeddings {model_id}: computed ({normalized.dim}d)")
        stored = store.load_artifact("embeddings", model_id)
        matrix = normalize_rows(matrix_from_emb1_bytes(model_id, stored))
        if matrix.item_ids != corpus.item_ids:
            raise PrecomputeError(f"embeddings {model_id} not aligned to corpus")
        matrices[model_id] = matrix
        matrix_hash = sha256_hex(stored)

        if store.has_valid("trees", model_id):
            report(f"vp-tree {model_id}: reusing stored artifact")
        else:
            tree = build_tree(matrix, seed)
            store.save_artifact(
                "trees",
                model_id,
                canonical_json_bytes(tree.to_json_dict(matrix_hash)),
                PRODUCER,
            )
            report(f"vp-tree {model_id}: built")
        model_records.append(
            {
                "model_id": model_id,
                "dim": matrices[model_id].dim,
                "source": model.get("source", {}),
                "display_label": model.get("display_label", model_id),
            }
        )

    pending = [c for c in cells if not store.has_valid("outputs", c["output_id"])]
    skipped = len(cells) - len(pending)
    failures: list[dict] = []
    done = 0

    def save_cell(cell: dict, payload: dict):
        nonlocal done
        store.save_json("outputs", cell["output_id"], payload, PRODUCER)
        done += 1
        report(
            f"cell {cell['output_id']} ({cell['model_id']}/{cell['method']}): "
            f"done [{done + skipped}/{len(cells)}]"
        )

    def fail_cell(cell: dict, exc: BaseException):
        failures.append({"output_id": cell["output_id"], "error": str(exc)})
        report(f"cell {cell['output_id']}: FAILED ({exc})")

    if workers <= 1:
        for cell in pending:
            matrix = matrices[cell["model_id"]]
            try:
                payload = _cell_payload(matrix.vectors, matrix.item_ids, cell)
            except Exception as exc:  # noqa: BLE001 - cell failures are recorded
                fail_cell(cell, exc)
                continue
            save_cell(cell, payload)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {}
            for cell in pending:
                matrix = matrices[cell["model_id"]]
                fut = pool.submit(_cell_payload, matrix.vectors, matrix.item_ids, cell)
                futures[fut] = cell
            remaining = set(futures)
            while remaining:
                finished, remaining = wait(remaining, return_when=FIRST_COMPLETED)
                for fut in finished:
                    cell = futures[fut]
                    try:
                        payload = fut.result()
                    except Exception as exc:  # noqa: BLE001
                        fail_cell(cell, exc)
                        continue
                    save_cell(cell, payload)

    failures.sort(key=lambda f: f["output_id"])
    grid_doc = {
        "version": 1,
        "config_hash": sha256_hex(canonical_json_bytes(grid_config)),
        "models": model_records,
        "cells": cells,
        "failed": failures,
    }
    store.save_json("grid", "grid", grid_doc, PRODUCER)
    store.record_config("grid_config", grid_config)

    return {
        "total_cells": len(cells),
        "computed": done,
        "skipped": skipped,
        "failed": failures,
    }
