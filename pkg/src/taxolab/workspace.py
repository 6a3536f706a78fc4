"""Load a precomputed store into a live, queryable workspace.

The workspace owns the in-memory corpus, per-model matrices and indexes,
the grid outputs, and the session engine, and persists sessions and the
taxonomy back into the store as they change.
"""

from __future__ import annotations

import numpy as np

from . import __version__
from .embeddings import EmbeddingMatrix, normalize_rows, parse_emb1
from .ingest import CleanCorpus
from .session import OutputRef, Session, SessionEngine, Taxonomy, export_document
from .store import ArtifactStore, sha256_hex
from .vptree import VpTree, build as build_tree


class WorkspaceError(Exception):
    pass


def matrix_from_emb1_bytes(model_id: str, data: bytes) -> EmbeddingMatrix:
    ids, vectors = parse_emb1(data)
    return EmbeddingMatrix(model_id=model_id, vectors=vectors.astype(np.float64), item_ids=ids)


class Workspace:
    """Everything the API and the session protocol need, loaded and verified."""

    def __init__(self, store: ArtifactStore, clock=None):
        self.store = store
        corpus_doc = store.load_json("corpus", "corpus")
        self.corpus = CleanCorpus.from_json_dict(corpus_doc)

        grid_entry = store.entry("grid", "grid")
        if grid_entry is None:
            raise WorkspaceError("store has no precomputed grid; run precompute first")
        self.grid = store.load_json("grid", "grid")

        self.matrices: dict[str, EmbeddingMatrix] = {}
        self.trees: dict[str, VpTree] = {}
        for model in self.grid["models"]:
            model_id = model["model_id"]
            raw = store.load_artifact("embeddings", model_id)
            matrix = normalize_rows(matrix_from_emb1_bytes(model_id, raw))
            if matrix.item_ids != self.corpus.item_ids:
                raise WorkspaceError(f"embeddings {model_id} not aligned to corpus")
            self.matrices[model_id] = matrix
            matrix_hash = sha256_hex(raw)
            tree = self._load_or_build_tree(model_id, matrix, matrix_hash)
            self.trees[model_id] = tree

        self.outputs: dict[str, OutputRef] = {}
        self.output_docs: dict[str, dict] = {}
        for cell in self.grid["cells"]:
            output_id = cell["output_id"]
            if not store.has_valid("outputs", output_id):
                continue  # failed or missing cells stay browsable in the grid only
            doc = store.load_json("outputs", output_id)
            coords = np.asarray(doc["coords"], dtype=np.float64)
            self.outputs[output_id] = OutputRef(
                output_id=output_id, model_id=doc["model_id"], coords=coords
            )
            self.output_docs[output_id] = doc

        taxonomy = (
            Taxonomy.from_dict(store.load_json("taxonomy", "taxonomy"))
            if store.entry("taxonomy", "taxonomy") is not None
            else Taxonomy()
        )
        engine_kwargs = {} if clock is None else {"clock": clock}
        self.engine = SessionEngine(
            corpus=self.corpus,
            matrices=self.matrices,
            trees=self.trees,
            outputs=self.outputs,
            taxonomy=taxonomy,
            on_session_change=self._persist_session,
            on_taxonomy_change=self._persist_taxonomy,
            **engine_kwargs,
        )
        for entry in store.entries("sessions"):
            snapshot = store.load_json("sessions", entry.name)
            self.engine.restore_session(Session.from_snapshot(snapshot))

    def _load_or_build_tree(
        self, model_id: str, matrix: EmbeddingMatrix, matrix_hash: str
    ) -> VpTree:
        from .vptree import VpTreeError, load_tree

        seed = int(self.store.config.get("tree_seed", 0))
        if self.store.has_valid("trees", model_id):
            try:
                return load_tree(
                    self.store.artifact_path("trees", model_id), matrix, matrix_hash
                )
            except VpTreeError:
                pass  # stale cache: rebuild below
        return build_tree(matrix, seed)

    def _persist_session(self, session: Session):
        self.store.save_json(
            "sessions",
            session.session_id,
            session.snapshot(),
            f"session-engine taxolab-{__version__}",
        )

    def _persist_taxonomy(self, taxonomy: Taxonomy):
        self.store.save_json(
            "taxonomy", "taxonomy", taxonomy.to_dict(), f"session-engine taxolab-{__version__}"
        )

    def export_taxonomy(self) -> dict:
        return self.engine.export()


def export_from_store(store: ArtifactStore) -> dict:
    """Build the taxonomy export straight from artifacts (no engine needed)."""
    corpus = CleanCorpus.from_json_dict(store.load_json("corpus", "corpus"))
    taxonomy = (
        Taxonomy.from_dict(store.load_json("taxonomy", "taxonomy"))
        if store.entry("taxonomy", "taxonomy") is not None
        else Taxonomy()
    )
    ignored = {}
    for entry in store.entries("sessions"):
        snapshot = store.load_json("sessions", entry.name)
        ignored[entry.name] = set(snapshot.get("ignored", []))
    return export_document(corpus, taxonomy, ignored)
