"""The iterative taxonomy-building session protocol.

A session grows one class at a time: seed an item, pull nearest-neighbour
candidates from the active model's index, accept or reject them (rejects
land on a session-scoped ignore list honoured by later searches), optionally
lasso extra candidates from the projection, switch models while keeping the
selection, and finally commit the members as a named class. Committed items
are assigned once and never suggested again for this corpus.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .embeddings import EmbeddingMatrix, angular_distances
from .ingest import CleanCorpus
from .vptree import VpTree


class ProtocolError(Exception):
    """A session operation that violates the protocol's contracts."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass
class OutputRef:
    """The slice of a grid cell the session protocol needs."""

    output_id: str
    model_id: str
    coords: np.ndarray


@dataclass
class Session:
    session_id: str
    active_output_id: str
    seed: str | None = None
    members: list[str] = field(default_factory=list)
    candidates: list[dict] = field(default_factory=list)  # last computed suggestions
    polygon_candidates: list[str] = field(default_factory=list)
    ignored: set[str] = field(default_factory=set)
    k_per_member: int = 25
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    def snapshot(self) -> dict:
        return {
            "version": 1,
            "session_id": self.session_id,
            "active_output_id": self.active_output_id,
            "seed": self.seed,
            "members": list(self.members),
            "candidates": [dict(e) for e in self.candidates],
            "polygon_candidates": list(self.polygon_candidates),
            "ignored": sorted(self.ignored),
            "k_per_member": self.k_per_member,
        }

    @classmethod
    def from_snapshot(cls, doc: dict) -> "Session":
        return cls(
            session_id=doc["session_id"],
            active_output_id=doc["active_output_id"],
            seed=doc.get("seed"),
            members=list(doc.get("members", [])),
            candidates=[dict(e) for e in doc.get("candidates", [])],
            polygon_candidates=list(doc.get("polygon_candidates", [])),
            ignored=set(doc.get("ignored", [])),
            k_per_member=doc.get("k_per_member", 25),
        )


@dataclass
class TaxonomyClass:
    class_id: str
    label: str
    member_ids: list[str]
    source_output_id: str
    committed_at: str

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "label": self.label,
            "member_ids": list(self.member_ids),
            "source_output_id": self.source_output_id,
            "committed_at": self.committed_at,
        }


@dataclass
class Taxonomy:
    """Flat single-assignment classification over one corpus."""

    classes: list[TaxonomyClass] = field(default_factory=list)
    assignment: dict[str, str] = field(default_factory=dict)  # item id -> class id

    def to_dict(self) -> dict:
        return {"classes": [c.to_dict() for c in self.classes]}

    @classmethod
    def from_dict(cls, doc: dict) -> "Taxonomy":
        classes = [
            TaxonomyClass(
                class_id=c["class_id"],
                label=c["label"],
                member_ids=list(c["member_ids"]),
                source_output_id=c["source_output_id"],
                committed_at=c["committed_at"],
            )
            for c in doc.get("classes", [])
        ]
        assignment = {}
        for c in classes:
            for item_id in c.member_ids:
                assignment[item_id] = c.class_id
        return cls(classes=classes, assignment=assignment)


def point_in_polygon(x: float, y: float, polygon: list[tuple[float, float]]) -> bool:
    """Even-odd ray casting; a point equal to a vertex counts as inside."""
    for vx, vy in polygon:
        if x == vx and y == vy:
            return True
    inside = False
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_cross = (x2 - x1) * (y - y1) / (y2 - y1) + x1
            if x < x_cross:
                inside = not inside
    return inside


def export_document(
    corpus: CleanCorpus, taxonomy: Taxonomy, ignored_by_session: dict[str, set[str]]
) -> dict:
    """Taxonomy export with unassigned and ignored items for auditability."""
    assigned = set(taxonomy.assignment)
    unassigned = [it.id for it in corpus.items if it.id not in assigned]
    ignored_union = set()
    for ids in ignored_by_session.values():
        ignored_union |= ids
    return {
        "version": 1,
        "classes": [c.to_dict() for c in taxonomy.classes],
        "unassigned": unassigned,
        "ignored_at_export": sorted(ignored_union),
    }


def taxonomy_from_document(doc: dict) -> Taxonomy:
    return Taxonomy.from_dict(doc)


class SessionEngine:
    """Runs the session protocol over one corpus and its precomputed grid.

    Mutations on a session are serialized behind the session's lock;
    commits additionally serialize on the corpus-wide assignment map, so a
    commit that would double-assign an item fails without side effects.
    """

    def __init__(
        self,
        corpus: CleanCorpus,
        matrices: dict[str, EmbeddingMatrix],
        trees: dict[str, VpTree],
        outputs: dict[str, OutputRef],
        taxonomy: Taxonomy | None = None,
        k_per_member: int = 25,
        clock=time.time,
        on_session_change=None,
        on_taxonomy_change=None,
    ):
        self.corpus = corpus
        self.matrices = matrices
        self.trees = trees
        self.outputs = outputs
        self.taxonomy = taxonomy if taxonomy is not None else Taxonomy()
        self.k_per_member = k_per_member
        self.sessions: dict[str, Session] = {}
        self._clock = clock
        self._taxonomy_lock = threading.RLock()
        self._on_session_change = on_session_change
        self._on_taxonomy_change = on_taxonomy_change
        self._row_of = {item_id: i for i, item_id in enumerate(corpus.item_ids)}

    # -- helpers -------------------------------------------------------------

    def _session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise ProtocolError("unknown_session", f"no session {session_id!r}")
        return session

    def get_session(self, session_id: str) -> Session:
        return self._session(session_id)

    def _require_output(self, output_id: str) -> OutputRef:
        output = self.outputs.get(output_id)
        if output is None:
            raise ProtocolError("unknown_output", f"no grid output {output_id!r}")
        return output

    def _require_item(self, item_id: str):
        if item_id not in self.corpus:
            raise ProtocolError("unknown_item", f"no corpus item {item_id!r}")

    def _notify_session(self, session: Session):
        if self._on_session_change is not None:
            self._on_session_change(session)

    def _notify_taxonomy(self):
        if self._on_taxonomy_change is not None:
            self._on_taxonomy_change(self.taxonomy)

    def restore_session(self, session: Session):
        self.sessions[session.session_id] = session

    # -- protocol operations --------------------------------------------------

    def create_session(self, output_id: str) -> Session:
        self._require_output(output_id)
        session = Session(
            session_id=uuid.uuid4().hex,
            active_output_id=output_id,
            k_per_member=self.k_per_member,
        )
        self.sessions[session.session_id] = session
        self._notify_session(session)
        return session

    def seed_item(self, session_id: str, item_id: str) -> Session:
        session = self._session(session_id)
        with session.lock:
            self._require_item(item_id)
            if item_id in session.ignored:
                raise ProtocolError(
                    "item_ignored", f"{item_id} is on this session's ignore list"
                )
            if item_id in self.taxonomy.assignment:
                raise ProtocolError(
                    "item_assigned",
                    f"{item_id} already belongs to class "
                    f"{self.taxonomy.assignment[item_id]}",
                )
            if item_id not in session.members:
                session.members.append(item_id)
            session.seed = item_id
            self._drop_from_suggestions(session, {item_id})
            self._notify_session(session)
            return session

    def compute_candidates(self, session_id: str) -> list[dict]:
        """Union of each member's kNN, scored by min distance to any member."""
        session = self._session(session_id)
        with session.lock:
            if not session.members:
                raise ProtocolError("empty_members", "seed an item first")
            output = self._require_output(session.active_output_id)
            tree = self.trees[output.model_id]
            matrix = self.matrices[output.model_id]
            excluded = (
                set(session.members) | session.ignored | set(self.taxonomy.assignment)
            )
            candidate_ids: set[str] = set()
            for member in session.members:
                for hit in tree.knn(member, session.k_per_member, exclude=excluded):
                    candidate_ids.add(hit["id"])

            member_rows = np.array(
                [matrix.vectors[self._row_of[m]] for m in session.members]
            )
            entries = []
            for item_id in candidate_ids:
                dists = angular_distances(member_rows, matrix.vectors[self._row_of[item_id]])
                best = int(np.argmin(dists))
                entries.append(
                    {
                        "item_id": item_id,
                        "score": float(dists[best]),
                        "via_member": session.members[best],
                    }
                )
            entries.sort(key=lambda e: (e["score"], e["item_id"]))
            session.candidates = entries
            self._notify_session(session)
            return [dict(e) for e in entries]

    def accept_candidates(self, session_id: str, item_ids: list[str]) -> Session:
        session = self._session(session_id)
        with session.lock:
            suggested = {e["item_id"] for e in session.candidates} | set(
                session.polygon_candidates
            )
            for item_id in item_ids:
                self._require_item(item_id)
                if item_id not in suggested:
                    raise ProtocolError(
                        "not_suggested",
                        f"{item_id} is not in the current candidate or draw lists",
                    )
                if item_id in self.taxonomy.assignment:
                    raise ProtocolError(
                        "item_assigned", f"{item_id} was committed by another session"
                    )
            for item_id in item_ids:
                if item_id not in session.members:
                    session.members.append(item_id)
            self._drop_from_suggestions(session, set(item_ids))
            self._notify_session(session)
            return session

    def reject_candidates(self, session_id: str, item_ids: list[str]) -> Session:
        """Move suggested items or members onto the session's ignore list."""
        session = self._session(session_id)
        with session.lock:
            suggested = {e["item_id"] for e in session.candidates} | set(
                session.polygon_candidates
            )
            for item_id in item_ids:
                self._require_item(item_id)
                if item_id not in suggested and item_id not in session.members:
                    raise ProtocolError(
                        "not_suggested",
                        f"{item_id} is neither suggested nor a member",
                    )
            for item_id in item_ids:
                if item_id in session.members:
                    session.members.remove(item_id)
                    if session.seed == item_id:
                        session.seed = session.members[0] if session.members else None
                session.ignored.add(item_id)
            self._drop_from_suggestions(session, set(item_ids))
            self._notify_session(session)
            return session

    def unignore(self, session_id: str, item_ids: list[str]) -> Session:
        session = self._session(session_id)
        with session.lock:
            for item_id in item_ids:
                if item_id not in session.ignored:
                    raise ProtocolError("not_ignored", f"{item_id} is not ignored")
            for item_id in item_ids:
                session.ignored.discard(item_id)
            self._notify_session(session)
            return session

    def polygon_select(
        self, session_id: str, output_id: str, polygon: list[tuple[float, float]]
    ) -> Session:
        """Lasso projection points into the draw-selection candidate list."""
        session = self._session(session_id)
        with session.lock:
            output = self._require_output(output_id)
            if len(polygon) < 3:
                raise ProtocolError("invalid_polygon", "polygon needs at least 3 vertices")
            poly = [(float(x), float(y)) for x, y in polygon]
            blocked = (
                set(session.members) | session.ignored | set(self.taxonomy.assignment)
            )
            picked = []
            for idx, item_id in enumerate(self.corpus.item_ids):
                if item_id in blocked:
                    continue
                x, y = output.coords[idx]
                if point_in_polygon(float(x), float(y), poly):
                    picked.append(item_id)
            session.polygon_candidates = picked
            self._notify_session(session)
            return session

    def switch_output(self, session_id: str, output_id: str) -> Session:
        """Change the active grid output; the selection itself persists."""
        session = self._session(session_id)
        with session.lock:
            self._require_output(output_id)
            session.active_output_id = output_id
            session.polygon_candidates = []  # coordinates are output-specific
            self._notify_session(session)
            return session

    def commit_class(self, session_id: str, label: str) -> TaxonomyClass:
        session = self._session(session_id)
        with session.lock, self._taxonomy_lock:
            if not session.members:
                raise ProtocolError("empty_members", "nothing to commit")
            if not label or not label.strip():
                raise ProtocolError("invalid_label", "class label must be non-empty")
            label = label.strip()
            if any(c.label == label for c in self.taxonomy.classes):
                raise ProtocolError("duplicate_label", f"label {label!r} already used")
            clash = [i for i in session.members if i in self.taxonomy.assignment]
            if clash:
                raise ProtocolError(
                    "item_assigned",
                    f"items already assigned elsewhere: {', '.join(clash[:10])}",
                )
            new_class = TaxonomyClass(
                class_id=f"c{len(self.taxonomy.classes) + 1:04d}",
                label=label,
                member_ids=list(session.members),
                source_output_id=session.active_output_id,
                committed_at=datetime.fromtimestamp(
                    self._clock(), tz=timezone.utc
                ).isoformat(),
            )
            self.taxonomy.classes.append(new_class)
            for item_id in new_class.member_ids:
                self.taxonomy.assignment[item_id] = new_class.class_id
            session.members = []
            session.seed = None
            session.candidates = []
            session.polygon_candidates = []
            self._notify_taxonomy()
            self._notify_session(session)
            return new_class

    def export(self) -> dict:
        return export_document(
            self.corpus,
            self.taxonomy,
            {sid: s.ignored for sid, s in self.sessions.items()},
        )

    # -- internals ------------------------------------------------------------

    @staticmethod
    def _drop_from_suggestions(session: Session, item_ids: set[str]):
        session.candidates = [
            e for e in session.candidates if e["item_id"] not in item_ids
        ]
        session.polygon_candidates = [
            i for i in session.polygon_candidates if i not in item_ids
        ]
