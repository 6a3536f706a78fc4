"""Exact k-nearest-neighbour search over unit-norm embeddings.

A vantage-point tree splits items around a randomly chosen vantage at the
(lower) median angular distance. The triangle inequality of the angular
metric makes pruning sound, so queries are exact, and ties are broken by
item id to keep suggestion lists stable across runs.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingMatrix, angular_distances


class VpTreeError(Exception):
    pass


@dataclass
class VpTree:
    """Immutable metric index; one node per corpus item."""

    model_id: str
    build_seed: int
    item_ids: list[str]
    vectors: np.ndarray
    root: int
    vantage: list[int]  # row index held at each node
    radius: list[float | None]  # None for nodes without an inside/outside split
    inside: list[int]  # child node index or -1
    outside: list[int]
    _rank: np.ndarray = field(init=False, repr=False)
    _id_to_row: dict = field(init=False, repr=False)

    def __post_init__(self):
        order = sorted(range(len(self.item_ids)), key=lambda i: self.item_ids[i])
        rank = np.empty(len(self.item_ids), dtype=np.int64)
        for pos, row in enumerate(order):
            rank[row] = pos
        self._rank = rank
        self._id_to_row = {item_id: i for i, item_id in enumerate(self.item_ids)}

    def __len__(self):
        return len(self.item_ids)

    def height(self) -> int:
        depths = {self.root: 1}
        best = 1
        stack = [self.root]
        while stack:
            node = stack.pop()
            for child in (self.inside[node], self.outside[node]):
                if child >= 0:
                    depths[child] = depths[node] + 1
                    best = max(best, depths[child])
                    stack.append(child)
        return best

    def knn(
        self,
        query,
        k: int,
        exclude: set[str] | None = None,
    ) -> list[dict]:
        """Exact k nearest neighbours of an item id or unit query vector.

        Returns ascending (distance, item id) entries, never including
        excluded ids. Result length is min(k, N - |exclude ∩ corpus|).
        """
        if k < 1:
            raise VpTreeError("k must be >= 1")
        query_vec = self._resolve_query(query)
        excluded_rows = self._exclude_rows(exclude)

        # Max-heap by (distance, id-rank) via negated keys; heap[0] is the
        # current worst kept candidate.
        heap: list[tuple[float, float, int]] = []

        def consider(row: int, dist: float):
            if row in excluded_rows:
                return
            key = (-dist, -int(self._rank[row]), row)
            if len(heap) < k:
                heapq.heappush(heap, key)
            elif key > heap[0]:
                heapq.heapreplace(heap, key)

        def tau():
            return -heap[0][0] if len(heap) == k else np.inf

        stack: list[tuple[int, float]] = [(self.root, 0.0)]
        while stack:
            node, lb = stack.pop()
            if lb > tau():
                continue
            vrow = self.vantage[node]
            dist = float(
                np.arccos(np.clip(self.vectors[vrow] @ query_vec, -1.0, 1.0)) / np.pi
            )
            consider(vrow, dist)
            r = self.radius[node]
            if r is None:
                continue
            inside_lb = max(0.0, dist - r)
            outside_lb = max(0.0, r - dist)
            # Push the far side first so the near side is explored first;
            # bounds are non-strict so equal-distance ties are still found.
            children = [(self.inside[node], inside_lb), (self.outside[node], outside_lb)]
            children.sort(key=lambda c: -c[1])
            for child, child_lb in children:
                if child >= 0 and child_lb <= tau():
                    stack.append((child, child_lb))

        results = sorted(((-d, -nr, row) for d, nr, row in heap))
        return [{"id": self.item_ids[row], "distance": d} for d, _, row in results]

    def range_query(self, query_vec, radius: float) -> list[dict]:
        """All items within the given angular radius, ascending."""
        if not 0.0 <= radius <= 1.0:
            raise VpTreeError("radius must be in [0, 1]")
        query_vec = self._resolve_query(query_vec)
        hits: list[tuple[float, int, int]] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            vrow = self.vantage[node]
            dist = float(
                np.arccos(np.clip(self.vectors[vrow] @ query_vec, -1.0, 1.0)) / np.pi
            )
            if dist <= radius:
                hits.append((dist, int(self._rank[vrow]), vrow))
            r = self.radius[node]
            if r is None:
                continue
            if self.inside[node] >= 0 and max(0.0, dist - r) <= radius:
                stack.append(self.inside[node])
            if self.outside[node] >= 0 and max(0.0, r - dist) <= radius:
                stack.append(self.outside[node])
        hits.sort()
        return [{"id": self.item_ids[row], "distance": d} for d, _, row in hits]

    def _resolve_query(self, query) -> np.ndarray:
        if isinstance(query, str):
            if query not in self._id_to_row:
                raise VpTreeError(f"unknown query id: {query!r}")
            return self.vectors[self._id_to_row[query]]
        vec = np.asarray(query, dtype=np.float64)
        if vec.shape != (self.vectors.shape[1],):
            raise VpTreeError(
                f"query dim {vec.shape} does not match index dim {self.vectors.shape[1]}"
            )
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > 1e-6:
            raise VpTreeError("query vector must be unit-norm")
        return vec

    def _exclude_rows(self, exclude: set[str] | None) -> set[int]:
        if not exclude:
            return set()
        return {self._id_to_row[i] for i in exclude if i in self._id_to_row}

    def to_json_dict(self, matrix_hash: str | None = None) -> dict:
        return {
            "version": 1,
            "model_id": self.model_id,
            "metric": "angular",
            "build_seed": self.build_seed,
            "matrix_hash": matrix_hash,
            "root": self.root,
            "vantage": self.vantage,
            "radius": self.radius,
            "inside": self.inside,
            "outside": self.outside,
        }


def build(matrix: EmbeddingMatrix, seed: int, validate: bool = False) -> VpTree:
    """Build a VP-tree over the matrix rows (assumed unit-norm).

    The vantage of every node is drawn uniformly from its subset with a
    PRNG seeded by ``seed``, and the split radius is the lower median of
    the remaining distances, so builds are deterministic.
    """
    n = len(matrix)
    if n == 0:
        raise VpTreeError("cannot build an index over an empty matrix")
    rng = np.random.default_rng(seed)
    vectors = matrix.vectors

    vantage: list[int] = []
    radius: list[float | None] = []
    inside: list[int] = []
    outside: list[int] = []

    def new_node(vrow: int) -> int:
        vantage.append(int(vrow))
        radius.append(None)
        inside.append(-1)
        outside.append(-1)
        return len(vantage) - 1

    # (rows, parent node, "inside"/"outside" slot); explicit stack keeps the
    # build safe for degenerate splits that would recurse N levels deep.
    root = -1
    stack: list[tuple[np.ndarray, int, str]] = [
        (np.arange(n, dtype=np.int64), -1, "root")
    ]
    while stack:
        rows, parent, slot = stack.pop()
        pick = int(rng.integers(len(rows)))
        vrow = int(rows[pick])
        node = new_node(vrow)
        if parent < 0:
            root = node
        elif slot == "inside":
            inside[parent] = node
        else:
            outside[parent] = node

        rest = np.delete(rows, pick)
        if rest.size == 0:
            continue
        dists = angular_distances(vectors[rest], vectors[vrow])
        split = float(np.sort(dists)[(rest.size - 1) // 2])  # lower median
        radius[node] = split
        in_mask = dists <= split
        in_rows, out_rows = rest[in_mask], rest[~in_mask]
        if validate:
            assert in_rows.size > 0
            assert float(dists[in_mask].max()) <= split
            if out_rows.size:
                assert float(dists[~in_mask].min()) > split
        if out_rows.size:
            stack.append((out_rows, node, "outside"))
        if in_rows.size:
            stack.append((in_rows, node, "inside"))

    return VpTree(
        model_id=matrix.model_id,
        build_seed=seed,
        item_ids=list(matrix.item_ids),
        vectors=vectors,
        root=root,
        vantage=vantage,
        radius=radius,
        inside=inside,
        outside=outside,
    )


def save_tree(path: str | Path, tree: VpTree, matrix_hash: str) -> bytes:
    payload = (
        json.dumps(tree.to_json_dict(matrix_hash), sort_keys=True) + "\n"
    ).encode("utf-8")
    Path(path).write_bytes(payload)
    return payload


def load_tree(path: str | Path, matrix: EmbeddingMatrix, matrix_hash: str) -> VpTree:
    """Load a cached tree; a stale matrix hash invalidates the cache."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("version") != 1:
        raise VpTreeError(f"{path}: unsupported tree version")
    if doc.get("matrix_hash") != matrix_hash:
        raise VpTreeError(f"{path}: tree cache is stale (matrix hash changed)")
    return VpTree(
        model_id=doc["model_id"],
        build_seed=doc["build_seed"],
        item_ids=list(matrix.item_ids),
        vectors=matrix.vectors,
        root=doc["root"],
        vantage=doc["vantage"],
        radius=doc["radius"],
        inside=doc["inside"],
        outside=doc["outside"],
    )
