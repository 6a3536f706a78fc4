"""DBSCAN labeling of 2D projections, used as visual cluster cues.

Classic DBSCAN leaves border-point assignment order-dependent; here the
expansion is pinned to item-index order so every labeling is reproducible:
seeds are scanned ascending, neighbours expand in ascending index order,
and final cluster ids are renumbered by the smallest index each cluster
contains.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np


class ClusterError(Exception):
    pass


@dataclass(frozen=True)
class ClusterParams:
    eps: float | str = "auto"  # "auto" resolves to 5% of the bbox diagonal
    min_pts: int = 5

    def __post_init__(self):
        if self.eps != "auto" and float(self.eps) <= 0:
            raise ClusterError("eps must be > 0 or 'auto'")
        if self.min_pts < 1:
            raise ClusterError("min_pts must be >= 1")


@dataclass
class ClusterLabeling:
    output_id: str
    labels: np.ndarray  # -1 noise, 0..K-1 clusters
    params_used: dict

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size and self.labels.max() >= 0 else 0


def resolve_eps(coords: np.ndarray, params: ClusterParams) -> float:
    if params.eps != "auto":
        return float(params.eps)
    spans = coords.max(axis=0) - coords.min(axis=0)
    return 0.05 * float(math.hypot(spans[0], spans[1]))


def dbscan(coords: np.ndarray, params: ClusterParams, output_id: str = "") -> ClusterLabeling:
    """Density cluster 2D points with deterministic labeling.

    Core points have at least ``min_pts`` neighbours (themselves included)
    within ``eps``. Border points belong to the first core cluster that
    reaches them in index-ordered expansion; everything else is noise.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ClusterError("coords must be an N x 2 array")
    n = coords.shape[0]
    if n == 0:
        raise ClusterError("cannot cluster an empty point set")
    if not np.all(np.isfinite(coords)):
        raise ClusterError("coords must be finite")
    eps = resolve_eps(coords, params)

    d2 = np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=2)
    within = d2 <= eps * eps
    neighbor_counts = within.sum(axis=1)
    core = neighbor_counts >= params.min_pts

    labels = np.full(n, -1, dtype=np.int64)
    cluster = 0
    for seed in range(n):
        if labels[seed] != -1 or not core[seed]:
            continue
        labels[seed] = cluster
        queue = deque([seed])
        while queue:
            point = queue.popleft()
            if not core[point]:
                continue
            for nb in np.flatnonzero(within[point]):
                if labels[nb] == -1:
                    labels[nb] = cluster
                    queue.append(int(nb))
        cluster += 1

    # Renumber so cluster ids follow the smallest index each one contains.
    firsts: dict[int, int] = {}
    for idx, lab in enumerate(labels):
        if lab >= 0 and lab not in firsts:
            firsts[lab] = idx
    remap = {
        old: new
        for new, old in enumerate(sorted(firsts, key=lambda lab: firsts[lab]))
    }
    labels = np.array([remap[lab] if lab >= 0 else -1 for lab in labels], dtype=np.int64)

    return ClusterLabeling(
        output_id=output_id,
        labels=labels,
        params_used={"eps": eps, "min_pts": params.min_pts},
    )


def cluster_summary(labeling: ClusterLabeling, corpus) -> list[dict]:
    """Per-cluster size and sample descriptors, largest clusters first."""
    members: dict[int, list[str]] = {}
    for idx, lab in enumerate(labeling.labels):
        if lab >= 0:
            members.setdefault(int(lab), []).append(corpus.items[idx].id)
    summary = []
    for cluster_id in sorted(members, key=lambda c: (-len(members[c]), c)):
        ids = sorted(members[cluster_id])
        summary.append(
            {
                "cluster_id": cluster_id,
                "size": len(ids),
                "sample_descriptors": [
                    corpus.get(i).canonical_text for i in ids[:5]
                ],
            }
        )
    return summary
