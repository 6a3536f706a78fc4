"""2D projections of embedding matrices: PCA, classical MDS, exact t-SNE.

Every (model x reduction spec x cluster params) combination is one cell of
the precompute grid; cells are content-addressed by a hash of their full
parameterization so reruns can skip finished work.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingMatrix


class ReductionError(Exception):
    pass


TSNE_DEFAULTS = {
    "perplexity": 30.0,
    "iterations": 1000,
    "learning_rate": 200.0,
    "seed": 0,
    "early_exaggeration": 12.0,
    "exaggeration_iters": 250,
}


@dataclass(frozen=True)
class ReductionSpec:
    """One reduction method plus its parameters (output dim is always 2)."""

    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("tsne", "pca", "mds"):
            raise ReductionError(f"unknown reduction method: {self.method!r}")
        if self.method == "tsne":
            merged = dict(TSNE_DEFAULTS)
            merged.update(self.params)
            if merged["perplexity"] <= 0:
                raise ReductionError("perplexity must be > 0")
            if merged["iterations"] < merged["exaggeration_iters"]:
                raise ReductionError("iterations must be >= exaggeration_iters")
            object.__setattr__(self, "params", merged)
        elif self.params:
            raise ReductionError(f"{self.method} takes no parameters")

    def canonical(self) -> dict:
        return {"method": self.method, "params": dict(sorted(self.params.items()))}


@dataclass
class Projection:
    """N x 2 coordinates aligned to corpus order, plus method diagnostics."""

    output_id: str
    model_id: str
    method: str
    params: dict
    coords: np.ndarray
    diagnostics: dict

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if not np.all(np.isfinite(self.coords)):
            raise ReductionError("projection produced non-finite coordinates")


def _check_input(matrix: EmbeddingMatrix, min_rows: int):
    if len(matrix) < min_rows:
        raise ReductionError(f"need at least {min_rows} rows, got {len(matrix)}")
    spread = np.ptp(matrix.vectors, axis=0)
    if np.all(spread == 0):
        raise ReductionError("degenerate input: all rows identical")


def pca_2d(matrix: EmbeddingMatrix, output_id: str = "") -> Projection:
    """Project onto the top-2 principal components.

    Columns are mean-centered, coordinates come from the top-2 right
    singular vectors, and each loading vector is flipped so its
    largest-magnitude entry is positive, which pins the component signs.
    """
    _check_input(matrix, 3)
    x = matrix.vectors - matrix.vectors.mean(axis=0)
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    coords = np.empty((len(matrix), 2))
    variances = []
    n = len(matrix)
    for comp in range(2):
        loading = vt[comp]
        sign = 1.0 if loading[int(np.argmax(np.abs(loading)))] >= 0 else -1.0
        coords[:, comp] = u[:, comp] * s[comp] * sign
        variances.append(float(s[comp] ** 2 / (n - 1)))
    return Projection(
        output_id=output_id,
        model_id=matrix.model_id,
        method="pca",
        params={},
        coords=coords,
        diagnostics={"explained_variance": variances},
    )


def mds_2d(matrix: EmbeddingMatrix, output_id: str = "") -> Projection:
    """Classical (Torgerson) MDS on pairwise Euclidean row distances.

    Double-centers the squared distance matrix, takes the top-2 eigenpairs
    and scales eigenvectors by sqrt(max(eigenvalue, 0)).
    """
    _check_input(matrix, 3)
    x = matrix.vectors
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    n = len(matrix)
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ d2 @ j
    b = (b + b.T) / 2.0
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1][:2]
    top_vals = evals[order]
    coords = evecs[:, order] * np.sqrt(np.maximum(top_vals, 0.0))[None, :]
    return Projection(
        output_id=output_id,
        model_id=matrix.model_id,
        method="mds",
        params={},
        coords=coords,
        diagnostics={"eigenvalues": [float(v) for v in top_vals]},
    )


def tsne_affinities(
    distances_sq: np.ndarray, perplexity: float, tol: float = 1e-7, max_steps: int = 50
) -> tuple[np.ndarray, np.ndarray]:
    """Conditional Gaussian affinities with per-row bandwidth search.

    For each row, the precision beta is found by bisection so the row's
    Shannon entropy matches log(perplexity) within ``tol`` nats (at most
    ``max_steps`` halvings). The default stop is well inside the 1e-5
    entropy budget, keeping row perplexities within 1e-4 of the target in
    absolute terms. Returns the row-stochastic conditional matrix and the
    betas.
    """
    n = distances_sq.shape[0]
    p_cond = np.zeros((n, n))
    betas = np.ones(n)
    log_u = math.log(perplexity)
    for i in range(n):
        d_i = np.delete(distances_sq[i], i)
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        for _ in range(max_steps):
            w = np.exp(-d_i * beta)
            sum_w = w.sum()
            if sum_w <= 0:
                h, p_row = 0.0, w
            else:
                h = math.log(sum_w) + beta * float((d_i * w).sum()) / sum_w
                p_row = w / sum_w
            diff = h - log_u
            if abs(diff) <= tol:
                break
            if diff > 0:  # entropy too high -> narrow the kernel
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
        betas[i] = beta
        p_cond[i, :i] = p_row[:i]
        p_cond[i, i + 1 :] = p_row[i:]
    return p_cond, betas


def _kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / np.maximum(q[mask], 1e-12))))


def _student_q(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sq = np.sum(y * y, axis=1)
    num = 1.0 / (1.0 + sq[:, None] + sq[None, :] - 2.0 * (y @ y.T))
    np.fill_diagonal(num, 0.0)
    q = num / num.sum()
    return q, num


def tsne_2d(matrix: EmbeddingMatrix, spec: ReductionSpec, output_id: str = "") -> Projection:
    """Exact (quadratic) t-SNE down to 2D.

    Full algorithm: perplexity-calibrated Gaussian affinities, symmetrized
    joint P, Student-t low-dimensional kernel, gradient descent with
    per-dimension gains, momentum 0.5 switching to 0.8 at iteration 250,
    and early exaggeration for the first ``exaggeration_iters`` iterations.
    The KL divergence right after exaggeration lifts and at the end are
    recorded in diagnostics.
    """
    if spec.method != "tsne":
        raise ReductionError(f"expected a tsne spec, got {spec.method}")
    _check_input(matrix, 10)
    n = len(matrix)
    params = spec.params
    perplexity = min(float(params["perplexity"]), (n - 1) / 3.0)
    if perplexity < 1.0:
        raise ReductionError(f"perplexity infeasible for N={n}")
    iterations = int(params["iterations"])
    eta = float(params["learning_rate"])
    exaggeration = float(params["early_exaggeration"])
    exaggeration_iters = int(params["exaggeration_iters"])
    seed = int(params["seed"])

    x = matrix.vectors
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)

    p_cond, _ = tsne_affinities(d2, perplexity)
    p = (p_cond + p_cond.T) / (2.0 * n)

    rng = np.random.default_rng(seed)
    y = rng.standard_normal((n, 2)) * 1e-4
    increments = np.zeros_like(y)
    gains = np.ones_like(y)

    p_run = p * exaggeration if exaggeration_iters > 0 else p.copy()
    kl_after_exaggeration = None
    if exaggeration_iters == 0:
        q, _ = _student_q(y)
        kl_after_exaggeration = _kl_divergence(p, q)

    for it in range(iterations):
        q, num = _student_q(y)
        pq = (p_run - q) * num
        grad = 4.0 * (pq.sum(axis=1)[:, None] * y - pq @ y)

        momentum = 0.5 if it < 250 else 0.8
        same_sign = np.sign(grad) == np.sign(increments)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        increments = momentum * increments - eta * (gains * grad)
        y = y + increments
        y = y - y.mean(axis=0)

        if it + 1 == exaggeration_iters:
            p_run = p
            q, _ = _student_q(y)
            kl_after_exaggeration = _kl_divergence(p, q)

    q, _ = _student_q(y)
    final_kl = _kl_divergence(p, q)
    return Projection(
        output_id=output_id,
        model_id=matrix.model_id,
        method="tsne",
        params=dict(params),
        coords=y,
        diagnostics={
            "final_kl": final_kl,
            "kl_after_exaggeration": kl_after_exaggeration,
            "perplexity_used": perplexity,
        },
    )


def reduce_2d(matrix: EmbeddingMatrix, spec: ReductionSpec, output_id: str = "") -> Projection:
    if spec.method == "pca":
        return pca_2d(matrix, output_id)
    if spec.method == "mds":
        return mds_2d(matrix, output_id)
    return tsne_2d(matrix, spec, output_id)


@dataclass
class GridConfig:
    """The precompute fan-out: models x reduction specs x cluster params."""

    model_ids: list[str]
    specs: list[ReductionSpec]
    cluster_params: list[dict]

    def __post_init__(self):
        if not self.model_ids or not self.specs or not self.cluster_params:
            raise ReductionError("grid config lists must be non-empty")

    def size(self) -> int:
        return len(self.model_ids) * len(self.specs) * len(self.cluster_params)


def output_id_for(model_id: str, spec: ReductionSpec, cluster_param: dict) -> str:
    """Content hash of a grid cell's full parameterization."""
    blob = json.dumps(
        {
            "model_id": model_id,
            "reduction": spec.canonical(),
            "cluster": dict(sorted(cluster_param.items())),
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def expand_grid(config: GridConfig) -> list[dict]:
    """Cartesian product of the grid axes, in deterministic order.

    Models vary slowest, then reduction specs, then cluster params. Cell
    ids are content hashes, so a config that lists the same combination
    twice collides and is rejected.
    """
    cells = []
    seen = set()
    for model_id in config.model_ids:
        for spec in config.specs:
            for cluster_param in config.cluster_params:
                oid = output_id_for(model_id, spec, cluster_param)
                if oid in seen:
                    raise ReductionError(
                        f"duplicate grid cell for model={model_id!r} "
                        f"method={spec.method!r} (output_id {oid})"
                    )
                seen.add(oid)
                cells.append(
                    {
                        "output_id": oid,
                        "model_id": model_id,
                        "method": spec.method,
                        "params": dict(spec.params),
                        "cluster_params": dict(cluster_param),
                    }
                )
    return cells
