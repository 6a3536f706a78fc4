import math

import numpy as np
import pytest
import scipy.linalg

from taxolab.embeddings import EmbeddingMatrix
from taxolab.reduction import (
    GridConfig,
    ReductionError,
    ReductionSpec,
    expand_grid,
    mds_2d,
    output_id_for,
    pca_2d,
    tsne_2d,
    tsne_affinities,
)


def matrix_of(vectors, model_id="m") -> EmbeddingMatrix:
    vectors = np.asarray(vectors, dtype=np.float64)
    ids = [f"d{i:06d}" for i in range(vectors.shape[0])]
    return EmbeddingMatrix(model_id, vectors, ids)


def pairwise(coords):
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


# ---------------------------------------------------------------- PCA

def test_pca_rank1_input_has_zero_second_coordinate():
    rng = np.random.default_rng(0)
    direction = rng.standard_normal(64)
    line = np.outer(np.linspace(-2, 2, 20), direction)
    p = pca_2d(matrix_of(line))
    assert np.max(np.abs(p.coords[:, 1])) <= 1e-8


def test_pca_coords_are_centered():
    rng = np.random.default_rng(1)
    p = pca_2d(matrix_of(rng.standard_normal((30, 6))))
    assert np.max(np.abs(p.coords.mean(axis=0))) <= 1e-9


def test_pca_matches_covariance_eigen_oracle():
    # Oracle route: eigendecomposition of the sample covariance matrix.
    for seed in range(3):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((50, 8))
        p = pca_2d(matrix_of(x))
        xc = x - x.mean(axis=0)
        evals, evecs = scipy.linalg.eigh(xc.T @ xc / (len(x) - 1))
        top = evals[::-1][:2]
        assert np.allclose(p.diagnostics["explained_variance"], top, atol=1e-6)
        assert p.diagnostics["explained_variance"][0] >= p.diagnostics["explained_variance"][1]
        for comp in range(2):
            v = evecs[:, ::-1][:, comp]
            oracle_coords = xc @ v
            dot = float(
                np.dot(p.coords[:, comp], oracle_coords)
                / (np.linalg.norm(p.coords[:, comp]) * np.linalg.norm(oracle_coords))
            )
            assert abs(abs(dot) - 1.0) <= 1e-9  # same axis up to sign
            assert np.allclose(
                np.abs(p.coords[:, comp]), np.abs(oracle_coords * np.sign(dot)), atol=1e-6
            )


def test_pca_sign_convention_largest_loading_positive():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((40, 5))
    p1 = pca_2d(matrix_of(x))
    p2 = pca_2d(matrix_of(-x))  # flipped data still yields pinned signs
    xc = x - x.mean(axis=0)
    _, _, vt = np.linalg.svd(xc, full_matrices=False)
    for comp in range(2):
        loading = vt[comp]
        sign = 1.0 if loading[np.argmax(np.abs(loading))] >= 0 else -1.0
        assert np.allclose(p1.coords[:, comp], (xc @ (loading * sign)), atol=1e-9)
    assert np.allclose(np.abs(p1.coords), np.abs(p2.coords), atol=1e-9)


def test_pca_permutation_consistency():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((25, 7))
    perm = rng.permutation(25)
    base = pca_2d(matrix_of(x)).coords
    permuted = pca_2d(matrix_of(x[perm])).coords
    assert np.allclose(permuted[np.argsort(perm)], base, atol=1e-9)


def test_pca_degenerate_input_error():
    x = np.tile(np.arange(5.0), (6, 1))
    with pytest.raises(ReductionError, match="degenerate"):
        pca_2d(matrix_of(x))


# ---------------------------------------------------------------- MDS

def test_mds_recovers_planar_configurations():
    rng = np.random.default_rng(4)
    points = rng.uniform(-3, 3, size=(30, 2))
    padded = np.hstack([points, np.zeros((30, 5))])
    p = mds_2d(matrix_of(padded))
    assert np.allclose(pairwise(p.coords), pairwise(points), atol=1e-6)


def test_mds_equilateral_triangle_stays_equilateral():
    side = 1.0
    tri = np.array([[0.0, 0.0], [side, 0.0], [side / 2, side * math.sqrt(3) / 2]])
    padded = np.hstack([tri, np.zeros((3, 3))])
    p = mds_2d(matrix_of(padded))
    d = pairwise(p.coords)
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        assert d[i, j] == pytest.approx(side, abs=1e-6)


def test_mds_top2_eigenpairs_match_dense_solver():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((30, 10))
    p = mds_2d(matrix_of(x))
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    j = np.eye(30) - np.full((30, 30), 1 / 30)
    b = -0.5 * j @ d2 @ j
    b = (b + b.T) / 2
    evals = scipy.linalg.eigh(b, eigvals_only=True)[::-1]
    assert np.allclose(p.diagnostics["eigenvalues"], evals[:2], atol=1e-6)
    # eigenpair residuals: B v = lambda v for the reported pairs
    for comp in range(2):
        lam = p.diagnostics["eigenvalues"][comp]
        v = p.coords[:, comp] / math.sqrt(lam)
        assert np.linalg.norm(b @ v - lam * v) <= 1e-6


def test_mds_degenerate_input_error():
    x = np.ones((5, 4))
    with pytest.raises(ReductionError, match="degenerate"):
        mds_2d(matrix_of(x))


# ---------------------------------------------------------------- t-SNE

def blob_matrix(n_per_blob=20, dim=16, seed=6, spread=0.05, sep=4.0):
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((3, dim))
    centers *= sep / np.linalg.norm(centers, axis=1, keepdims=True)
    rows = [c + spread * rng.standard_normal((n_per_blob, dim)) for c in centers]
    return matrix_of(np.vstack(rows)), np.repeat(np.arange(3), n_per_blob)


def row_perplexities(p_cond: np.ndarray) -> np.ndarray:
    # Entropy oracle: perplexity = exp(shannon entropy in nats).
    perps = []
    for row in p_cond:
        nz = row[row > 0]
        perps.append(math.exp(-float(np.sum(nz * np.log(nz)))))
    return np.array(perps)


def test_affinity_rows_hit_target_perplexity():
    m, _ = blob_matrix()
    sq = np.sum(m.vectors**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2 * (m.vectors @ m.vectors.T)
    target = 12.0
    p_cond, _ = tsne_affinities(d2, target)
    perps = row_perplexities(p_cond)
    assert np.all(np.abs(perps - target) / target <= 1e-4)


def test_joint_p_is_symmetric_nonnegative_unit_sum():
    m, _ = blob_matrix(seed=7)
    sq = np.sum(m.vectors**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2 * (m.vectors @ m.vectors.T)
    p_cond, _ = tsne_affinities(d2, 10.0)
    p = (p_cond + p_cond.T) / (2 * len(m))
    assert np.all(p >= 0)
    assert np.allclose(p, p.T, atol=0)
    assert abs(p.sum() - 1.0) <= 1e-9


def test_tsne_descends_after_exaggeration():
    m, _ = blob_matrix(seed=8)
    spec = ReductionSpec(
        "tsne", {"perplexity": 10, "iterations": 400, "seed": 1, "exaggeration_iters": 100}
    )
    p = tsne_2d(m, spec)
    assert p.diagnostics["final_kl"] < p.diagnostics["kl_after_exaggeration"]
    assert np.all(np.isfinite(p.coords))


def test_tsne_bitwise_deterministic():
    m, _ = blob_matrix(seed=9)
    spec = ReductionSpec(
        "tsne", {"perplexity": 8, "iterations": 300, "seed": 2, "exaggeration_iters": 80}
    )
    a = tsne_2d(m, spec)
    b = tsne_2d(m, spec)
    assert np.array_equal(a.coords, b.coords)
    assert a.diagnostics == b.diagnostics


def test_tsne_separates_blobs():
    m, labels = blob_matrix(n_per_blob=30, dim=32, seed=10, spread=0.1, sep=8.0)
    spec = ReductionSpec(
        "tsne", {"perplexity": 10, "iterations": 600, "seed": 3, "exaggeration_iters": 150}
    )
    p = tsne_2d(m, spec)
    centroids = np.array([p.coords[labels == b].mean(axis=0) for b in range(3)])
    inter = min(
        np.linalg.norm(centroids[i] - centroids[j])
        for i in range(3)
        for j in range(i + 1, 3)
    )
    intra = np.mean(
        [np.linalg.norm(p.coords[i] - centroids[labels[i]]) for i in range(len(m))]
    )
    assert inter > 3 * intra


def test_tsne_perplexity_clamped_to_feasible_range():
    m, _ = blob_matrix(n_per_blob=4, seed=11)  # N = 12
    spec = ReductionSpec(
        "tsne", {"perplexity": 30, "iterations": 260, "seed": 0, "exaggeration_iters": 50}
    )
    p = tsne_2d(m, spec)
    assert p.diagnostics["perplexity_used"] == pytest.approx((12 - 1) / 3)


def test_tsne_too_few_rows_is_an_error():
    rng = np.random.default_rng(12)
    m = matrix_of(rng.standard_normal((5, 4)))
    with pytest.raises(ReductionError, match="at least 10"):
        tsne_2d(m, ReductionSpec("tsne", {"iterations": 260}))


def test_tsne_spec_validation():
    with pytest.raises(ReductionError, match="exaggeration"):
        ReductionSpec("tsne", {"iterations": 100, "exaggeration_iters": 200})
    with pytest.raises(ReductionError, match="perplexity"):
        ReductionSpec("tsne", {"perplexity": 0})


# ---------------------------------------------------------------- grid expansion

def specs_2x2x2():
    return GridConfig(
        model_ids=["m1", "m2"],
        specs=[ReductionSpec("pca"), ReductionSpec("mds")],
        cluster_params=[{"eps": "auto", "min_pts": 5}, {"eps": 0.5, "min_pts": 3}],
    )


def test_expand_grid_product():
    cells = expand_grid(specs_2x2x2())
    assert len(cells) == 8
    assert len({c["output_id"] for c in cells}) == 8
    # deterministic nesting: models outer, specs middle, cluster params inner
    assert [c["model_id"] for c in cells] == ["m1"] * 4 + ["m2"] * 4
    assert [c["method"] for c in cells] == ["pca", "pca", "mds", "mds"] * 2


def test_expand_grid_single_cell_id_is_stable():
    config = GridConfig(["m"], [ReductionSpec("pca")], [{"eps": "auto", "min_pts": 5}])
    a = expand_grid(config)
    b = expand_grid(config)
    assert a == b and len(a) == 1
    assert a[0]["output_id"] == output_id_for(
        "m", ReductionSpec("pca"), {"eps": "auto", "min_pts": 5}
    )


def test_expand_grid_duplicate_combination_collides():
    config = GridConfig(
        ["m", "m"], [ReductionSpec("pca")], [{"eps": "auto", "min_pts": 5}]
    )
    with pytest.raises(ReductionError, match="duplicate"):
        expand_grid(config)


def test_grid_config_empty_axis_rejected():
    with pytest.raises(ReductionError, match="non-empty"):
        GridConfig([], [ReductionSpec("pca")], [{}])
