import numpy as np
import pytest

from taxolab.clustering import ClusterError, ClusterParams, cluster_summary, dbscan, resolve_eps

from conftest import make_corpus


def reference_dbscan(coords: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Quadratic reference with the same border rule, written independently.

    Clusters are connected components of core points; a border point joins
    the reaching cluster whose earliest core has the smallest index, which
    is what index-ordered expansion produces.
    """
    n = len(coords)
    d2 = np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=2)
    within = d2 <= eps * eps
    core = np.flatnonzero(within.sum(axis=1) >= min_pts)
    core_set = set(core.tolist())

    parent = {c: c for c in core_set}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in core:
        for j in core:
            if j > i and within[i, j]:
                parent[find(int(i))] = find(int(j))

    comp_min: dict[int, int] = {}
    for c in core_set:
        root = find(c)
        comp_min[root] = min(comp_min.get(root, c), c)

    labels = np.full(n, -1, dtype=np.int64)
    cluster_of_root = {}
    for idx, root in enumerate(sorted(set(map(find, core_set)), key=lambda r: comp_min[find(r)])):
        cluster_of_root[find(root)] = idx
    for c in core_set:
        labels[c] = cluster_of_root[find(c)]
    for p in range(n):
        if p in core_set:
            continue
        reaching = [int(c) for c in core if within[c, p]]
        if reaching:
            best = min(reaching, key=lambda c: comp_min[find(c)])
            labels[p] = cluster_of_root[find(best)]
    return labels


def partition_of(labels: np.ndarray):
    clusters: dict[int, set[int]] = {}
    noise = set()
    for idx, lab in enumerate(labels):
        if lab < 0:
            noise.add(idx)
        else:
            clusters.setdefault(int(lab), set()).add(idx)
    return frozenset(frozenset(c) for c in clusters.values()), frozenset(noise)


def test_single_tight_blob_is_one_cluster():
    rng = np.random.default_rng(0)
    coords = rng.normal(0, 0.01, size=(12, 2))
    labeling = dbscan(coords, ClusterParams(eps=1.0, min_pts=5))
    assert set(labeling.labels.tolist()) == {0}


def test_all_sparse_is_all_noise():
    coords = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]])
    labeling = dbscan(coords, ClusterParams(eps=1.0, min_pts=2))
    assert set(labeling.labels.tolist()) == {-1}


def test_matches_reference_on_random_sets():
    for seed in range(8):
        rng = np.random.default_rng(seed)
        coords = rng.uniform(0, 1, size=(200, 2))
        eps = float(rng.uniform(0.04, 0.09))
        min_pts = int(rng.integers(3, 7))
        labeling = dbscan(coords, ClusterParams(eps=eps, min_pts=min_pts))
        want = reference_dbscan(coords, eps, min_pts)
        assert partition_of(labeling.labels) == partition_of(want)


def test_cluster_ids_follow_smallest_contained_index():
    rng = np.random.default_rng(3)
    coords = rng.uniform(0, 1, size=(150, 2))
    labeling = dbscan(coords, ClusterParams(eps=0.07, min_pts=4))
    k = labeling.n_clusters
    assert set(labeling.labels.tolist()) - {-1} == set(range(k))
    firsts = [int(np.flatnonzero(labeling.labels == c)[0]) for c in range(k)]
    assert firsts == sorted(firsts)


def test_auto_eps_is_five_percent_of_bbox_diagonal():
    coords = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])
    assert resolve_eps(coords, ClusterParams(eps="auto")) == pytest.approx(0.25)
    labeling = dbscan(coords, ClusterParams(eps="auto", min_pts=1))
    assert labeling.params_used["eps"] == pytest.approx(0.25)


def test_core_and_noise_soundness_post_hoc():
    rng = np.random.default_rng(4)
    coords = rng.uniform(0, 1, size=(180, 2))
    params = ClusterParams(eps=0.06, min_pts=5)
    labeling = dbscan(coords, params)
    d2 = np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=2)
    within = d2 <= 0.06 * 0.06
    counts = within.sum(axis=1)
    for idx, lab in enumerate(labeling.labels):
        if lab == -1:
            assert counts[idx] < params.min_pts  # noise is never core
        else:
            # every clustered point touches a core point of its own cluster
            neighbours = np.flatnonzero(within[idx])
            assert any(
                counts[nb] >= params.min_pts and labeling.labels[nb] == lab
                for nb in neighbours
            )


def test_partition_stable_under_permutation():
    rng = np.random.default_rng(5)
    coords = rng.uniform(0, 1, size=(120, 2))
    params = ClusterParams(eps=0.08, min_pts=4)
    base = dbscan(coords, params).labels
    perm = rng.permutation(120)
    permuted = dbscan(coords[perm], params).labels
    unpermuted = permuted[np.argsort(perm)]
    assert partition_of(base) == partition_of(unpermuted)


def test_empty_input_is_an_error():
    with pytest.raises(ClusterError):
        dbscan(np.empty((0, 2)), ClusterParams())


def test_param_validation():
    with pytest.raises(ClusterError):
        ClusterParams(eps=-1.0)
    with pytest.raises(ClusterError):
        ClusterParams(min_pts=0)


# ---------------------------------------------------------------- summaries

def test_cluster_summary_orders_by_size_then_id():
    corpus = make_corpus([f"wort{i:02d}" for i in range(16)])
    labels = np.array([0] * 10 + [1] * 3 + [2] * 3)
    labeling = dbscan(np.zeros((1, 2)), ClusterParams(min_pts=1))  # shape only
    labeling.labels = labels
    summary = cluster_summary(labeling, corpus)
    assert [s["cluster_id"] for s in summary] == [0, 1, 2]
    assert [s["size"] for s in summary] == [10, 3, 3]
    assert summary[0]["sample_descriptors"] == [
        corpus.items[i].canonical_text for i in range(5)
    ]


def test_cluster_summary_excludes_noise():
    corpus = make_corpus(["a1", "b2", "c3"])
    labeling = dbscan(np.zeros((1, 2)), ClusterParams(min_pts=1))
    labeling.labels = np.array([-1, -1, -1])
    assert cluster_summary(labeling, corpus) == []
