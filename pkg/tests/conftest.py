from pathlib import Path

import numpy as np
import pytest

from taxolab.embeddings import hash_embed, normalize_rows
from taxolab.ingest import CleanCorpus, CorpusItem, IngestConfig, parse_corpus, run_pipeline
from taxolab.precompute import run_precompute
from taxolab.store import ArtifactStore

FIXTURES = Path(__file__).parent / "fixtures"

DEMO_WORDS = [
    "verkehr", "umwelt", "bildung", "energie", "wasser", "abfall", "kultur",
    "sport", "gesundheit", "wohnen", "finanzen", "tourismus", "klima",
    "naturschutz", "digitalisierung", "radwege", "lärmschutz", "stadtplanung",
    "denkmalpflege", "wirtschaft", "forsten", "landwirtschaft", "verbraucher",
    "justiz", "soziales", "arbeit", "migration", "inklusion", "jugend",
    "senioren", "bibliotheken", "museen", "theater", "parks", "spielplätze",
    "friedhöfe", "strassenbau", "brücken", "tunnel", "beleuchtung",
]


def ingest_fixture_config() -> IngestConfig:
    return IngestConfig(
        stopword_paths={"de": FIXTURES / "stopwords_de.txt"},
        gazetteer_path=FIXTURES / "gazetteer.txt",
        levenshtein_max_distance=1,
        levenshtein_min_length=5,
        min_count=4,
    )


@pytest.fixture(scope="session")
def fixture_corpus() -> CleanCorpus:
    raw = parse_corpus(FIXTURES / "raw_descriptors.jsonl", "jsonl")
    return run_pipeline(raw, ingest_fixture_config())


def make_corpus(words: list[str]) -> CleanCorpus:
    items = [
        CorpusItem(id=f"d{i:06d}", canonical_text=w, total_count=5, merged_raw_forms=(w,))
        for i, w in enumerate(sorted(words))
    ]
    return CleanCorpus(items=items, pipeline_report={})


@pytest.fixture(scope="session")
def demo_corpus() -> CleanCorpus:
    return make_corpus(DEMO_WORDS)


def demo_grid_config() -> dict:
    return {
        "models": [
            {"model_id": "hash-16", "source": {"builtin": {"dim": 16, "seed": 3}}},
            {"model_id": "hash-8", "source": {"builtin": {"dim": 8, "seed": 4}}},
        ],
        "specs": [
            {"method": "pca"},
            {
                "method": "tsne",
                "params": {"perplexity": 5, "iterations": 260, "seed": 5,
                           "exaggeration_iters": 100},
            },
        ],
        "cluster_params": [
            {"eps": "auto", "min_pts": 3},
            {"eps": "auto", "min_pts": 5},
        ],
    }


def build_demo_store(root: Path, corpus: CleanCorpus, workers: int = 1) -> ArtifactStore:
    store = ArtifactStore(root)
    store.save_artifact("corpus", "corpus", corpus.to_json_bytes(), "ingest")
    run_precompute(store, demo_grid_config(), seed=0, workers=workers)
    return store


@pytest.fixture(scope="session")
def demo_store(tmp_path_factory, demo_corpus) -> ArtifactStore:
    return build_demo_store(tmp_path_factory.mktemp("store"), demo_corpus)


@pytest.fixture(scope="session")
def demo_matrix(demo_corpus):
    return normalize_rows(hash_embed(demo_corpus, 16, seed=3, model_id="hash-16"))


def random_unit_matrix(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    vectors = rng.standard_normal((n, dim))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def make_engine(corpus: CleanCorpus, k_per_member: int = 10, **engine_kwargs):
    """Session engine over two hash models and three grid outputs."""
    from taxolab.reduction import mds_2d, pca_2d
    from taxolab.session import OutputRef, SessionEngine
    from taxolab.vptree import build as build_tree

    matrices = {
        "hash-16": normalize_rows(hash_embed(corpus, 16, seed=3, model_id="hash-16")),
        "hash-8": normalize_rows(hash_embed(corpus, 8, seed=4, model_id="hash-8")),
    }
    trees = {mid: build_tree(m, seed=0) for mid, m in matrices.items()}
    outputs = {}
    for output_id, model_id, reducer in [
        ("out-16-pca", "hash-16", pca_2d),
        ("out-16-mds", "hash-16", mds_2d),
        ("out-8-pca", "hash-8", pca_2d),
    ]:
        proj = reducer(matrices[model_id], output_id)
        outputs[output_id] = OutputRef(
            output_id=output_id, model_id=model_id, coords=proj.coords
        )
    return SessionEngine(
        corpus=corpus,
        matrices=matrices,
        trees=trees,
        outputs=outputs,
        k_per_member=k_per_member,
        **engine_kwargs,
    )
