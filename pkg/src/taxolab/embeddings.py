"""Per-model embedding matrices aligned to the corpus.

Embeddings enter as artifacts (EMB1 binary or JSONL) or from the built-in
deterministic 3-gram hashing embedder used for tests and demos. All
similarity work downstream runs on unit-normalized rows under angular
distance, which is a proper metric on the unit sphere.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ingest import CleanCorpus

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1


class EmbeddingError(Exception):
    pass


@dataclass
class EmbeddingMatrix:
    """N x dim float matrix whose rows follow corpus item order."""

    model_id: str
    vectors: np.ndarray
    item_ids: list[str]

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise EmbeddingError("vectors must be a 2D array")
        if self.vectors.shape[0] != len(self.item_ids):
            raise EmbeddingError(
                f"row count {self.vectors.shape[0]} != id count {len(self.item_ids)}"
            )
        if self.vectors.shape[1] < 2:
            raise EmbeddingError("embedding dim must be >= 2")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]

    def row_for(self, item_id: str) -> np.ndarray:
        return self.vectors[self.item_ids.index(item_id)]


@dataclass
class ModelSource:
    """Where a model's vectors come from: a file or the builtin embedder."""

    file: str | None = None
    builtin: dict | None = None  # {"dim": int, "seed": int}

    def describe(self) -> dict:
        if self.file is not None:
            return {"file": str(self.file)}
        return {"builtin": dict(self.builtin or {})}


@dataclass
class ModelCatalog:
    """Roster of embedding models the grid and the UI can offer."""

    entries: list[dict] = field(default_factory=list)

    def __post_init__(self):
        ids = [e["model_id"] for e in self.entries]
        if len(ids) != len(set(ids)):
            raise EmbeddingError("duplicate model_id in catalog")

    @property
    def model_ids(self) -> list[str]:
        return [e["model_id"] for e in self.entries]


def _check_finite(vectors: np.ndarray):
    bad = np.where(~np.isfinite(vectors))
    if bad[0].size:
        raise EmbeddingError(f"non-finite embedding component at row {int(bad[0][0])}")


def _align_to_corpus(
    model_id: str, rows: dict[str, np.ndarray], corpus: CleanCorpus, dim: int
) -> EmbeddingMatrix:
    corpus_ids = corpus.item_ids
    missing = [i for i in corpus_ids if i not in rows]
    surplus = [i for i in rows if i not in corpus._by_id]
    if missing or surplus:
        parts = []
        if missing:
            parts.append(f"missing ids: {', '.join(missing[:10])}")
        if surplus:
            parts.append(f"surplus ids: {', '.join(surplus[:10])}")
        raise EmbeddingError(f"embedding/corpus id mismatch ({'; '.join(parts)})")
    matrix = np.empty((len(corpus_ids), dim), dtype=np.float64)
    for i, item_id in enumerate(corpus_ids):
        matrix[i] = rows[item_id]
    _check_finite(matrix)
    return EmbeddingMatrix(model_id=model_id, vectors=matrix, item_ids=list(corpus_ids))


def parse_emb1(data: bytes) -> tuple[list[str], np.ndarray]:
    """Decode an EMB1 payload, returning ids and the float32 matrix as stored."""
    if data[:4] != EMB1_MAGIC:
        raise EmbeddingError("not an EMB1 payload")
    version, count, dim = struct.unpack_from("<III", data, 4)
    if version != EMB1_VERSION:
        raise EmbeddingError(f"unsupported EMB1 version {version}")
    offset = 16
    ids = []
    for _ in range(count):
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        ids.append(data[offset : offset + length].decode("utf-8"))
        offset += length
    expected = count * dim * 4
    block = data[offset : offset + expected]
    if len(block) != expected:
        raise EmbeddingError("truncated EMB1 vector block")
    matrix = np.frombuffer(block, dtype="<f4").reshape(count, dim)
    return ids, matrix


def read_emb1(path: str | Path) -> tuple[list[str], np.ndarray]:
    try:
        return parse_emb1(Path(path).read_bytes())
    except EmbeddingError as exc:
        raise EmbeddingError(f"{path}: {exc}") from None


def write_emb1(path: str | Path, ids: list[str], vectors: np.ndarray) -> bytes:
    """Serialize to the EMB1 binary layout; returns the written bytes."""
    vectors = np.ascontiguousarray(np.asarray(vectors), dtype="<f4")
    count, dim = vectors.shape
    if count != len(ids):
        raise EmbeddingError("id/vector count mismatch")
    out = bytearray()
    out += EMB1_MAGIC
    out += struct.pack("<III", EMB1_VERSION, count, dim)
    for item_id in ids:
        encoded = item_id.encode("utf-8")
        out += struct.pack("<I", len(encoded))
        out += encoded
    out += vectors.tobytes()
    Path(path).write_bytes(bytes(out))
    return bytes(out)


def emb1_bytes(ids: list[str], vectors: np.ndarray) -> bytes:
    vectors = np.ascontiguousarray(np.asarray(vectors), dtype="<f4")
    out = bytearray()
    out += EMB1_MAGIC
    out += struct.pack("<III", EMB1_VERSION, vectors.shape[0], vectors.shape[1])
    for item_id in ids:
        encoded = item_id.encode("utf-8")
        out += struct.pack("<I", len(encoded))
        out += encoded
    out += vectors.tobytes()
    return bytes(out)


def load_embeddings(
    path: str | Path, expected_corpus: CleanCorpus, model_id: str | None = None
) -> EmbeddingMatrix:
    """Load an embedding file and re-align rows to corpus id order.

    The format is sniffed: files starting with the EMB1 magic are binary,
    anything else is treated as JSONL ({"id": ..., "vector": [...]}).
    """
    path = Path(path)
    if model_id is None:
        model_id = path.stem
    with open(path, "rb") as fh:
        magic = fh.read(4)
    rows: dict[str, np.ndarray] = {}
    if magic == EMB1_MAGIC:
        ids, matrix = read_emb1(path)
        if len(set(ids)) != len(ids):
            raise EmbeddingError(f"{path}: duplicate ids")
        dim = matrix.shape[1]
        for i, item_id in enumerate(ids):
            rows[item_id] = matrix[i].astype(np.float64)
    else:
        dim = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise EmbeddingError(f"{path} line {lineno}: invalid JSON") from exc
                if "id" not in rec or "vector" not in rec:
                    raise EmbeddingError(f"{path} line {lineno}: need 'id' and 'vector'")
                vec = np.asarray(rec["vector"], dtype=np.float32).astype(np.float64)
                if dim is None:
                    dim = vec.shape[0]
                elif vec.shape[0] != dim:
                    raise EmbeddingError(f"{path} line {lineno}: inconsistent dim")
                if rec["id"] in rows:
                    raise EmbeddingError(f"{path} line {lineno}: duplicate id {rec['id']!r}")
                rows[rec["id"]] = vec
        if dim is None:
            raise EmbeddingError(f"{path}: empty embedding file")
    return _align_to_corpus(model_id, rows, expected_corpus, dim)


def _text_grams(text: str) -> list[str]:
    if len(text) < 3:
        return [text]
    return [text[i : i + 3] for i in range(len(text) - 2)]


def _gram_vector(gram: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.blake2b(
        f"{seed}\x1f{gram}".encode("utf-8"), digest_size=16
    ).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def hash_embed(
    corpus: CleanCorpus, dim: int, seed: int, model_id: str | None = None
) -> EmbeddingMatrix:
    """Deterministic builtin embedder over character 3-grams.

    Each descriptor is the normalized sum of seeded pseudo-random unit
    vectors, one per 3-gram occurrence, so texts sharing many 3-grams land
    close in cosine terms. Purely a stand-in for real sentence encoders.
    """
    if dim < 2:
        raise EmbeddingError("dim must be >= 2")
    if model_id is None:
        model_id = f"hash-{dim}-s{seed}"
    cache: dict[str, np.ndarray] = {}
    matrix = np.zeros((len(corpus), dim), dtype=np.float64)
    for i, item in enumerate(corpus.items):
        acc = np.zeros(dim)
        for gram in _text_grams(item.canonical_text):
            if gram not in cache:
                cache[gram] = _gram_vector(gram, dim, seed)
            acc += cache[gram]
        norm = np.linalg.norm(acc)
        if norm < 1e-12:
            acc = _gram_vector(f"\x00{item.canonical_text}", dim, seed)
            norm = np.linalg.norm(acc)
        matrix[i] = acc / norm
    return EmbeddingMatrix(model_id=model_id, vectors=matrix, item_ids=corpus.item_ids)


def normalize_rows(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit Euclidean norm."""
    norms = np.linalg.norm(matrix.vectors, axis=1)
    zero = np.where(norms == 0)[0]
    if zero.size:
        raise EmbeddingError(f"zero-norm row at index {int(zero[0])}")
    return EmbeddingMatrix(
        model_id=matrix.model_id,
        vectors=matrix.vectors / norms[:, None],
        item_ids=list(matrix.item_ids),
    )


def angular_distance(u: np.ndarray, v: np.ndarray) -> float:
    """arccos of the clamped dot product, scaled to [0, 1].

    Assumes unit-norm inputs; a metric on the unit sphere, unlike raw
    cosine similarity.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise EmbeddingError(f"dim mismatch: {u.shape} vs {v.shape}")
    return float(np.arccos(np.clip(np.dot(u, v), -1.0, 1.0)) / math.pi)


def angular_distances(rows: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorized angular distance from every row to one unit vector."""
    dots = np.clip(rows @ np.asarray(v, dtype=np.float64), -1.0, 1.0)
    return np.arccos(dots) / math.pi
