"""Descriptor corpus ingestion: parsing plus the five-step cleaning pipeline.

The pipeline reduces a raw descriptor dump to a canonical corpus:

  1. drop items that are only numbers or dates
  2. drop items made up entirely of stop-words
  3. drop items exactly matching a place-name gazetteer
  4. merge near-duplicates (trim/lowercase, fingerprint keys, edit distance)
  5. drop items whose merged count stays under a frequency threshold

Every canonical item keeps provenance back to the raw forms it absorbed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping


class IngestError(Exception):
    """Raised for unparseable input files or malformed records."""


@dataclass(frozen=True)
class RawItem:
    """One descriptor as submitted, with its occurrence count."""

    raw_text: str
    count: int = 1


@dataclass(frozen=True)
class CorpusItem:
    id: str
    canonical_text: str
    total_count: int
    merged_raw_forms: tuple[str, ...]


@dataclass
class CleanCorpus:
    """Ordered canonical descriptors plus the per-step pipeline report."""

    items: list[CorpusItem]
    pipeline_report: dict

    def __post_init__(self):
        self._by_id = {it.id: it for it in self.items}

    def __len__(self):
        return len(self.items)

    @property
    def item_ids(self) -> list[str]:
        return [it.id for it in self.items]

    def get(self, item_id: str) -> CorpusItem:
        return self._by_id[item_id]

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def to_json_dict(self) -> dict:
        return {
            "version": 1,
            "items": [
                {
                    "id": it.id,
                    "canonical_text": it.canonical_text,
                    "total_count": it.total_count,
                    "merged_raw_forms": list(it.merged_raw_forms),
                }
                for it in self.items
            ],
            "pipeline_report": self.pipeline_report,
        }

    def to_json_bytes(self) -> bytes:
        return (
            json.dumps(self.to_json_dict(), sort_keys=True, ensure_ascii=False, indent=1) + "\n"
        ).encode("utf-8")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CleanCorpus":
        items = [
            CorpusItem(
                id=rec["id"],
                canonical_text=rec["canonical_text"],
                total_count=rec["total_count"],
                merged_raw_forms=tuple(rec["merged_raw_forms"]),
            )
            for rec in doc["items"]
        ]
        return cls(items=items, pipeline_report=doc.get("pipeline_report", {}))


@dataclass
class IngestConfig:
    """Thresholds and lookup files for the cleaning pipeline."""

    stopword_paths: dict[str, str | Path] = field(default_factory=dict)
    gazetteer_path: str | Path | None = None
    levenshtein_max_distance: int = 1
    levenshtein_min_length: int = 5
    min_count: int = 4

    def __post_init__(self):
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.levenshtein_max_distance < 0:
            raise ValueError("levenshtein_max_distance must be >= 0")


def _read_word_file(path: str | Path) -> set[str]:
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word:
                words.add(word.lower())
    return words


def load_stopwords(config: IngestConfig) -> set[str]:
    """Union of all configured per-language stopword files, lowercased."""
    words: set[str] = set()
    for path in config.stopword_paths.values():
        words |= _read_word_file(path)
    return words


def load_gazetteer(config: IngestConfig) -> set[str]:
    if config.gazetteer_path is None:
        return set()
    return _read_word_file(config.gazetteer_path)


def parse_corpus(path: str | Path, format: str) -> list[RawItem]:
    """Parse a raw descriptor file into RawItems.

    ``format`` is "jsonl" ({"text": ..., "count": ...} per line) or "csv"
    (two columns, text then count). A missing count defaults to 1.
    Malformed records raise IngestError with the offending line number.
    """
    if format not in ("jsonl", "csv"):
        raise IngestError(f"unknown corpus format: {format!r}")
    path = Path(path)
    if not path.exists():
        raise IngestError(f"corpus file not found: {path}")
    text = path.read_text(encoding="utf-8")

    items: list[RawItem] = []
    if format == "jsonl":
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(rec, dict) or "text" not in rec:
                raise IngestError(f"line {lineno}: record must be an object with a 'text' field")
            items.append(_make_raw_item(rec["text"], rec.get("count", 1), lineno))
    else:
        reader = csv.reader(io.StringIO(text))
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) > 2:
                raise IngestError(f"line {lineno}: expected at most 2 columns, got {len(row)}")
            count = row[1] if len(row) == 2 and row[1].strip() != "" else 1
            items.append(_make_raw_item(row[0], count, lineno))

    if not items:
        raise IngestError(f"corpus file is empty: {path}")
    return items


def _make_raw_item(text, count, lineno: int) -> RawItem:
    if not isinstance(text, str):
        raise IngestError(f"line {lineno}: 'text' must be a string")
    if not text.strip():
        raise IngestError(f"line {lineno}: 'text' is empty")
    try:
        count = int(count)
    except (TypeError, ValueError):
        raise IngestError(f"line {lineno}: count {count!r} is not an integer") from None
    if count < 1:
        raise IngestError(f"line {lineno}: count must be >= 1, got {count}")
    return RawItem(raw_text=text, count=count)


def _is_numeric_or_date(text: str) -> bool:
    digits = 0
    for ch in text:
        if ch.isspace() or ch in "./:-":
            continue
        if ch.isdecimal():
            digits += 1
            continue
        return False
    return digits > 0


def filter_numeric_date(items: list[RawItem]) -> tuple[list[RawItem], list[RawItem]]:
    """Step 1: drop items that are nothing but digits and date separators."""
    kept, removed = [], []
    for item in items:
        (removed if _is_numeric_or_date(item.raw_text) else kept).append(item)
    return kept, removed


def filter_stopword_only(
    items: list[RawItem], stopwords: set[str]
) -> tuple[list[RawItem], list[RawItem]]:
    """Step 2: drop items whose every token is a stop-word."""
    kept, removed = [], []
    for item in items:
        tokens = item.raw_text.split()
        if tokens and all(tok.lower() in stopwords for tok in tokens):
            removed.append(item)
        else:
            kept.append(item)
    return kept, removed


def filter_place_names(
    items: list[RawItem], gazetteer: set[str]
) -> tuple[list[RawItem], list[RawItem]]:
    """Step 3: drop items whose normalized form is exactly a gazetteer entry."""
    kept, removed = [], []
    for item in items:
        (removed if normalize(item.raw_text) in gazetteer else kept).append(item)
    return kept, removed


def normalize(text: str) -> str:
    """Trim surrounding whitespace and lowercase (Unicode default mapping)."""
    return text.strip().lower()


def fingerprint_key(text: str) -> str:
    """Canonical key for near-duplicate grouping.

    Normalize, strip Unicode punctuation, split on whitespace, deduplicate
    tokens, sort them by code point and rejoin. Token-permuted and
    punctuation-variant strings collide on the same key.
    """
    cleaned = "".join(
        ch for ch in normalize(text) if not unicodedata.category(ch).startswith("P")
    )
    tokens = sorted(set(cleaned.split()))
    return " ".join(tokens)


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (insert/delete/substitute) over code points."""
    if a == b:
        return 0
    if len(a) > len(b):
        a, b = b, a
    if not a:
        return len(b)
    previous = list(range(len(a) + 1))
    for i, cb in enumerate(b, start=1):
        current = [i]
        for j, ca in enumerate(a, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[len(a)]


class UnionFind:
    """Disjoint sets over hashable keys, with path compression."""

    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        root = x
        while self.parent.setdefault(root, root) != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[ry] = rx

    def components(self) -> dict:
        groups: dict = {}
        for x in self.parent:
            groups.setdefault(self.find(x), []).append(x)
        return groups


def _char_count_lower_bound(a: str, b: str) -> int:
    # Each edit changes the joint character multiset by at most 2 units.
    counts: dict[str, int] = {}
    for ch in a:
        counts[ch] = counts.get(ch, 0) + 1
    for ch in b:
        counts[ch] = counts.get(ch, 0) - 1
    return (sum(abs(v) for v in counts.values()) + 1) // 2


def merge_variants(items: Mapping[str, int], config: IngestConfig) -> dict[str, str]:
    """Step 4c: merge normalized variants into canonical representatives.

    Two variants are linked when their fingerprint keys match, or when both
    are at least ``levenshtein_min_length`` long and their edit distance is
    at most ``levenshtein_max_distance``. Connected components collapse to
    the variant with the highest total count (ties: lexicographically
    smallest). Returns variant -> representative for every input variant.
    """
    texts = sorted(items)
    uf = UnionFind()
    for text in texts:
        uf.find(text)

    by_key: dict[str, str] = {}
    for text in texts:
        key = fingerprint_key(text)
        if key in by_key:
            uf.union(by_key[key], text)
        else:
            by_key[key] = text

    max_d = config.levenshtein_max_distance
    min_len = config.levenshtein_min_length
    eligible = [t for t in texts if len(t) >= min_len]
    for i, a in enumerate(eligible):
        for b in eligible[i + 1 :]:
            if abs(len(a) - len(b)) > max_d:
                continue
            if uf.find(a) == uf.find(b):
                continue
            if _char_count_lower_bound(a, b) > max_d:
                continue
            if levenshtein(a, b) <= max_d:
                uf.union(a, b)

    mapping: dict[str, str] = {}
    for members in uf.components().values():
        representative = min(members, key=lambda t: (-items[t], t))
        for text in members:
            mapping[text] = representative
    return mapping


def frequency_filter(
    items: Mapping[str, int], min_count: int
) -> tuple[dict[str, int], dict[str, int]]:
    """Step 5: keep only items whose aggregated count reaches min_count."""
    kept, removed = {}, {}
    for text, count in items.items():
        (kept if count >= min_count else removed)[text] = count
    return kept, removed


def item_id_for(index: int) -> str:
    return f"d{index:06d}"


def run_pipeline(raw: list[RawItem], config: IngestConfig) -> CleanCorpus:
    """Run cleaning steps 1-5 in order and assemble the canonical corpus.

    Deterministic for a fixed (input, config): canonical items are ordered
    by canonical text and ids are position-derived.
    """
    stopwords = load_stopwords(config)
    gazetteer = load_gazetteer(config)
    report: dict = {"steps": []}

    def record(step: str, before: list[RawItem], kept: list[RawItem], removed: list[RawItem]):
        report["steps"].append(
            {
                "step": step,
                "input_items": len(before),
                "kept_items": len(kept),
                "removed_items": len(removed),
                "removed_total_count": sum(it.count for it in removed),
            }
        )

    stage = raw
    kept, removed = filter_numeric_date(stage)
    record("numeric_date", stage, kept, removed)
    stage = kept

    kept, removed = filter_stopword_only(stage, stopwords)
    record("stopword_only", stage, kept, removed)
    stage = kept

    kept, removed = filter_place_names(stage, gazetteer)
    record("place_names", stage, kept, removed)
    stage = kept

    # Step 4: normalize, then merge near-duplicate variants. Counts aggregate
    # across merged variants before the frequency threshold is applied.
    norm_counts: dict[str, int] = {}
    norm_raw_forms: dict[str, set[str]] = {}
    for item in stage:
        norm = normalize(item.raw_text)
        norm_counts[norm] = norm_counts.get(norm, 0) + item.count
        norm_raw_forms.setdefault(norm, set()).add(item.raw_text)

    mapping = merge_variants(norm_counts, config)
    merged_counts: dict[str, int] = {}
    merged_raw_forms: dict[str, set[str]] = {}
    for norm, count in norm_counts.items():
        rep = mapping[norm]
        merged_counts[rep] = merged_counts.get(rep, 0) + count
        merged_raw_forms.setdefault(rep, set()).update(norm_raw_forms[norm])
    report["steps"].append(
        {
            "step": "merge_variants",
            "input_items": len(stage),
            "normalized_variants": len(norm_counts),
            "kept_items": len(merged_counts),
            "merged_groups": sum(
                1 for forms in merged_raw_forms.values() if len(forms) > 1
            ),
        }
    )

    kept_counts, removed_counts = frequency_filter(merged_counts, config.min_count)
    report["steps"].append(
        {
            "step": "frequency",
            "input_items": len(merged_counts),
            "kept_items": len(kept_counts),
            "removed_items": len(removed_counts),
            "removed_total_count": sum(removed_counts.values()),
        }
    )

    canonical = sorted(kept_counts)
    items = [
        CorpusItem(
            id=item_id_for(i),
            canonical_text=text,
            total_count=kept_counts[text],
            merged_raw_forms=tuple(sorted(merged_raw_forms[text])),
        )
        for i, text in enumerate(canonical)
    ]
    report["raw_items"] = len(raw)
    report["raw_total_count"] = sum(it.count for it in raw)
    report["canonical_items"] = len(items)
    report["canonical_total_count"] = sum(it.total_count for it in items)
    report["config"] = {
        "levenshtein_max_distance": config.levenshtein_max_distance,
        "levenshtein_min_length": config.levenshtein_min_length,
        "min_count": config.min_count,
    }
    return CleanCorpus(items=items, pipeline_report=report)


def corpus_content_hash(corpus: CleanCorpus) -> str:
    return hashlib.sha256(corpus.to_json_bytes()).hexdigest()
