"""Content-addressed flat-file store for precomputed artifacts.

Every artifact (corpus, embeddings, trees, grid cells, sessions, taxonomy)
lives under a kind-named subdirectory, is written atomically, and carries
its sha256 in manifest.json so tampering or partial writes are detected on
load.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path


class StoreError(Exception):
    pass


class IntegrityError(StoreError):
    """An artifact's bytes no longer match the hash recorded at save time."""


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def canonical_json_bytes(payload) -> bytes:
    return (json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=1) + "\n").encode(
        "utf-8"
    )


@dataclass
class ManifestEntry:
    kind: str
    name: str
    path: str  # relative to the store root
    content_hash: str
    produced_by: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "name": self.name,
            "path": self.path,
            "content_hash": self.content_hash,
            "produced_by": self.produced_by,
        }


class ArtifactStore:
    """Directory-backed store with an integrity manifest.

    Writes are atomic (temp file + rename) and serialized behind a lock;
    loads verify content hashes. Artifacts are immutable by convention,
    so concurrent readers need no coordination.
    """

    MANIFEST_VERSION = 1

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._manifest_path = self.root / "manifest.json"
        if self._manifest_path.exists():
            doc = json.loads(self._manifest_path.read_text(encoding="utf-8"))
            if doc.get("version") != self.MANIFEST_VERSION:
                raise StoreError(f"unsupported manifest version: {doc.get('version')}")
            self._config = doc.get("config", {})
            self._entries = {
                (e["kind"], e["name"]): ManifestEntry(**e) for e in doc.get("entries", [])
            }
        else:
            self._config = {}
            self._entries = {}
            self._write_manifest()

    # -- manifest -----------------------------------------------------------

    def _write_manifest(self):
        doc = {
            "version": self.MANIFEST_VERSION,
            "config": self._config,
            "entries": [
                self._entries[key].to_dict() for key in sorted(self._entries)
            ],
        }
        self._atomic_write(self._manifest_path, canonical_json_bytes(doc))

    def record_config(self, key: str, value):
        with self._lock:
            self._config[key] = value
            self._write_manifest()

    @property
    def config(self) -> dict:
        return dict(self._config)

    def entries(self, kind: str | None = None) -> list[ManifestEntry]:
        found = [e for e in self._entries.values() if kind is None or e.kind == kind]
        return sorted(found, key=lambda e: (e.kind, e.name))

    def entry(self, kind: str, name: str) -> ManifestEntry | None:
        return self._entries.get((kind, name))

    def has_valid(self, kind: str, name: str) -> bool:
        """True if the entry exists and its file still matches its hash."""
        entry = self._entries.get((kind, name))
        if entry is None:
            return False
        path = self.root / entry.path
        if not path.exists():
            return False
        return sha256_hex(path.read_bytes()) == entry.content_hash

    # -- save / load --------------------------------------------------------

    def save_artifact(
        self,
        kind: str,
        name: str,
        payload: bytes,
        produced_by: str,
        suffix: str = ".json",
    ) -> ManifestEntry:
        """Atomically write payload bytes and record them in the manifest."""
        if not isinstance(payload, bytes):
            raise StoreError("payload must be bytes; serialize before saving")
        rel = Path(kind) / f"{name}{suffix}"
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock:
            self._atomic_write(path, payload)
            entry = ManifestEntry(
                kind=kind,
                name=name,
                path=str(rel),
                content_hash=sha256_hex(payload),
                produced_by=produced_by,
            )
            self._entries[(kind, name)] = entry
            self._write_manifest()
        return entry

    def save_json(self, kind: str, name: str, payload, produced_by: str) -> ManifestEntry:
        return self.save_artifact(kind, name, canonical_json_bytes(payload), produced_by)

    def load_artifact(self, kind: str, name: str) -> bytes:
        """Load and verify an artifact's bytes."""
        entry = self._entries.get((kind, name))
        if entry is None:
            raise StoreError(f"no manifest entry for {kind}/{name}")
        path = self.root / entry.path
        if not path.exists():
            raise IntegrityError(f"artifact file missing: {entry.path}")
        data = path.read_bytes()
        actual = sha256_hex(data)
        if actual != entry.content_hash:
            raise IntegrityError(
                f"artifact {kind}/{name} failed its integrity check "
                f"(expected {entry.content_hash[:12]}, got {actual[:12]})"
            )
        return data

    def load_json(self, kind: str, name: str):
        return json.loads(self.load_artifact(kind, name).decode("utf-8"))

    def artifact_path(self, kind: str, name: str) -> Path:
        entry = self._entries.get((kind, name))
        if entry is None:
            raise StoreError(f"no manifest entry for {kind}/{name}")
        return self.root / entry.path

    def delete_artifact(self, kind: str, name: str):
        with self._lock:
            entry = self._entries.pop((kind, name), None)
            if entry is not None:
                full = self.root / entry.path
                if full.exists():
                    full.unlink()
            self._write_manifest()

    def verify_all(self) -> list[str]:
        """Hash-check every entry; returns the names of broken artifacts."""
        broken = []
        for (kind, name), entry in sorted(self._entries.items()):
            path = self.root / entry.path
            if not path.exists() or sha256_hex(path.read_bytes()) != entry.content_hash:
                broken.append(f"{kind}/{name}")
        return broken

    # -- internals ----------------------------------------------------------

    @staticmethod
    def _atomic_write(path: Path, payload: bytes):
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
