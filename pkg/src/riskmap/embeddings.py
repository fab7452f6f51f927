"""Spatial key-value store for georeferenced visual embeddings.

Vectors come from answer backends (the wire protocol's optional embedding
field); this store never computes them. Persistence is a JSON-lines file,
one record per entry, last write per key wins.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from .geo import GpsPoint, great_circle_meters


@dataclass(frozen=True)
class EmbeddingEntry:
    key: str
    position: GpsPoint
    vector: tuple[float, ...]
    model_id: str


class EmbeddingStore:
    """Keyed entries with radius lookup. Writes are serialized; reads see a
    consistent snapshot."""

    def __init__(self) -> None:
        self._entries: dict[str, EmbeddingEntry] = {}
        self._dims: dict[str, int] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def put(self, entry: EmbeddingEntry) -> "EmbeddingStore":
        """Insert or replace an entry. All vectors of one model share a length."""
        with self._lock:
            dim = self._dims.get(entry.model_id)
            if dim is not None and dim != len(entry.vector):
                raise ValueError(
                    f"vector length {len(entry.vector)} does not match existing "
                    f"length {dim} for model {entry.model_id!r}"
                )
            self._dims.setdefault(entry.model_id, len(entry.vector))
            self._entries[entry.key] = entry
        return self

    def query_nearby(self, p: GpsPoint, radius: float) -> list[EmbeddingEntry]:
        """Entries within great-circle radius of p, nearest first, key-tie-broken."""
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        with self._lock:
            snapshot = list(self._entries.values())
        hits = []
        for entry in snapshot:
            d = great_circle_meters(p, entry.position)
            if d <= radius:
                hits.append((d, entry.key, entry))
        hits.sort(key=lambda item: (item[0], item[1]))
        return [entry for _, _, entry in hits]

    def save(self, path: str | Path) -> None:
        with self._lock:
            records = [
                {
                    "key": e.key,
                    "lat": e.position.lat,
                    "lon": e.position.lon,
                    "model_id": e.model_id,
                    "vector": list(e.vector),
                }
                for e in self._entries.values()
            ]
        lines = [json.dumps(r, sort_keys=True) for r in records]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingStore":
        store = cls()
        text = Path(path).read_text(encoding="utf-8")
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            store.put(
                EmbeddingEntry(
                    key=doc["key"],
                    position=GpsPoint(doc["lat"], doc["lon"]),
                    vector=tuple(float(v) for v in doc["vector"]),
                    model_id=doc["model_id"],
                )
            )
        return store
