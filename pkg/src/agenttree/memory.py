"""Global associative memory, orthogonal to the call tree.

Distilled events (user goals, child returns) are ingested as records; each
turn the current context is used as a similarity query and matching fragments
are injected into the agent's dynamic notes. The default embedder is a
deterministic hashed bag-of-words, so retrieval is exactly reproducible
without any model; a model-based embedder can be plugged in.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass

import numpy as np

EMBED_DIM = 256
SIMILARITY_FLOOR = 0.15

_TOKEN = re.compile(r"[a-z0-9_]+")


def _slot(token: str) -> tuple[int, float]:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    index = int.from_bytes(digest[:4], "big") % EMBED_DIM
    sign = 1.0 if digest[4] % 2 == 0 else -1.0
    return index, sign


def embed(text: str) -> np.ndarray:
    """Hashed bag-of-words embedding with sublinear term-frequency weighting.

    L2-normalized for non-empty input; the empty text maps to the zero vector.
    """
    vector = np.zeros(EMBED_DIM, dtype=np.float64)
    counts: dict[str, int] = {}
    for token in _TOKEN.findall(text.lower()):
        counts[token] = counts.get(token, 0) + 1
    for token, count in counts.items():
        index, sign = _slot(token)
        vector[index] += sign * (1.0 + math.log(count))
    norm = float(np.linalg.norm(vector))
    if norm > 0:
        vector /= norm
    return vector


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


@dataclass(frozen=True)
class MemoryRecord:
    id: int
    text: str
    embedding: np.ndarray
    source: str  # node id as string, or "user"
    created_at: float


class Hippocampus:
    """Linear-scan vector store. Duplicates are kept: records are temporal
    events, not a set. No temporal decay; ages are exposed to the formatter."""

    def __init__(self, embedder=embed):
        self._embedder = embedder
        self._records: list[MemoryRecord] = []
        self._next_id = 0

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[MemoryRecord]:
        return list(self._records)

    def ingest(self, text: str, source: str, created_at: float = 0.0) -> MemoryRecord:
        record = MemoryRecord(
            id=self._next_id,
            text=text,
            embedding=self._embedder(text),
            source=source,
            created_at=created_at,
        )
        self._next_id += 1
        self._records.append(record)
        return record

    def search(self, query_text: str, k: int = 3) -> list[tuple[MemoryRecord, float]]:
        """Top-k records by cosine similarity, ties broken newer-first.

        Records below the similarity floor are omitted.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        query = self._embedder(query_text)
        scored = [
            (record, cosine(query, record.embedding)) for record in self._records
        ]
        scored = [(r, s) for r, s in scored if s >= SIMILARITY_FLOOR]
        scored.sort(key=lambda pair: (-pair[1], -pair[0].id))
        return scored[:k]

    def format_fragments(self, results, now: float = 0.0) -> str:
        lines = []
        for record, score in results:
            age = max(0.0, now - record.created_at)
            lines.append(
                f"- (similarity {score:.2f}, from {record.source}, "
                f"{age:.0f}s ago) {record.text}"
            )
        return "\n".join(lines)
