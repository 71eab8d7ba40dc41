"""Cosine similarity, the image-vs-prompt score, and the embedding cache."""

from __future__ import annotations

import hashlib
import json
import threading
from collections import OrderedDict
from pathlib import Path

import numpy as np

from reprompt.core import EmbeddingVector, ImageRef, ScoreValue, TagPrompt, render
from reprompt.errors import DimensionMismatch, ZeroVector

DEFAULT_CAPACITY = 100_000
DEFAULT_TOKEN_WINDOW = 77


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """dot(u, v) / (|u| * |v|), clamped onto [-1, 1]."""
    if u.dimension != v.dimension:
        raise DimensionMismatch(f"dimensions differ: {u.dimension} vs {v.dimension}")
    a = np.asarray(u.values, dtype=np.float64)
    b = np.asarray(v.values, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine of a zero vector is undefined")
    value = float(np.dot(a, b) / (na * nb))
    return max(-1.0, min(1.0, value))


class EmbeddingCache:
    """LRU map from (role, content hash) to the stored embedding.

    Reads are concurrent-safe and hits return the vector bit-identically;
    writes are serialized. Optionally persisted as one JSON record per line.
    """

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._entries: OrderedDict[tuple[str, str], EmbeddingVector] = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._entries)

    def get(self, role: str, content_hash: str) -> EmbeddingVector | None:
        with self._lock:
            vector = self._entries.get((role, content_hash))
            if vector is None:
                self.misses += 1
                return None
            self._entries.move_to_end((role, content_hash))
            self.hits += 1
            return vector

    def put(self, role: str, content_hash: str, vector: EmbeddingVector) -> None:
        with self._lock:
            self._entries[(role, content_hash)] = vector
            self._entries.move_to_end((role, content_hash))
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    def dump(self, path: str | Path) -> None:
        with self._lock, open(path, "w", encoding="utf-8") as fh:
            for (role, content_hash), vector in self._entries.items():
                fh.write(json.dumps({"role": role, "hash": content_hash,
                                     "vector": list(vector.values),
                                     "normalized": vector.normalized}) + "\n")

    def load(self, path: str | Path) -> int:
        """Load persisted entries; returns how many records were read."""
        count = 0
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                values = tuple(float(v) for v in record["vector"])
                vector = EmbeddingVector(values, len(values),
                                         normalized=record.get("normalized", False))
                self.put(record["role"], record["hash"], vector)
                count += 1
        return count


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ClipScorer:
    """Scores how well a rendered prompt matches an image.

    Embeds both sides through the cache using the configured embedding
    providers, then reports their cosine. Deterministic whenever the
    providers are.
    """

    def __init__(self, providers, cache: EmbeddingCache | None = None,
                 token_window: int = DEFAULT_TOKEN_WINDOW):
        self.providers = providers
        self.cache = cache if cache is not None else EmbeddingCache()
        self.token_window = token_window
        self.window_overflows: list[tuple[str, int]] = []

    def embed_text(self, text: str) -> EmbeddingVector:
        key = _sha256(text.encode("utf-8"))
        hit = self.cache.get("text_embedding", key)
        if hit is not None:
            return hit
        vector = self.providers.embed_text(text)
        self.cache.put("text_embedding", key, vector)
        return vector

    def embed_image(self, image: ImageRef) -> EmbeddingVector:
        key = image.id
        hit = self.cache.get("image_embedding", key)
        if hit is not None:
            return hit
        vector = self.providers.embed_image(image)
        self.cache.put("image_embedding", key, vector)
        return vector

    def clip_sim(self, image: ImageRef, prompt: TagPrompt) -> ScoreValue:
        text = render(prompt)
        if not text:
            raise ValueError("prompt renders to empty text")
        estimate = len(text.split())
        if estimate > self.token_window:
            # Backend truncation applies; flag the prompt for the run log.
            self.window_overflows.append((text[:40], estimate))
        return ScoreValue(cosine(self.embed_image(image), self.embed_text(text)))

    __call__ = clip_sim
