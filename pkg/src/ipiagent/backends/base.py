"""Backend interfaces shared by the scripted oracle and the live clients."""

from __future__ import annotations

import hashlib
import logging

import numpy as np

from ..errors import ConfigError, ValidationError

logger = logging.getLogger(__name__)


def unit_normalize(vector, *, tolerance: float = 1e-12) -> np.ndarray:
    vec = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm < tolerance:
        raise ValidationError("cannot normalize a zero vector")
    return vec / norm


class ChatBackend:
    """Vision+text chat endpoint. Implementations must raise
    BackendUnavailable after exhausting retries and BackendConfigError on
    non-transient rejections."""

    def chat(self, messages, *, frames=None, current_tick=None,
             max_tokens=None, temperature=0.0) -> str:
        raise NotImplementedError


class EmbeddingBackend:
    """Embeds text payloads and frame windows into one shared vector space.

    Returned vectors are unit-normalized and of a fixed dimension; dimension
    drift across calls is a configuration error.
    """

    def embed_text(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def embed_window(self, window) -> np.ndarray:
        raise NotImplementedError


class EmbeddingCache:
    """Payload-hash keyed cache so identical payloads embed identically
    (and at most once) within a session."""

    def __init__(self):
        self._store: dict[str, np.ndarray] = {}
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(kind: str, payload: str) -> str:
        digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        return f"{kind}:{digest}"

    def get(self, key: str):
        vec = self._store.get(key)
        if vec is not None:
            self.hits += 1
        return vec

    def put(self, key: str, vector: np.ndarray) -> np.ndarray:
        self.misses += 1
        self._store[key] = vector
        return vector


class DimensionGuard:
    """Tracks the embedding dimension seen so far and rejects drift."""

    def __init__(self, expected: int | None = None):
        self.expected = expected

    def check(self, vector: np.ndarray) -> np.ndarray:
        dim = int(vector.shape[-1])
        if self.expected is None:
            self.expected = dim
        elif dim != self.expected:
            raise ConfigError(
                f"embedding dimension drifted: expected {self.expected}, got {dim}")
        return vector
