"""Text-embedding port with a deterministic offline default.

The default embedder hashes bags of character trigrams into a fixed 256-dim
vector, so the embedding-stage ranking is reproducible across runs and
processes with no model in the loop. Any callable mapping text to a vector of
the same dimension can be plugged in instead (e.g. a hosted embedding model,
or a visual-semantic encoder feeding on screenshots).
"""

from __future__ import annotations

import hashlib
from typing import Protocol

import numpy as np


class Embedder(Protocol):
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class TrigramHashEmbedder:
    """Hashed bag-of-character-trigrams, L2-normalized. Pure and process-stable."""

    def __init__(self, dimension: int = 256):
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        lowered = text.lower()
        if len(lowered) < 3:
            lowered = lowered + "\x00" * (3 - len(lowered))
        for i in range(len(lowered) - 2):
            tri = lowered[i:i + 3].encode("utf-8")
            slot = int.from_bytes(hashlib.blake2b(tri, digest_size=4).digest(), "big") % self.dimension
            vec[slot] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm > 0:
            vec /= norm
        return vec


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector is all-zero."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def embedding_digest(vec: np.ndarray) -> str:
    """Short audit digest of an embedding vector."""
    return hashlib.sha256(np.ascontiguousarray(vec, dtype=np.float64).tobytes()).hexdigest()[:16]
