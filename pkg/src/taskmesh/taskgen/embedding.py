"""Deterministic sentence embeddings via signed feature hashing.

Texts are mapped to unit-norm vectors by hashing lowercased word unigrams and
character 3-5 grams into D signed buckets. The hash is keyed blake2b, so the
embedding of a string is identical across processes and platforms. Paraphrases
that share content words land near each other; that is all the geometry the
rest of the pipeline relies on.
"""

from dataclasses import dataclass
from functools import lru_cache
import hashlib
import re

import numpy as np

from ..errors import InvalidArgumentError

#: Default embedding width; shared by task and sub-task embeddings.
EMBED_DIM = 64

_WORD_RE = re.compile(r"[a-z0-9]+")
_CHAR_NGRAM_SIZES = (3, 4, 5)


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-width, unit-L2-norm vector; values are read-only."""

    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def cosine(self, other: "EmbeddingVector") -> float:
        return float(np.dot(self.values, other.values))


def _hash_feature(feature: str) -> int:
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def text_features(text: str) -> list[str]:
    """The hashed feature strings for a text: word unigrams + char n-grams."""
    lowered = text.lower()
    words = _WORD_RE.findall(lowered)
    feats = [f"w:{w}" for w in words]
    squeezed = " ".join(words)
    padded = f" {squeezed} "
    for n in _CHAR_NGRAM_SIZES:
        feats.extend(f"c{n}:{padded[i:i + n]}" for i in range(len(padded) - n + 1))
    return feats


@lru_cache(maxsize=65536)
def _embed_cached(text: str, dim: int) -> EmbeddingVector:
    vec = np.zeros(dim, dtype=np.float64)
    for feature in text_features(text):
        h = _hash_feature(feature)
        sign = 1.0 if h & (1 << 63) else -1.0
        vec[h % dim] += sign
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        # Pathological but possible (signed collisions); fall back to a
        # deterministic unit vector derived from the text hash.
        vec[_hash_feature("fallback:" + text) % dim] = 1.0
        norm = 1.0
    return EmbeddingVector(vec / norm)


def embed_sentence(text: str, dim: int = EMBED_DIM) -> EmbeddingVector:
    """Embed a sentence; deterministic, unit norm, error on empty text."""
    if not isinstance(text, str) or not text.strip():
        raise InvalidArgumentError("cannot embed empty text")
    if dim < 1:
        raise InvalidArgumentError(f"embedding dim must be >= 1, got {dim}")
    return _embed_cached(text, dim)
