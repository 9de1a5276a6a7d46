"""Deterministic RNG derivation.

Every stochastic operation takes an integer seed and derives child seeds with
`child_seed`, so whole pipelines are reproducible from one root seed and the
derivation is stable across platforms and processes.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def child_seed(seed: int, *keys) -> int:
    """Derive a stable 64-bit child seed from a parent seed and string/int keys."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for key in keys:
        h.update(b"/")
        h.update(str(key).encode())
    return int.from_bytes(h.digest(), "little") & _MASK64


def rng_for(seed: int, *keys) -> np.random.Generator:
    """A fresh generator for the (seed, keys) derivation path."""
    return np.random.default_rng(child_seed(seed, *keys))
