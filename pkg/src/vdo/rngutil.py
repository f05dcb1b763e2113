"""Splittable counter-based randomness.

Every stochastic operation in the package takes an explicit generator.
Streams are derived from a root seed plus a label path, hashed into a
Philox key, so independent protocol phases (and parallel trials) get
independent, reproducible streams.
"""

from __future__ import annotations

import hashlib

import numpy as np
from numpy.random import Generator, Philox


def derive_key(seed: int, *labels: object) -> int:
    h = hashlib.sha256()
    h.update(int(seed).to_bytes(32, "little", signed=True))
    for lab in labels:
        h.update(repr(lab).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:16], "little")


def rng_from(seed: int, *labels: object) -> Generator:
    """Counter-based generator for the stream named by (seed, labels)."""
    return Generator(Philox(key=derive_key(seed, *labels)))


def rand_below(rng: Generator, n: int) -> int:
    """Exact uniform integer in [0, n). Handles n beyond int64."""
    if n <= 0:
        raise ValueError("empty range")
    if n <= (1 << 62):
        return int(rng.integers(0, n))
    # rejection sampling on whole 64-bit words
    bits = n.bit_length()
    words = (bits + 63) // 64
    while True:
        v = 0
        for w in map(int, rng.integers(0, 1 << 62, size=words, dtype=np.int64)):
            v = (v << 62) | w
        v &= (1 << bits) - 1
        if v < n:
            return v
