"""Deterministic seed derivation.

All randomness in the pipeline flows from one root seed. Purpose-specific
seeds are derived as the first 8 bytes (big-endian) of
sha256("<root>:<part>:<part>..."), so one root seed reproduces every stage
without the stages sharing PRNG state.
"""

from __future__ import annotations

import hashlib


def derive_seed(root: int, *parts: object) -> int:
    material = ":".join([str(root), *(str(p) for p in parts)]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def seeded_subset(n_items: int, k: int, seed: int) -> list[int]:
    """Choose k of n indices without replacement, returned in ascending order.

    Algorithm (documented so it can be re-implemented independently):
    partial Fisher-Yates over ``indices = [0..n)`` driven by
    ``random.Random(seed)``; for i in 0..k-1 swap ``indices[i]`` with
    ``indices[random.randrange(i, n)]``; the result is ``sorted(indices[:k])``.
    """
    import random

    if k >= n_items:
        return list(range(n_items))
    rng = random.Random(seed)
    indices = list(range(n_items))
    for i in range(k):
        j = rng.randrange(i, n_items)
        indices[i], indices[j] = indices[j], indices[i]
    return sorted(indices[:k])
