"""Deterministic randomness: counter-based generators with named derivation.

Every random draw in the toolkit flows from a 64-bit seed through
:func:`derive_seed`, which hashes the parent seed together with string labels
(clip id, transform label, ...). Generators are Philox counter-based streams,
so trials can run in any order or in parallel without coupling.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "make_rng"]


def derive_seed(seed: int, *labels) -> int:
    """Derive a child seed from a parent seed and a path of labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(seed).to_bytes(8, "little", signed=False))
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int, *labels) -> np.random.Generator:
    """Philox generator for the given seed, optionally derived via labels."""
    if labels:
        seed = derive_seed(seed, *labels)
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))
