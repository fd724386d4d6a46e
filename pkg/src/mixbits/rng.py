"""Seeded random-stream hierarchy.

All randomness in the package flows through named child streams of one
root seed, so changing how one component consumes randomness never
perturbs the streams of the others.
"""

import hashlib

import numpy as np


def _stream_key(name: str) -> tuple[int, ...]:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


def child_seed(root_seed: int, name: str) -> np.random.SeedSequence:
    """Derive the named child seed sequence of ``root_seed``."""
    return np.random.SeedSequence(entropy=root_seed & 0xFFFFFFFFFFFFFFFF, spawn_key=_stream_key(name))


def stream(root_seed: int, name: str) -> np.random.Generator:
    """Return the named child generator of ``root_seed``.

    Deterministic: the same (seed, name) pair always yields a generator
    producing the same sequence.
    """
    return np.random.default_rng(child_seed(root_seed, name))
