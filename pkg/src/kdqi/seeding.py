"""Scheduling-independent seed splitting."""

from __future__ import annotations

import hashlib

import numpy as np

SEED_RULE = "seed = blake2b-64(f'{master}:{kind}:{index}'), little-endian"


def derive_seed(master: int, kind: str, index: int = 0) -> int:
    """Per-task seed ``hash64(master, kind, index)``; independent of execution order."""
    h = hashlib.blake2b(f"{master}:{kind}:{index}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def task_rng(master: int, kind: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, kind, index))
