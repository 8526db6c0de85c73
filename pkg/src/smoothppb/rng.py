"""Deterministic random substreams.

Every replicate of a resampling loop draws from its own generators, derived
from a root seed and a key such as ``(replicate, purpose)``. Results are
therefore independent of execution order and can be computed in parallel.
"""
from __future__ import annotations

from typing import Union

import numpy as np

NOISE, DESIGN, NESTED = 0, 1, 2

RandomLike = Union[int, np.random.Generator, None]


def root_seed(rng: RandomLike) -> int:
    """Draw (or pass through) the integer root of a substream family."""
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63))
    if rng is None:
        return int(np.random.default_rng().integers(0, 2**63))
    return int(rng)


def stream(root: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(root, spawn_key=key)))


def as_generator(rng: RandomLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
