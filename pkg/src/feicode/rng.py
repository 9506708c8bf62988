"""Seed handling.

Every random choice in the package flows from an explicit integer seed.
Child seeds for independent trials are split off with
:class:`numpy.random.SeedSequence`, so ``derive_seed(seed, trial)`` is stable
across runs, platforms and worker counts.  Per-call generators are
``random.Random`` (Mersenne Twister) for cheap scalar draws and
``numpy.random.Generator`` (PCG64) for vectorized draws.
"""
from __future__ import annotations

import random

import numpy as np

DEFAULT_SEED = 1729


def derive_seed(seed: int, *keys: int) -> int:
    """64-bit child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def scalar_rng(seed: int, *keys: int) -> random.Random:
    return random.Random(derive_seed(seed, *keys) if keys else int(seed))


def numpy_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys)))
