"""Counter-based random streams.

Every random quantity is a pure function of a 64-bit key and a counter,
so tree realisations and walks do not depend on query order or on how
work is split between processes.  The mixer is SplitMix64's finaliser.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

WALK_SALT = 0x57A1_6E5E_ED00_0001
REPLICATE_SALT = 0x5EED_0000_0000_0002


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive(key: int, index: int) -> int:
    """Child key of ``key`` for a non-negative ``index``."""
    return mix64((key & MASK64) ^ mix64((index * GOLDEN64 + REPLICATE_SALT) & MASK64))


def replicate_seed(master: int, k: int) -> int:
    """Seed of replicate ``k``; keyed hash, no shared RNG state."""
    return derive(mix64(master), k)


def walk_key(seed: int) -> int:
    return mix64((seed ^ WALK_SALT) & MASK64)


def generator(seed: int) -> np.random.Generator:
    """NumPy generator for vectorised draws keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=seed & MASK64))


# -- compiled counterparts ---------------------------------------------------

@njit(cache=True, inline="always")
def nb_mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def nb_uniform(key, j):
    """``j``-th uniform in [0, 1) of the stream keyed by ``key``."""
    z = nb_mix64(key + (np.uint64(j) + np.uint64(1)) * np.uint64(GOLDEN64))
    return np.float64(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def nb_derive(key, index):
    return nb_mix64(key ^ nb_mix64(np.uint64(index) * np.uint64(GOLDEN64) + np.uint64(REPLICATE_SALT)))


@njit(cache=True)
def _uniform_block(key, start, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = nb_uniform(key, start + i)
    return out


def uniforms(key: int, start: int, n: int) -> np.ndarray:
    """``n`` consecutive stream uniforms starting at counter ``start``."""
    return _uniform_block(np.uint64(key & MASK64), start, n)
