"""Counter-based random draws.

A draw is a pure function of a 64-bit key and a few counter words, so the
weight of an edge never depends on the order in which edges are visited.
Keys for sub-streams (trial, angle, ...) are derived with ``SeedSequence``.
"""
import zlib

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_K1 = np.uint64(0xD6E8FEB86659FD93)
_K2 = np.uint64(0xA0761D6478BD642F)
_K3 = np.uint64(0xE7037ED1A0B428DB)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def hash4(key, a, b, c):
    h = mix64(key ^ _GOLDEN)
    h = mix64(h + a * _K1)
    h = mix64(h + b * _K2)
    return mix64(h + c * _K3)


@njit(cache=True, inline="always")
def uniform(key, x, y, word):
    """Uniform on [0, 1) for counter words (x, y, word)."""
    h = hash4(key, np.uint64(x), np.uint64(y), np.uint64(word))
    return np.float64(h >> np.uint64(11)) * _INV53


def _name_word(name):
    if isinstance(name, str):
        return zlib.crc32(name.encode())
    return int(name)


def stream_key(seed, *path):
    """Derive an independent 64-bit key from a top-level seed and a name path.

    >>> stream_key(7, "fpp", 3) == stream_key(7, "fpp", 3)
    True
    """
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(_name_word(p) for p in path))
    return np.uint64(seq.generate_state(1, dtype=np.uint64)[0])
