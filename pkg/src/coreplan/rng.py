"""Counter-based random numbers.

Every random draw is a pure function of (seed, stream, counter), so a walk's
outcome does not depend on which thread runs it or in what order.
"""
from __future__ import annotations

import hashlib

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

SEED_MASK = (1 << 63) - 1


def derive_seed(root: int, *names) -> int:
    """Named sub-seed: hash of the root seed and a path of labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(root)).encode())
    for name in names:
        h.update(b"\x1f")
        h.update(str(name).encode())
    return int.from_bytes(h.digest(), "little") & SEED_MASK


@njit(cache=True, nogil=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def stream_key(seed, index):
    return mix64(seed ^ mix64(np.uint64(index) * _GOLDEN + _GOLDEN))


@njit(cache=True, nogil=True)
def uniform(key, counter):
    """Uniform double in [0, 1) for position ``counter`` of stream ``key``."""
    x = mix64(key + np.uint64(counter) * _GOLDEN)
    return float(x >> _S11) * _INV53


def uniforms(seed: int, index: int, count: int) -> np.ndarray:
    key = np.uint64(stream_key(np.uint64(seed), index))
    return np.array([uniform(key, i) for i in range(count)])
