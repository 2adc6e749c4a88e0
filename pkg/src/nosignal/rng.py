"""Stateless counter-based uniform draws.

Every draw is a pure function of ``(seed, stream, key, counter)``, so a trial
reproduces bit-for-bit no matter which order, batch, or thread computes it.
The mixing function is the SplitMix64 finalizer applied to a chained key.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# stream tags keep unrelated consumers of one seed apart
BOB_OUTCOME = 1
ALICE_OUTCOME = 2
TEMPLATE = 3
UNIFORM_BITS = 4
SAMPLING = 5


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype.kind in "iu" and arr.dtype != np.uint64:
        arr = arr.astype(np.int64).view(np.uint64) if arr.dtype.kind == "i" else arr.astype(np.uint64)
    elif arr.dtype.kind not in "iu":
        arr = np.asarray(int(x) & _MASK, dtype=np.uint64)
    return arr


def raw(seed: int, stream: int, key, counter) -> np.ndarray:
    """64-bit hash words, broadcast over ``key`` and ``counter``."""
    h = _mix(np.asarray([seed & _MASK], dtype=np.uint64) + _GOLDEN)
    h = _mix(h ^ np.uint64(stream & _MASK))
    h = _mix(h ^ _u64(key))
    return _mix(h + _u64(counter) * _GOLDEN)


def uniform(seed: int, stream: int, key, counter) -> np.ndarray:
    """Doubles in [0, 1) with 53 random bits each."""
    return (raw(seed, stream, key, counter) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def bits(seed: int, stream: int, key, counter) -> np.ndarray:
    """Fair bits as uint8."""
    return (raw(seed, stream, key, counter) >> np.uint64(63)).astype(np.uint8)
