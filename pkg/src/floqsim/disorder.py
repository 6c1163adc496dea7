"""Counter-based random numbers for reproducible disorder.

Each disorder angle is addressed by the tuple (seed, layer, edge, endpoint)
and computed by a stateless SplitMix64-style mixing chain, so the draw does
not depend on construction order and parallel builds see identical values.
Python's stdlib generators are stream-based (order-sensitive) which is why
we roll the few lines of mixing ourselves; uniformity is covered by a
chi-square test in the suite.
"""

from __future__ import annotations

import math

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = np.uint64(11)


def _mix64(x: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; x is a uint64 ndarray (wraps mod 2^64).
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def counter_bits(seed: int, *words) -> np.ndarray:
    """Mix (seed, word_0, word_1, ...) into uint64 values.

    Every word may be a scalar or an integer ndarray; arrays broadcast
    against each other. Returns a uint64 ndarray of the broadcast shape.
    """
    x = _mix64(np.atleast_1d(np.asarray(seed, dtype=np.uint64)) + _GAMMA)
    for w in words:
        w = np.asarray(w, dtype=np.uint64)
        x = _mix64((x + _GAMMA) ^ w)
    return x


def counter_uniform(seed: int, *words, low: float = -math.pi / 2,
                    high: float = math.pi / 2) -> np.ndarray:
    """Uniform draws on [low, high) addressed by (seed, *words)."""
    bits = counter_bits(seed, *words)
    u = (bits >> _U53).astype(np.float64) * 2.0**-53
    return low + (high - low) * u


def derive_seed(seed: int, index: int) -> int:
    """Stable per-realization sub-seed."""
    return int(counter_bits(seed, index)[0])
