"""Counter-based deterministic random numbers (splitmix64 finalizer).

Draw i of stream `seed` is mix64(seed + (i+1)*GOLDEN). Pure integer
arithmetic mod 2^64, so sequences are bit-identical across platforms and
independent of draw order -- any subrange can be generated in isolation.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = np.float64(1.0 / (1 << 53))


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def uniform(seed: int, start: int, count: int) -> np.ndarray:
    """`count` doubles in [0, 1) for counters start .. start+count-1."""
    counters = np.arange(start, start + count, dtype=np.uint64)
    bits = _mix64(np.uint64(seed) + (counters + np.uint64(1)) * _GOLDEN)
    return (bits >> np.uint64(11)).astype(np.float64) * _U53


def derive_seed(seed: int, stream: int) -> int:
    """Decorrelated child seed for substream `stream` of `seed`."""
    z = _mix64(np.uint64(seed) ^ (np.uint64(stream) + np.uint64(1)) * _GOLDEN)
    return int(z)
