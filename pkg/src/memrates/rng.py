"""Counter-based uniforms.

Every draw is a pure function of ``(seed, stream, path, index)``: a chain of
splitmix64 finalisers mixes the four counters into 64 random bits. There is
no generator state, so any subset of draws can be produced in any order, by
any number of threads, with bit-identical results.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_PATH_MUL = np.uint64(0xD6E8FEB86659FD93)
_PATH_ADD = np.uint64(0x632BE59BD9B4E019)
_INDEX_MUL = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(k) for k in (30, 27, 31, 11))
_TWO53 = 2.0**-53

# Named streams keep draws for different purposes independent.
STREAM_INNOVATIONS = 0
STREAM_TILTED = 1
STREAM_AUX = 2


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> _S30)
    x = x * _M1
    x = x ^ (x >> _S27)
    x = x * _M2
    return x ^ (x >> _S31)


def _as_u64(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype == np.uint64:
        return a
    return np.asarray(a, dtype=np.int64).astype(np.uint64)


def random_bits(seed: int, stream: int, path, index) -> np.ndarray:
    """64 random bits for every broadcast combination of ``path`` and ``index``."""
    with np.errstate(over="ignore"):
        base = _mix(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64) + _GOLDEN * np.uint64(stream + 1))
        h = _mix(base ^ (_as_u64(path) * _PATH_MUL + _PATH_ADD))
        return _mix(h + _as_u64(index) * _INDEX_MUL)


def uniforms(seed: int, stream: int, path, index) -> np.ndarray:
    """Uniforms on the open interval (0, 1) with 53-bit resolution."""
    bits = random_bits(seed, stream, path, index)
    return ((bits >> _S11).astype(np.float64) + 0.5) * _TWO53
