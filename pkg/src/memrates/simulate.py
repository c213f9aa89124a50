"""Truncated moving-average paths driven by counter-based innovations.

The innovation ``Z_j`` of path ``p`` is a pure function of ``(seed, p, j)``,
so a path of length ``m`` is a prefix of the same path of length ``2m`` and
any batch can be generated in any order or on any number of threads.

Binary dump format (little-endian), one record per path::

    8 bytes   b"MAPATH1\\0"
    uint64    m        number of values
    uint64    L        truncation lag
    uint64    seed
    m float64 X_1 .. X_m
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .errors import InvalidParameter, UnsupportedDimension, UnsupportedFamily
from .model import BalancedPower, CoefficientFamily, FiniteLag, InnovationModel, RegimeSpec
from .rng import STREAM_INNOVATIONS, uniforms

__all__ = [
    "PathConfig",
    "Path",
    "sample_path",
    "tilted_sample_path",
    "sample_paths",
    "simulate_batch",
    "truncation_error",
    "dump_paths",
    "load_paths",
    "MAGIC",
]

MAGIC = b"MAPATH1\0"
LONG_MEMORY_LAG = 10_000
_FFT_TAPS = 64


def _default_lag(fam: CoefficientFamily) -> int:
    if fam.is_finite:
        lo, hi = fam.lag_range()
        return int(max(abs(lo), abs(hi), 1))
    if fam.memory == "long":
        return LONG_MEMORY_LAG
    return max(1, fam.truncation_lag(1e-8))


def truncation_error(fam: CoefficientFamily, L: int, m: int) -> float:
    """Size of what truncation at lag L leaves out.

    Short memory: the coefficient mass beyond L. Long memory: the largest
    dropped part of a window sum of length m relative to Psi_m, bounded by
    (Psi_{L+m} - Psi_L) / Psi_m.
    """
    if fam.is_finite:
        return 0.0
    if fam.memory == "short":
        return float(fam.tail_abs(L))
    psi = fam.Psi(np.array([L, L + m, m], dtype=np.int64))
    return float(max(fam.p, fam.q) * (psi[1] - psi[0]) / psi[2])


@dataclass(frozen=True)
class PathConfig:
    """Everything that determines one simulated path."""

    m: int
    family: CoefficientFamily
    model: InnovationModel
    regime: RegimeSpec | None = None
    mu: object = 0.0
    seed: int = 0
    path_index: int = 0
    L: int | None = None

    def __post_init__(self):
        if int(self.m) < 1:
            raise InvalidParameter("path length must be at least 1")
        if self.L is not None and int(self.L) < 1:
            raise InvalidParameter("truncation lag must be at least 1")
        if not self.model.sampleable:
            raise UnsupportedFamily(f"{self.model.law} innovations cannot be sampled")

    @property
    def lag(self) -> int:
        return _default_lag(self.family) if self.L is None else int(self.L)

    @property
    def tau_err(self) -> float:
        return truncation_error(self.family, self.lag, int(self.m))

    def lags(self) -> tuple[int, int]:
        """Smallest and largest lag kept after truncation."""
        lo, hi = self.family.lag_range()
        L = self.lag
        lo = -L if not math.isfinite(lo) else max(int(lo), -L)
        hi = L if not math.isfinite(hi) else min(int(hi), L)
        return lo, hi

    def coefficients(self) -> np.ndarray:
        lo, hi = self.lags()
        return np.asarray(self.family.phi(np.arange(lo, hi + 1)), dtype=float)

    def innovation_range(self, m: int | None = None) -> tuple[int, int]:
        """First and last innovation index needed for X_1..X_m."""
        lo, hi = self.lags()
        m = int(self.m if m is None else m)
        return 1 - hi, m - lo

    def a(self, n):
        if self.regime is None:
            return np.asarray(n, dtype=float)
        return self.regime.a(n)


@dataclass(frozen=True)
class Path:
    """One simulated path with its partial sums S_0..S_m and Y_n = S_n - a_n mu."""

    values: np.ndarray
    sums: np.ndarray
    drifted: np.ndarray
    seed: int
    path_index: int
    L: int
    tau_err: float
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else int(self.values.shape[1])


def _innovations(cfg: PathConfig, paths, first: int, last: int, theta=0.0) -> np.ndarray:
    """Z_j for j in [first, last], one row per path (extra axis when d > 1)."""
    d = cfg.model.dim
    j = np.arange(first, last + 1, dtype=np.int64)
    paths = np.atleast_1d(np.asarray(paths, dtype=np.int64))
    if d == 1:
        u = uniforms(cfg.seed, STREAM_INNOVATIONS, paths[:, None], j[None, :])
        return np.asarray(cfg.model.from_uniform(u, theta), dtype=float)
    idx = j[:, None] * d + np.arange(d)[None, :]
    u = uniforms(cfg.seed, STREAM_INNOVATIONS, paths[:, None, None], idx[None, :, :])
    return np.asarray(cfg.model.from_uniform(u, theta), dtype=float)


def _filter(z: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """'valid' convolution along axis 1 (rows are paths)."""
    k = coef.size
    if k == 1:
        return coef[0] * z
    shape = (1, k) + (1,) * (z.ndim - 2)
    c = coef.reshape(shape)
    if k <= _FFT_TAPS:
        m = z.shape[1] - k + 1
        out = np.zeros((z.shape[0], m) + z.shape[2:])
        # X_n = sum_r coef[r] z[n + k - 1 - r]
        for r in range(k):
            if coef[r] != 0.0:
                out += coef[r] * z[:, k - 1 - r : k - 1 - r + m]
        return out
    return signal.fftconvolve(z, c, mode="valid", axes=1)


def simulate_batch(cfg: PathConfig, paths, m: int | None = None, theta=0.0, innovations=None):
    """X (n_paths x m) together with the innovations that produced it."""
    m = int(cfg.m if m is None else m)
    first, last = cfg.innovation_range(m)
    if innovations is None:
        z = _innovations(cfg, paths, first, last, theta)
    else:
        z = np.atleast_2d(np.asarray(innovations, dtype=float))
        if z.shape[1] != last - first + 1:
            raise InvalidParameter(f"need {last - first + 1} innovations, got {z.shape[1]}")
    return _filter(z, cfg.coefficients()), z


def _finish(cfg: PathConfig, x: np.ndarray, path_index: int, extra=None) -> Path:
    zero = np.zeros((1,) + x.shape[1:])
    sums = np.concatenate([zero, np.cumsum(x, axis=0)])
    # values are the increments of the stored sums, so S_n - S_{n-1} == X_n exactly
    values = np.diff(sums, axis=0)
    n = np.arange(cfg.m + 1)
    mu = np.asarray(cfg.mu, dtype=float)
    an = np.asarray(cfg.a(n), dtype=float)
    drifted = sums - (an[:, None] * mu if x.ndim > 1 else an * float(mu))
    return Path(values, sums, drifted, cfg.seed, path_index, cfg.lag, cfg.tau_err, dict(extra or {}))


def sample_path(cfg: PathConfig, innovations=None) -> Path:
    """One path; ``innovations`` may override the random stream (for checks)."""
    x, _ = simulate_batch(cfg, [cfg.path_index], innovations=innovations)
    return _finish(cfg, x[0], cfg.path_index)


def _tiltable(cfg: PathConfig):
    if not isinstance(cfg.family, FiniteLag):
        raise UnsupportedFamily("tilting is offered for finite-lag (including i.i.d.) families only")


def tilted_sample_path(cfg: PathConfig, theta) -> tuple[Path, np.ndarray]:
    """A path under innovations tilted by theta, with log-likelihood ratios.

    The second return value holds, for every n = 0..m, the log-likelihood
    ratio of all innovations that X_1..X_n depend on (0 at n = 0).
    """
    _tiltable(cfg)
    x, z = simulate_batch(cfg, [cfg.path_index], theta=theta)
    llr = _llr_profile(cfg, z[0], theta)
    return _finish(cfg, x[0], cfg.path_index, {"theta": np.asarray(theta).tolist()}), llr


def _llr_terms(cfg: PathConfig, z: np.ndarray, theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    lam = float(cfg.model.log_mgf(th if cfg.model.dim > 1 else float(th)))
    dot = z @ th if cfg.model.dim > 1 else float(th) * z
    return dot - lam


def _llr_profile(cfg: PathConfig, z: np.ndarray, theta) -> np.ndarray:
    """LLR_n over innovations with index <= n - lo, for n = 0..m."""
    terms = _llr_terms(cfg, z, theta)
    lo, hi = cfg.lags()
    csum = np.cumsum(terms, axis=-1)
    # innovation index j sits at position j - (1 - hi); X_n needs j <= n - lo
    pos = np.arange(1, cfg.m + 1) - lo - (1 - hi)
    out = np.zeros(cfg.m + 1)
    out[1:] = csum[pos]
    return out


def sample_paths(cfg: PathConfig, n_paths: int, threads: int = 1) -> list[Path]:
    """Paths with indices cfg.path_index, cfg.path_index + 1, ..."""
    idx = list(range(cfg.path_index, cfg.path_index + int(n_paths)))

    def one(k):
        return sample_path(replace(cfg, path_index=k))

    if threads <= 1:
        return [one(k) for k in idx]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, idx))


def dump_paths(paths, fh) -> None:
    """Write paths to a binary file object in the documented record format."""
    for p in paths:
        if p.dim != 1:
            raise UnsupportedDimension("the binary dump stores one-dimensional paths")
        fh.write(MAGIC)
        fh.write(struct.pack("<QQQ", p.m, p.L, p.seed & 0xFFFFFFFFFFFFFFFF))
        fh.write(np.ascontiguousarray(p.values, dtype="<f8").tobytes())


def load_paths(fh) -> list[dict]:
    """Read records written by :func:`dump_paths`."""
    out = []
    while True:
        magic = fh.read(len(MAGIC))
        if not magic:
            return out
        if magic != MAGIC:
            raise InvalidParameter("not a path dump (bad magic)")
        m, L, seed = struct.unpack("<QQQ", fh.read(24))
        values = np.frombuffer(fh.read(8 * m), dtype="<f8").astype(float)
        out.append({"m": int(m), "L": int(L), "seed": int(seed), "values": values})
