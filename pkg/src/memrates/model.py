"""Domain types: moving-average coefficient families, innovation laws,
half-space target sets and regime specifications.

Everything here is immutable after construction. Coefficient families
expose vectorised evaluators for the single coefficients ``phi(i)`` and for
the window sums ``partial_sum(i, n) = phi(i+1) + ... + phi(i+n)``; innovation
models expose the cumulant generating function together with its gradient,
Hessian, and inverse-transform samplers for the plain and exponentially
tilted laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import (
    InvalidParameter,
    MissingHeavyProfile,
    NotNormalizable,
    RegimeMismatch,
)

__all__ = [
    "CoefficientFamily",
    "FiniteLag",
    "Geometric",
    "PowerSummable",
    "BalancedPower",
    "make_coefficients",
    "partial_sum_phi",
    "HeavyProfile",
    "InnovationModel",
    "Gaussian",
    "CenteredExponential",
    "CenteredGamma",
    "BoundedUniform",
    "TwoSidedDiscrete",
    "LimitProfile",
    "degenerate",
    "make_innovations",
    "TargetSet",
    "condition_A_check",
    "RegimeSpec",
    "REGIME_TAGS",
]

EULER_GAMMA = 0.5772156649015329


# ---------------------------------------------------------------------------
# coefficient families
# ---------------------------------------------------------------------------


class CoefficientFamily:
    """Common interface of the coefficient families.

    Subclasses set ``kind`` and ``memory`` and implement ``phi`` and
    ``partial_sum``. Both accept integer arrays and broadcast.
    """

    kind: str = ""
    memory: str = "short"

    def phi(self, i):
        raise NotImplementedError

    def partial_sum(self, i, n):
        raise NotImplementedError

    def lag_range(self) -> tuple[float, float]:
        """Smallest and largest lag carrying a nonzero coefficient."""
        raise NotImplementedError

    def total(self) -> float:
        raise NotImplementedError

    def abs_total(self) -> float:
        raise NotImplementedError

    def tail_abs(self, L: int) -> float:
        """Sum of |phi_i| over |i| > L."""
        raise NotImplementedError

    def tail_signed(self, L: int) -> tuple[float, float]:
        """Bounds on the negative and positive coefficient mass beyond lag L."""
        t = self.tail_abs(L)
        return t, t

    def truncation_lag(self, tol: float = 1e-8) -> int:
        """Smallest L >= 1 whose omitted absolute mass is below ``tol``."""
        lo, hi = self.lag_range()
        if math.isfinite(lo) and math.isfinite(hi):
            return max(1, int(max(abs(lo), abs(hi))))
        L = 1
        while self.tail_abs(L) >= tol:
            L *= 2
            if L > 1 << 40:
                raise InvalidParameter("coefficient tail does not decay below tolerance")
        lo_l, hi_l = L // 2, L
        while hi_l - lo_l > 1:
            mid = (lo_l + hi_l) // 2
            if self.tail_abs(mid) < tol:
                hi_l = mid
            else:
                lo_l = mid
        return max(1, hi_l)

    def truncated(self, L: int) -> tuple[np.ndarray, np.ndarray]:
        """Lags in [-L, L] (restricted to the support) and their coefficients."""
        lo, hi = self.lag_range()
        a = int(max(lo, -L))
        b = int(min(hi, L))
        lags = np.arange(a, b + 1, dtype=np.int64)
        return lags, np.asarray(self.phi(lags), dtype=float)

    @property
    def is_finite(self) -> bool:
        lo, hi = self.lag_range()
        return math.isfinite(lo) and math.isfinite(hi)

    def describe(self) -> dict:
        raise NotImplementedError


def _window_from_tail(tail, i, n):
    """phi_{i,n} for a causal family given T(k) = sum_{j>=k} phi_j."""
    i = np.asarray(i, dtype=np.int64)
    start = np.maximum(i + 1, 0)
    end = i + n + 1
    out = np.where(end > start, tail(start) - tail(np.maximum(end, 0)), 0.0)
    return out


@dataclass(frozen=True)
class FiniteLag(CoefficientFamily):
    """Finitely many nonzero coefficients given as ``(lag, value)`` pairs."""

    lags: tuple[tuple[int, float], ...]
    kind = "FiniteLag"
    memory = "short"

    def __post_init__(self):
        merged: dict[int, float] = {}
        for lag, value in self.lags:
            if int(lag) != lag:
                raise InvalidParameter(f"lag {lag!r} is not an integer")
            if not math.isfinite(value):
                raise InvalidParameter(f"coefficient at lag {lag} is not finite")
            merged[int(lag)] = merged.get(int(lag), 0.0) + float(value)
        if not merged:
            raise InvalidParameter("FiniteLag needs at least one coefficient")
        items = tuple(sorted(merged.items()))
        object.__setattr__(self, "lags", items)
        lo = items[0][0]
        dense = np.zeros(items[-1][0] - lo + 1)
        for lag, value in items:
            dense[lag - lo] = value
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_dense", dense)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(dense)]))

    def phi(self, i):
        i = np.asarray(i, dtype=np.int64)
        k = i - self._lo
        inside = (k >= 0) & (k < self._dense.size)
        return np.where(inside, self._dense[np.clip(k, 0, self._dense.size - 1)], 0.0)

    def _prefix(self, k):
        # sum of phi_j for j <= k
        idx = np.clip(k - self._lo + 1, 0, self._dense.size)
        return self._cum[idx]

    def partial_sum(self, i, n):
        i = np.asarray(i, dtype=np.int64)
        if np.any(np.asarray(n) < 1):
            raise InvalidParameter("window length n must be >= 1")
        if self._dense.size <= 4:
            # few lags: sum the indicator contributions directly, which keeps
            # single-lag windows exact
            out = np.zeros(np.broadcast(i, np.asarray(n)).shape)
            for lag, value in self.lags:
                out = out + np.where((i + 1 <= lag) & (lag <= i + n), value, 0.0)
            return out
        return self._prefix(i + n) - self._prefix(i)

    def lag_range(self):
        return float(self.lags[0][0]), float(self.lags[-1][0])

    def total(self):
        return float(sum(v for _, v in self.lags))

    def abs_total(self):
        return float(sum(abs(v) for _, v in self.lags))

    def tail_abs(self, L):
        return float(sum(abs(v) for lag, v in self.lags if abs(lag) > L))

    def left_right_sums(self) -> tuple[np.ndarray, np.ndarray]:
        """Partial sums from the left end and from the right end of the support."""
        return np.cumsum(self._dense), np.cumsum(self._dense[::-1])

    def describe(self):
        return {"kind": self.kind, "lags": [[lag, v] for lag, v in self.lags]}


@dataclass(frozen=True)
class Geometric(CoefficientFamily):
    """Causal geometric coefficients ``phi_i = scale * r**i`` for i >= 0."""

    r: float
    scale: float = 1.0
    kind = "Geometric"
    memory = "short"

    def __post_init__(self):
        if not -1.0 < self.r < 1.0:
            raise InvalidParameter(f"Geometric ratio r={self.r} must lie in (-1, 1)")
        if self.scale == 0:
            raise InvalidParameter("Geometric scale must be nonzero")

    def _tail(self, k):
        k = np.asarray(k)
        return self.scale * np.power(self.r, k.astype(float)) / (1.0 - self.r)

    def phi(self, i):
        i = np.asarray(i, dtype=np.int64)
        return np.where(i >= 0, self.scale * np.power(self.r, np.maximum(i, 0).astype(float)), 0.0)

    def partial_sum(self, i, n):
        return _window_from_tail(self._tail, i, n)

    def lag_range(self):
        return 0.0, math.inf

    def total(self):
        return self.scale / (1.0 - self.r)

    def abs_total(self):
        return abs(self.scale) / (1.0 - abs(self.r))

    def tail_abs(self, L):
        return abs(self.scale) * abs(self.r) ** (L + 1) / (1.0 - abs(self.r))

    def tail_signed(self, L):
        t = self.tail_abs(L)
        if self.r >= 0:
            return (0.0, t) if self.scale > 0 else (t, 0.0)
        return t, t

    def describe(self):
        return {"kind": self.kind, "r": self.r, "scale": self.scale}


@dataclass(frozen=True)
class PowerSummable(CoefficientFamily):
    """Causal summable power coefficients ``phi_i = scale * (i+1)**(-alpha)``, alpha > 1."""

    alpha: float
    scale: float = 1.0
    kind = "PowerSummable"
    memory = "short"

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise InvalidParameter(f"PowerSummable needs alpha > 1, got {self.alpha}")
        if self.scale == 0:
            raise InvalidParameter("PowerSummable scale must be nonzero")

    def _tail(self, k):
        # sum_{j >= k} (j+1)^-alpha = hurwitz zeta(alpha, k+1)
        return self.scale * special.zeta(self.alpha, np.asarray(k, dtype=float) + 1.0)

    def phi(self, i):
        i = np.asarray(i, dtype=np.int64)
        return np.where(i >= 0, self.scale * (np.maximum(i, 0) + 1.0) ** (-self.alpha), 0.0)

    def partial_sum(self, i, n):
        return _window_from_tail(self._tail, i, n)

    def lag_range(self):
        return 0.0, math.inf

    def total(self):
        return self.scale * float(special.zeta(self.alpha))

    def abs_total(self):
        return abs(self.total())

    def tail_abs(self, L):
        return abs(self.scale) * float(special.zeta(self.alpha, L + 2.0))

    def tail_signed(self, L):
        t = self.tail_abs(L)
        return (0.0, t) if self.scale > 0 else (t, 0.0)

    def describe(self):
        return {"kind": self.kind, "alpha": self.alpha, "scale": self.scale}


# Sums of k^-alpha (log(k+e))^delta. The pure-power case uses a direct sum for
# small m and the Euler-Maclaurin expansion around zeta(alpha) beyond, which
# is accurate to rounding for m > 64. With a log factor there is no closed
# form, so a cumulative table is kept and extended by quadrature.

_DIRECT_LIMIT = 64
_TABLE_LIMIT = 1 << 22


@lru_cache(maxsize=64)
def _small_power_sums(alpha: float) -> np.ndarray:
    k = np.arange(1, _DIRECT_LIMIT + 1, dtype=float)
    return np.concatenate([[0.0], np.cumsum(k ** (-alpha))])


def _power_sum(alpha: float, m: np.ndarray) -> np.ndarray:
    """sum_{k=1}^m k^-alpha for integer arrays m >= 0."""
    m = np.asarray(m, dtype=np.int64)
    small = _small_power_sums(alpha)
    out = np.empty(m.shape, dtype=float)
    is_small = m <= _DIRECT_LIMIT
    out[is_small] = small[m[is_small]]
    big = m[~is_small].astype(float)
    if big.size:
        lm = np.log(big)
        if alpha == 1.0:
            inv = 1.0 / big
            inv2 = inv * inv
            val = lm + EULER_GAMMA + 0.5 * inv - inv2 / 12.0 + inv2 * inv2 / 120.0 - inv2**3 / 252.0
        else:
            a = alpha
            val = (
                float(special.zeta(a))
                + np.exp((1.0 - a) * lm) / (1.0 - a)
                + 0.5 * np.exp(-a * lm)
                - (a / 12.0) * np.exp((-a - 1.0) * lm)
                + (a * (a + 1.0) * (a + 2.0) / 720.0) * np.exp((-a - 3.0) * lm)
                - (a * (a + 1.0) * (a + 2.0) * (a + 3.0) * (a + 4.0) / 30240.0) * np.exp((-a - 5.0) * lm)
            )
        out[~is_small] = val
    return out


@lru_cache(maxsize=8)
def _log_power_table(alpha: float, delta: float) -> np.ndarray:
    k = np.arange(1, _TABLE_LIMIT + 1, dtype=float)
    return np.concatenate([[0.0], np.cumsum(k ** (-alpha) * np.log(k + math.e) ** delta)])


def _log_power_sum(alpha: float, delta: float, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.int64)
    table = _log_power_table(alpha, delta)
    out = np.empty(m.shape, dtype=float)
    inside = m <= _TABLE_LIMIT
    out[inside] = table[m[inside]]
    if np.any(~inside):
        n0 = float(_TABLE_LIMIT)

        def f(x):
            return x ** (-alpha) * math.log(x + math.e) ** delta

        def df(x):
            lg = math.log(x + math.e)
            return x ** (-alpha) * lg**delta * (-alpha / x + delta / ((x + math.e) * lg))

        def extend(mm):
            mm = float(mm)
            body, _ = integrate.quad(f, n0, mm, limit=200, epsrel=1e-13)
            return table[-1] + body + 0.5 * (f(mm) - f(n0)) + (df(mm) - df(n0)) / 12.0

        out[~inside] = np.array([extend(v) for v in m[~inside].ravel()]).reshape(m[~inside].shape)
    return out


@dataclass(frozen=True)
class BalancedPower(CoefficientFamily):
    """Two-sided long-memory coefficients.

    ``phi_n = p * psi(n)`` and ``phi_{-n} = q * psi(n)`` for n >= 1 with
    ``psi(n) = scale * n**(-alpha) * log(n + e)**delta`` and ``q = 1 - p``;
    ``phi_0`` is a free constant (zero by default).
    """

    alpha: float
    p: float = 1.0
    scale: float = 1.0
    delta: float = 0.0
    phi0: float = 0.0
    kind = "BalancedPower"
    memory = "long"

    def __post_init__(self):
        if not 0.5 < self.alpha <= 1.0:
            raise InvalidParameter(f"BalancedPower needs alpha in (1/2, 1], got {self.alpha}")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameter(f"balance p={self.p} must lie in [0, 1]")
        if not self.scale > 0:
            raise InvalidParameter(f"scale must be positive, got {self.scale}")
        if not math.isfinite(self.delta):
            raise InvalidParameter("delta must be finite")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def psi(self, n):
        n = np.asarray(n, dtype=float)
        out = self.scale * n ** (-self.alpha)
        if self.delta:
            out = out * np.log(n + math.e) ** self.delta
        return out

    def Psi(self, n):
        """Psi_n = psi(1) + ... + psi(n); zero for n <= 0."""
        n = np.asarray(n, dtype=np.int64)
        m = np.maximum(n, 0)
        if self.delta:
            return self.scale * _log_power_sum(self.alpha, self.delta, m)
        return self.scale * _power_sum(self.alpha, m)

    def phi(self, i):
        i = np.asarray(i, dtype=np.int64)
        a = np.abs(i)
        body = self.psi(np.maximum(a, 1))
        return np.where(i > 0, self.p * body, np.where(i < 0, self.q * body, self.phi0))

    def partial_sum(self, i, n):
        i = np.asarray(i, dtype=np.int64)
        n = int(n)
        if n < 1:
            raise InvalidParameter("window length n must be >= 1")
        right = i >= 0
        left = i <= -n - 1
        out = np.empty(i.shape, dtype=float)
        if np.any(right):
            ii = i[right]
            out[right] = self.p * (self.Psi(ii + n) - self.Psi(ii)) if self.p else 0.0
        if np.any(left):
            ii = i[left]
            out[left] = self.q * (self.Psi(-ii - 1) - self.Psi(-ii - n - 1)) if self.q else 0.0
        mid = ~(right | left)
        if np.any(mid):
            ii = i[mid]
            out[mid] = self.q * self.Psi(-ii - 1) + self.phi0 + self.p * self.Psi(ii + n)
        return out

    def lag_range(self):
        lo = -math.inf if self.q > 0 else (0.0 if self.phi0 else 1.0)
        hi = math.inf if self.p > 0 else (0.0 if self.phi0 else -1.0)
        return lo, hi

    def total(self):
        return math.inf

    def abs_total(self):
        return math.inf

    def tail_abs(self, L):
        return math.inf

    def truncation_lag(self, tol: float = 1e-8) -> int:
        return 10_000

    def square_tail(self, L: int) -> float:
        """Sum of phi_i**2 over |i| > L (finite because 2*alpha > 1)."""
        if self.delta:
            k = np.arange(L + 1, L + 1 + (1 << 20), dtype=float)
            head = float(np.sum(self.psi(k) ** 2))
            # remaining tail by the integral comparison bound
            x = L + (1 << 20)
            rest = float(self.psi(x) ** 2) * x / (2 * self.alpha - 1)
            return (self.p**2 + self.q**2) * (head + rest)
        s = self.scale**2 * float(special.zeta(2 * self.alpha, L + 1.0))
        return (self.p**2 + self.q**2) * s

    def describe(self):
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "p": self.p,
            "scale": self.scale,
            "delta": self.delta,
            "phi0": self.phi0,
        }


def make_coefficients(kind: str, params: dict | None = None, **kwargs) -> CoefficientFamily:
    """Build a coefficient family from a kind name and its parameters.

    ``normalize=True`` rescales a short-memory family so that its
    coefficients sum to one.
    """
    params = dict(params or {}, **kwargs)
    normalize = bool(params.pop("normalize", False))
    try:
        if kind == "FiniteLag":
            raw = params.pop("lags")
            if isinstance(raw, dict):
                raw = list(raw.items())
            fam = FiniteLag(tuple((int(a), float(b)) for a, b in raw))
            if normalize:
                total = fam.total()
                if total == 0:
                    raise NotNormalizable("coefficients sum to zero")
                fam = FiniteLag(tuple((lag, v / total) for lag, v in fam.lags))
        elif kind == "Geometric":
            r = float(params.pop("r"))
            scale = float(params.pop("scale", 1.0))
            if normalize:
                scale = 1.0 - r
            fam = Geometric(r, scale)
        elif kind == "PowerSummable":
            alpha = float(params.pop("alpha"))
            scale = float(params.pop("scale", 1.0))
            if normalize:
                scale = 1.0 / float(special.zeta(alpha))
            fam = PowerSummable(alpha, scale)
        elif kind == "BalancedPower":
            if normalize:
                raise NotNormalizable("long-memory coefficients are not summable")
            fam = BalancedPower(
                alpha=float(params.pop("alpha")),
                p=float(params.pop("p", 1.0)),
                scale=float(params.pop("scale", 1.0)),
                delta=float(params.pop("delta", 0.0)),
                phi0=float(params.pop("phi0", 0.0)),
            )
        else:
            raise InvalidParameter(f"unknown coefficient family {kind!r}")
    except KeyError as exc:
        raise InvalidParameter(f"{kind} is missing parameter {exc.args[0]!r}") from None
    if params:
        raise InvalidParameter(f"unexpected parameters for {kind}: {sorted(params)}")
    return fam


def partial_sum_phi(fam: CoefficientFamily, i, n):
    """phi_{i,n} = phi_{i+1} + ... + phi_{i+n}; scalar in, scalar out."""
    out = fam.partial_sum(np.asarray(i), n)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# innovation laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeavyProfile:
    """Balanced regular variation of the cumulant: Lambda(t u) ~ zeta(u) t**beta."""

    beta: float
    zeta: Callable[[np.ndarray], float]
    label: str = ""

    def __post_init__(self):
        if not self.beta > 1.0:
            raise InvalidParameter(f"heavy-profile exponent beta must exceed 1, got {self.beta}")


def _as_vec(t, dim):
    t = np.asarray(t, dtype=float)
    if dim == 1:
        return t
    if t.shape[-1] != dim:
        raise InvalidParameter(f"expected last axis of length {dim}, got shape {t.shape}")
    return t


class InnovationModel:
    """Centred i.i.d. innovation law.

    For one-dimensional laws ``t`` may be a scalar or any array; in higher
    dimension the last axis holds the coordinates.
    """

    dim: int = 1
    law: str = ""
    heavy_profile: HeavyProfile | None = None
    finite_everywhere: bool = False
    unbounded: bool = True
    sampleable: bool = True

    def log_mgf(self, t):
        raise NotImplementedError

    def grad(self, t):
        raise NotImplementedError

    def hess(self, t):
        raise NotImplementedError

    def domain(self) -> tuple[float, float]:
        """Open interval where the cumulant is finite (d = 1)."""
        return -math.inf, math.inf

    def covariance(self) -> np.ndarray:
        raise NotImplementedError

    def from_uniform(self, u, theta=0.0):
        """Inverse-transform sample from the law tilted by ``theta``."""
        raise NotImplementedError

    def tilted_mean(self, theta):
        return self.grad(theta)

    def in_domain(self, t) -> np.ndarray:
        lo, hi = self.domain()
        t = np.asarray(t, dtype=float)
        return (t > lo) & (t < hi)

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Gaussian(InnovationModel):
    """Centred Gaussian with covariance ``cov`` (scalar variance when d = 1)."""

    cov: object = 1.0
    law = "Gaussian"
    finite_everywhere = True

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if c.shape[0] != c.shape[1]:
            raise InvalidParameter("covariance must be square")
        if not np.allclose(c, c.T):
            raise InvalidParameter("covariance must be symmetric")
        w = np.linalg.eigvalsh(c)
        if w.min() < -1e-12 * max(1.0, w.max()):
            raise InvalidParameter("covariance must be positive semidefinite")
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "dim", c.shape[0])
        object.__setattr__(self, "unbounded", bool(w.max() > 0))
        vals, vecs = np.linalg.eigh(c)
        object.__setattr__(self, "_root", vecs * np.sqrt(np.clip(vals, 0, None)))
        cm = c.copy()
        object.__setattr__(
            self,
            "heavy_profile",
            HeavyProfile(2.0, lambda u, cm=cm: 0.5 * float(np.asarray(u) @ cm @ np.asarray(u)), "gaussian"),
        )

    @property
    def matrix(self) -> np.ndarray:
        return self._c

    @property
    def sigma2(self) -> float:
        return float(self._c[0, 0])

    def log_mgf(self, t):
        t = _as_vec(t, self.dim)
        if self.dim == 1:
            return 0.5 * self._c[0, 0] * t * t
        return 0.5 * np.einsum("...i,ij,...j->...", t, self._c, t)

    def grad(self, t):
        t = _as_vec(t, self.dim)
        if self.dim == 1:
            return self._c[0, 0] * t
        return t @ self._c

    def hess(self, t):
        t = _as_vec(t, self.dim)
        if self.dim == 1:
            return np.full(np.shape(t), self._c[0, 0])
        return np.broadcast_to(self._c, t.shape[:-1] + self._c.shape)

    def covariance(self):
        return self._c.copy()

    def from_uniform(self, u, theta=0.0):
        z = special.ndtri(np.asarray(u, dtype=float))
        if self.dim == 1:
            return math.sqrt(self._c[0, 0]) * z + self._c[0, 0] * float(np.asarray(theta))
        shift = np.asarray(theta, dtype=float) @ self._c if np.ndim(theta) else 0.0
        return z @ self._root.T + shift

    def describe(self):
        return {"law": self.law, "cov": self._c.tolist()}

    def __eq__(self, other):
        return isinstance(other, Gaussian) and np.array_equal(self._c, other._c)

    def __hash__(self):
        return hash(("Gaussian", self._c.tobytes()))


@dataclass(frozen=True)
class CenteredExponential(InnovationModel):
    """``E - 1/rate`` with ``E`` exponential of the given rate."""

    rate: float = 1.0
    law = "CenteredExponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidParameter("rate must be positive")

    def domain(self):
        return -math.inf, self.rate

    def log_mgf(self, t):
        t = np.asarray(t, dtype=float)
        x = t / self.rate
        with np.errstate(invalid="ignore", divide="ignore"):
            val = -np.log1p(-np.minimum(x, 1.0)) - x
        return np.where(x < 1.0, val, np.inf)

    def grad(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(t < self.rate, 1.0 / (self.rate - t) - 1.0 / self.rate, np.inf)

    def hess(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(t < self.rate, 1.0 / (self.rate - t) ** 2, np.inf)

    def covariance(self):
        return np.array([[1.0 / self.rate**2]])

    def from_uniform(self, u, theta=0.0):
        e = -np.log(np.asarray(u, dtype=float))
        return e / (self.rate - theta) - 1.0 / self.rate

    def describe(self):
        return {"law": self.law, "rate": self.rate}


@dataclass(frozen=True)
class CenteredGamma(InnovationModel):
    """Gamma(shape, rate) minus its mean."""

    shape: float = 1.0
    rate: float = 1.0
    law = "CenteredGamma"

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise InvalidParameter("shape and rate must be positive")

    def domain(self):
        return -math.inf, self.rate

    def log_mgf(self, t):
        t = np.asarray(t, dtype=float)
        x = t / self.rate
        with np.errstate(invalid="ignore", divide="ignore"):
            val = self.shape * (-np.log1p(-np.minimum(x, 1.0)) - x)
        return np.where(x < 1.0, val, np.inf)

    def grad(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(t < self.rate, self.shape * (1.0 / (self.rate - t) - 1.0 / self.rate), np.inf)

    def hess(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(t < self.rate, self.shape / (self.rate - t) ** 2, np.inf)

    def covariance(self):
        return np.array([[self.shape / self.rate**2]])

    def from_uniform(self, u, theta=0.0):
        g = special.gammaincinv(self.shape, np.asarray(u, dtype=float))
        return g / (self.rate - theta) - self.shape / self.rate

    def describe(self):
        return {"law": self.law, "shape": self.shape, "rate": self.rate}


def _log_sinhc(x):
    """log(sinh(x)/x) for real arrays, stable at 0 and for large |x|."""
    ax = np.abs(np.asarray(x, dtype=float))
    small = ax < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        big = ax + np.log1p(-np.exp(-2.0 * ax)) - np.log(2.0 * ax)
    x2 = ax * ax
    series = x2 / 6.0 - x2 * x2 / 180.0
    return np.where(small, series, big)


@dataclass(frozen=True)
class BoundedUniform(InnovationModel):
    """Uniform on [-h, h]."""

    half_width: float = 1.0
    law = "BoundedUniform"
    finite_everywhere = True
    unbounded = False

    def __post_init__(self):
        if not self.half_width > 0:
            raise InvalidParameter("half_width must be positive")

    def log_mgf(self, t):
        return _log_sinhc(self.half_width * np.asarray(t, dtype=float))

    def grad(self, t):
        t = np.asarray(t, dtype=float)
        h = self.half_width
        x = h * t
        small = np.abs(x) < 1e-3
        with np.errstate(divide="ignore", invalid="ignore"):
            big = h / np.tanh(x) - 1.0 / t
        series = h * (x / 3.0 - x**3 / 45.0)
        return np.where(small, series, big)

    def hess(self, t):
        t = np.asarray(t, dtype=float)
        h = self.half_width
        x = h * t
        small = np.abs(x) < 1e-2
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            big = 1.0 / t**2 - h**2 / np.sinh(x) ** 2
        series = h**2 * (1.0 / 3.0 - x**2 / 15.0 + 2.0 * x**4 / 189.0)
        return np.where(small, series, big)

    def covariance(self):
        return np.array([[self.half_width**2 / 3.0]])

    def from_uniform(self, u, theta=0.0):
        u = np.asarray(u, dtype=float)
        h = self.half_width
        theta = float(theta)
        if theta == 0.0:
            return h * (2.0 * u - 1.0)
        if theta > 0:
            return -h + np.log1p(u * np.expm1(2.0 * theta * h)) / theta
        return h + np.log1p((1.0 - u) * np.expm1(-2.0 * theta * h)) / theta

    def describe(self):
        return {"law": self.law, "half_width": self.half_width}


@dataclass(frozen=True, eq=False)
class TwoSidedDiscrete(InnovationModel):
    """Finitely supported centred law given by atoms and weights."""

    atoms: tuple[float, ...] = (0.0,)
    weights: tuple[float, ...] = (1.0,)
    law = "TwoSidedDiscrete"
    finite_everywhere = True
    unbounded = False

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if a.shape != w.shape or a.ndim != 1 or a.size == 0:
            raise InvalidParameter("atoms and weights must be equal-length nonempty lists")
        if np.any(w < 0) or not w.sum() > 0:
            raise InvalidParameter("weights must be nonnegative with positive total")
        w = w / w.sum()
        order = np.argsort(a)
        a, w = a[order], w[order]
        mean = float(a @ w)
        if abs(mean) > 1e-12 * max(1.0, float(np.abs(a).max())):
            raise InvalidParameter(f"discrete law must be centred, mean is {mean}")
        object.__setattr__(self, "atoms", tuple(a.tolist()))
        object.__setattr__(self, "weights", tuple(w.tolist()))
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_lw", np.log(np.where(w > 0, w, 1.0)) + np.where(w > 0, 0.0, -np.inf))

    def _tilted_logw(self, t):
        t = np.asarray(t, dtype=float)
        return t[..., None] * self._a + self._lw

    def log_mgf(self, t):
        out = special.logsumexp(self._tilted_logw(t), axis=-1)
        # the weights need not sum to one in floating point; Lambda(0) = 0 exactly
        return np.where(np.asarray(t) == 0, 0.0, out)

    def _tilted_probs(self, t):
        lw = self._tilted_logw(t)
        return np.exp(lw - special.logsumexp(lw, axis=-1)[..., None])

    def grad(self, t):
        return self._tilted_probs(t) @ self._a

    def hess(self, t):
        pr = self._tilted_probs(t)
        m = pr @ self._a
        return pr @ (self._a**2) - m**2

    def covariance(self):
        return np.array([[float(np.exp(self._lw) @ self._a**2)]])

    def from_uniform(self, u, theta=0.0):
        pr = self._tilted_probs(float(theta))
        cdf = np.cumsum(pr)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, np.asarray(u, dtype=float), side="right")
        return self._a[np.minimum(idx, self._a.size - 1)]

    def describe(self):
        return {"law": self.law, "atoms": list(self.atoms), "weights": list(self.weights)}

    def __eq__(self, other):
        return isinstance(other, TwoSidedDiscrete) and self.atoms == other.atoms and self.weights == other.weights

    def __hash__(self):
        return hash((self.atoms, self.weights))


def degenerate() -> TwoSidedDiscrete:
    """The point mass at zero."""
    return TwoSidedDiscrete((0.0,), (1.0,))


@dataclass(frozen=True, eq=False)
class LimitProfile(InnovationModel):
    """A cumulant that *is* its heavy profile, ``zeta(t/|t|) |t|**beta``.

    Useful for evaluating heavy-regime bounds with an arbitrary exponent
    beta; it carries no sampler. In one dimension ``zeta_plus`` and
    ``zeta_minus`` give the two directional constants; in higher dimension
    ``zeta`` must be supplied as a callable on unit vectors.
    """

    beta: float = 2.0
    zeta_plus: float = 0.5
    zeta_minus: float | None = None
    zeta: Callable | None = None
    dim: int = 1
    law = "LimitProfile"
    finite_everywhere = True
    sampleable = False

    def __post_init__(self):
        if not self.beta > 1:
            raise InvalidParameter("beta must exceed 1")
        zm = self.zeta_plus if self.zeta_minus is None else self.zeta_minus
        object.__setattr__(self, "zeta_minus", zm)
        if self.dim > 1 and self.zeta is None:
            raise InvalidParameter("a direction function zeta is required when dim > 1")
        if self.dim == 1:
            zp = self.zeta_plus

            def z(u, zp=zp, zm=zm):
                return zp if float(np.asarray(u).ravel()[0]) > 0 else zm

        else:
            z = self.zeta
        object.__setattr__(self, "heavy_profile", HeavyProfile(self.beta, z, "limit"))

    def _zeta_vals(self, t):
        if self.dim == 1:
            return np.where(t > 0, self.zeta_plus, self.zeta_minus)
        norms = np.linalg.norm(t, axis=-1)
        flat = t.reshape(-1, self.dim)
        nf = norms.reshape(-1)
        vals = np.array([self.zeta(v / r) if r > 0 else 0.0 for v, r in zip(flat, nf)])
        return vals.reshape(norms.shape)

    def log_mgf(self, t):
        t = _as_vec(t, self.dim)
        r = np.abs(t) if self.dim == 1 else np.linalg.norm(t, axis=-1)
        return self._zeta_vals(t) * r**self.beta

    def grad(self, t):
        if self.dim != 1:
            raise InvalidParameter("analytic gradient only in one dimension")
        t = np.asarray(t, dtype=float)
        return self._zeta_vals(t) * self.beta * np.sign(t) * np.abs(t) ** (self.beta - 1)

    def hess(self, t):
        if self.dim != 1:
            raise InvalidParameter("analytic Hessian only in one dimension")
        t = np.asarray(t, dtype=float)
        return self._zeta_vals(t) * self.beta * (self.beta - 1) * np.abs(t) ** (self.beta - 2)

    def covariance(self):
        raise InvalidParameter("a limit profile has no variance")

    def describe(self):
        return {"law": self.law, "beta": self.beta, "zeta_plus": self.zeta_plus, "zeta_minus": self.zeta_minus}


def make_innovations(law: str, params: dict | None = None, **kwargs) -> InnovationModel:
    params = dict(params or {}, **kwargs)
    builders = {
        "Gaussian": lambda p: Gaussian(p.pop("cov", p.pop("variance", 1.0))),
        "CenteredExponential": lambda p: CenteredExponential(float(p.pop("rate", 1.0))),
        "CenteredGamma": lambda p: CenteredGamma(float(p.pop("shape", 1.0)), float(p.pop("rate", 1.0))),
        "BoundedUniform": lambda p: BoundedUniform(float(p.pop("half_width", 1.0))),
        "TwoSidedDiscrete": lambda p: TwoSidedDiscrete(tuple(p.pop("atoms")), tuple(p.pop("weights"))),
        "Degenerate": lambda p: degenerate(),
        "LimitProfile": lambda p: LimitProfile(
            float(p.pop("beta", 2.0)), float(p.pop("zeta_plus", 0.5)), p.pop("zeta_minus", None)
        ),
    }
    if law not in builders:
        raise InvalidParameter(f"unknown innovation law {law!r}")
    try:
        model = builders[law](params)
    except KeyError as exc:
        raise InvalidParameter(f"{law} is missing parameter {exc.args[0]!r}") from None
    if params:
        raise InvalidParameter(f"unexpected parameters for {law}: {sorted(params)}")
    return model


# ---------------------------------------------------------------------------
# target sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TargetSet:
    """Open half-space ``{x : v.x > c}`` (closed when ``closed=True``).

    A half-line ``(y, inf)`` is the one-dimensional case ``v = (1,)``,
    ``c = y``.
    """

    direction: tuple[float, ...]
    threshold: float
    closed: bool = False

    def __post_init__(self):
        v = tuple(float(x) for x in np.atleast_1d(np.asarray(self.direction, dtype=float)))
        if not any(v):
            raise InvalidParameter("half-space direction must be nonzero")
        if not math.isfinite(self.threshold):
            raise InvalidParameter("threshold must be finite")
        object.__setattr__(self, "direction", v)
        object.__setattr__(self, "threshold", float(self.threshold))

    @classmethod
    def half_line(cls, y: float, closed: bool = False) -> "TargetSet":
        return cls((1.0,), y, closed)

    @classmethod
    def half_space(cls, v: Sequence[float], c: float, closed: bool = False) -> "TargetSet":
        return cls(tuple(v), c, closed)

    @property
    def dim(self) -> int:
        return len(self.direction)

    @property
    def v(self) -> np.ndarray:
        return np.asarray(self.direction)

    @property
    def norm_v(self) -> float:
        return float(np.linalg.norm(self.v))

    @property
    def is_half_line(self) -> bool:
        return self.dim == 1 and self.direction[0] == 1.0

    def project(self, x) -> np.ndarray:
        """v.x for points stored along the last axis (or scalars when d = 1)."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return self.direction[0] * x
        return x @ self.v

    def contains(self, x) -> np.ndarray:
        s = self.project(x)
        return s >= self.threshold if self.closed else s > self.threshold

    def support_inf(self, t) -> float:
        """inf over the set of t.gamma."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        v = self.v
        nt = float(np.linalg.norm(t))
        if nt == 0.0:
            return 0.0
        kappa = float(t @ v) / float(v @ v)
        if kappa > 0 and float(np.linalg.norm(t - kappa * v)) <= 1e-12 * nt:
            return kappa * self.threshold
        return -math.inf

    def shrink(self, eta: float) -> "TargetSet":
        """Points at distance more than eta from the complement."""
        return TargetSet(self.direction, self.threshold + eta * self.norm_v, self.closed)

    def scaled(self, u: float) -> "TargetSet":
        """The set u*A for u > 0."""
        return TargetSet(self.direction, u * self.threshold, self.closed)

    def condition_A(self, mu) -> tuple[bool, np.ndarray | None]:
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if mu.shape != (self.dim,):
            raise InvalidParameter(f"drift has dimension {mu.size}, set has {self.dim}")
        ok = float(self.v @ mu) > 0 and self.threshold > 0
        return ok, (self.v.copy() if ok else None)

    def describe(self):
        return {"direction": list(self.direction), "threshold": self.threshold, "closed": self.closed}


def condition_A_check(A: TargetSet, mu) -> tuple[bool, np.ndarray | None]:
    return A.condition_A(mu)


# ---------------------------------------------------------------------------
# regimes
# ---------------------------------------------------------------------------

REGIME_TAGS = ("S1", "S2", "S3", "S4", "R1", "R2", "R3", "R4")


@dataclass(frozen=True)
class RegimeSpec:
    """Normalising sequence a_n, speed b_n and (heavy regimes) c_n.

    Short-memory tags use ``a_n = a_scale * n**omega``; R1 and R2 use
    ``a_n = n * Psi_n``; R3 and R4 use a power sequence together with the
    long-memory family's Psi_n.
    """

    tag: str
    omega: float = 1.0
    a_scale: float = 1.0
    beta: float | None = None
    family: CoefficientFamily | None = None

    def __post_init__(self):
        if self.tag not in REGIME_TAGS:
            raise RegimeMismatch(f"unknown regime tag {self.tag!r}")
        if not self.a_scale > 0:
            raise RegimeMismatch("a_scale must be positive")
        tag, w = self.tag, self.omega
        if tag in ("S1", "S2") and (w != 1.0 or self.a_scale != 1.0):
            raise RegimeMismatch(f"{tag} uses a_n = n")
        if tag == "S3" and not 0.5 < w <= 1.0:
            raise RegimeMismatch(f"S3 needs omega in (1/2, 1], got {w}")
        if tag == "S4" and not w >= 1.0:
            raise RegimeMismatch(f"S4 needs omega >= 1, got {w}")
        if tag in ("S4", "R4"):
            if self.beta is None or not self.beta > 1:
                raise RegimeMismatch(f"{tag} needs a heavy-profile exponent beta > 1")
        if tag.startswith("R"):
            if not isinstance(self.family, BalancedPower):
                raise RegimeMismatch(f"{tag} needs a long-memory (BalancedPower) family")
            a = self.family.alpha
            if tag == "R3" and not (1.5 - a < w <= 2.0 - a + 1e-12):
                raise RegimeMismatch(f"R3 needs omega in (3/2-alpha, 2-alpha], got {w}")
            if tag == "R4" and not w >= 2.0 - a - 1e-12:
                raise RegimeMismatch(f"R4 needs omega >= 2-alpha, got {w}")
        elif self.family is not None and self.family.memory != "short":
            raise RegimeMismatch(f"{tag} is a short-memory regime")

    @property
    def memory(self) -> str:
        return "long" if self.tag.startswith("R") else "short"

    @property
    def uses_product_sequence(self) -> bool:
        return self.tag in ("R1", "R2")

    def Psi(self, n):
        return self.family.Psi(n)

    def a(self, n):
        n = np.asarray(n, dtype=float)
        if self.uses_product_sequence:
            return n * self.family.Psi(n.astype(np.int64))
        return self.a_scale * n**self.omega

    def c(self, n):
        n = np.asarray(n, dtype=float)
        if self.tag == "S4":
            return (self.a(n) / n) ** (1.0 / (self.beta - 1.0))
        if self.tag == "R4":
            psi = self.family.Psi(n.astype(np.int64))
            return (self.a(n) / (n * psi**self.beta)) ** (1.0 / (self.beta - 1.0))
        return None

    def b(self, n):
        n = np.asarray(n, dtype=float)
        tag = self.tag
        if tag in ("S1", "S2", "R1", "R2"):
            return n.copy()
        if tag == "S3":
            return self.a(n) ** 2 / n
        if tag == "S4":
            return n * self.c(n) ** self.beta
        psi = self.family.Psi(n.astype(np.int64))
        if tag == "R3":
            return self.a(n) ** 2 / (n * psi**2)
        return n * (psi * self.c(n)) ** self.beta

    def a_inverse(self, u) -> np.ndarray:
        """min{n >= 1 : a_n >= u}, vectorised over u."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty(u.shape, dtype=np.int64)
        for k, uu in enumerate(u.ravel()):
            out.ravel()[k] = self._a_inverse_scalar(float(uu))
        return out

    def _a_inverse_scalar(self, u: float) -> int:
        if u <= float(self.a(1)):
            return 1
        if not self.uses_product_sequence:
            guess = max(1, int(math.ceil((u / self.a_scale) ** (1.0 / self.omega))))
            n = guess
            while n > 1 and float(self.a(n - 1)) >= u:
                n -= 1
            while float(self.a(n)) < u:
                n += 1
            return n
        hi = 2
        while float(self.a(hi)) < u:
            hi *= 2
        lo = hi // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if float(self.a(mid)) >= u:
                hi = mid
            else:
                lo = mid
        return hi

    def describe(self):
        out = {"tag": self.tag, "omega": self.omega, "a_scale": self.a_scale}
        if self.beta is not None:
            out["beta"] = self.beta
        if self.family is not None:
            out["family"] = self.family.describe()
        return out
