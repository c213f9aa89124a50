"""Monte Carlo estimation of ruin probabilities rho(u).

rho(u) is the probability that Y_n = S_n - a_n mu enters u A for some
n >= 1. Paths are simulated up to the horizon N(u) = M a^{-1}(u); what is
lost beyond the horizon is bounded by an explicit Chernoff sum that is
reported next to the estimate.

For finite-lag families the estimator can instead tilt the innovations by
the root theta* of Lambda(theta) = theta . mu along the set normal, run every
path until it hits, and reweight with the likelihood ratio at the hitting
time.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .errors import (
    InsufficientData,
    InvalidParameter,
    NoDriftCertificate,
    RootNotBracketed,
    UnsupportedFamily,
)
from .model import CoefficientFamily, FiniteLag, Gaussian, InnovationModel, RegimeSpec, TargetSet
from .ratefn import coefficient_cumulant, default_window
from .simulate import PathConfig, _filter, _innovations, _llr_terms, simulate_batch

__all__ = [
    "RuinSpec",
    "RuinEstimate",
    "DecayFit",
    "ruin_mc",
    "ruin_mc_grid",
    "ruin_is",
    "tilt_root",
    "horizon",
    "horizon_tail_bound",
    "empirical_g",
    "g_function",
    "ruin_decay_fit",
]

_BATCH = 4096
_CELLS = 1 << 22


@dataclass(frozen=True)
class RuinSpec:
    """The model whose ruin probability is estimated."""

    family: CoefficientFamily
    model: InnovationModel
    regime: RegimeSpec
    mu: object
    A: TargetSet
    L: int | None = None

    @property
    def mu_vec(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.mu, dtype=float))

    @property
    def drift(self) -> float:
        return float(self.A.v @ self.mu_vec)

    def config(self, m: int, seed: int) -> PathConfig:
        mu = self.mu_vec if self.model.dim > 1 else float(self.mu_vec[0])
        return PathConfig(int(m), self.family, self.model, self.regime, mu, seed, 0, self.L)


@dataclass(frozen=True)
class RuinEstimate:
    u: float
    rho_hat: float
    se: float
    method: str
    horizon: int
    tail_bound: float
    hit_quantiles: dict
    seed: int
    n_paths: int
    hits: int = 0
    tail_certified: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def uncertainty(self) -> float:
        """Sampling standard error plus the horizon remainder."""
        return self.se + self.tail_bound

    def as_dict(self):
        return {
            "u": self.u,
            "rho_hat": self.rho_hat,
            "se": self.se,
            "method": self.method,
            "horizon": self.horizon,
            "tail_bound": self.tail_bound,
            "tail_certified": self.tail_certified,
            "hit_quantiles": self.hit_quantiles,
            "hits": self.hits,
            "n_paths": self.n_paths,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# horizon control
# ---------------------------------------------------------------------------


def horizon(spec: RuinSpec, u: float, M: float = 20.0) -> int:
    """N(u) = M a^{-1}(u), rounded up."""
    if M < 2:
        raise InvalidParameter("the horizon multiplier must be at least 2")
    return int(math.ceil(M * int(spec.regime.a_inverse(u)[0])))


def _require_drift(spec: RuinSpec) -> None:
    if spec.drift <= 0 or spec.A.threshold <= 0:
        raise NoDriftCertificate("the drift does not push away from the set; rho(u) may equal 1")


def _window_square_sums(coef: np.ndarray, ks: np.ndarray) -> np.ndarray:
    """sum_i phi_{i,k}^2 for the truncated coefficients, for each k in ks."""
    K = int(ks.max())
    c = np.concatenate([np.zeros(K), coef, np.zeros(K)])
    C = np.concatenate([[0.0], np.cumsum(c)])
    out = np.empty(ks.size)
    for j, k in enumerate(ks):
        w = C[k:] - C[:-k]
        out[j] = float(w @ w)
    return out


def horizon_tail_bound(spec: RuinSpec, u: float, N: int, *, extra: int = 8) -> tuple[float, bool]:
    """Upper bound on P(Y_k in uA for some k > N) and whether it is certified.

    The bound is clipped at 1.

    Gaussian innovations use the exact variance of v.S_k for
    k in (N, extra*N] and a power-law extrapolation beyond, summed with the
    incomplete gamma function. Other laws with finite lags use one tilt
    t along the set normal and a geometric series. Anything else is
    reported as an uncertified +inf.
    """
    _require_drift(spec)
    A, v = spec.A, spec.A.v
    thr = u * A.threshold
    drift = spec.drift
    reg = spec.regime
    cfg = spec.config(N, 0)
    coef = cfg.coefficients()
    if isinstance(spec.model, Gaussian):
        q = float(v @ np.atleast_2d(spec.model.matrix) @ v)
        K = int(extra * N)
        ks = np.arange(N + 1, K + 1)
        if q == 0.0:
            return 0.0, True
        var = q * _window_square_sums(coef, ks)
        ak = np.asarray(reg.a(ks), dtype=float)
        z = (thr + ak * drift) ** 2 / (2 * var)
        head = float(np.sum(np.exp(-z)))
        # beyond K: var_k <= var_K (k/K)^p and a_k = a_K (k/K)^w
        half = _window_square_sums(coef, np.array([K // 2, K]))
        p = max(math.log(half[1] / half[0]) / math.log(K / (K // 2)), 1.0) + 0.01
        w = float(np.log(float(reg.a(2 * K)) / float(reg.a(K))) / math.log(2.0))
        gam = 2 * w - p
        if gam <= 0:
            return math.inf, False
        beta = (float(reg.a(K)) * drift) ** 2 / (2 * var[-1]) / K**gam
        x0 = beta * K**gam
        tail = special.gammaincc(1.0 / gam, x0) * special.gamma(1.0 / gam) / (gam * beta ** (1.0 / gam))
        return min(head + float(tail), 1.0), True
    if isinstance(spec.family, FiniteLag) and reg.omega == 1.0 and not reg.uses_product_sequence:
        model = spec.model
        d = model.dim
        lo, hi = spec.family.lag_range()
        if N + 1 < hi - lo + 1:
            return math.inf, False

        def ray(k):
            return float(model.log_mgf(k * v if d > 1 else k * float(v[0])))

        best = math.inf
        for k in np.logspace(-3, 2, 101):
            h = ray(k) - k * drift
            if not (math.isfinite(h) and h < 0):
                continue
            try:
                G = coefficient_cumulant(spec.family, model, k * v if d > 1 else k * float(v[0]), N + 1) - k * float(reg.a(N + 1)) * drift
            except ArithmeticError:
                continue
            bound = math.exp(-k * thr + G) / -math.expm1(h)
            best = min(best, bound)
        if math.isfinite(best):
            return min(best, 1.0), True
        return math.inf, False
    return math.inf, False


# ---------------------------------------------------------------------------
# plain Monte Carlo
# ---------------------------------------------------------------------------


def _first_hits(spec: RuinSpec, cfg: PathConfig, paths: np.ndarray, N: int, us) -> np.ndarray:
    """First n in 1..N with Y_n in uA, per path and u (0 when none)."""
    x, _ = simulate_batch(cfg, paths, N)
    S = np.cumsum(x, axis=1)
    n = np.arange(1, N + 1)
    an = np.asarray(spec.regime.a(n), dtype=float)
    A = spec.A
    if spec.model.dim == 1:
        proj = A.direction[0] * (S - an * float(spec.mu_vec[0]))
    else:
        proj = (S - an[:, None] * spec.mu_vec) @ A.v
    out = np.zeros((len(us), paths.size), dtype=np.int64)
    for j, u in enumerate(us):
        thr = u * A.threshold
        hit = proj > thr if not A.closed else proj >= thr
        any_hit = hit.any(axis=1)
        out[j] = np.where(any_hit, np.argmax(hit, axis=1) + 1, 0)
    return out


def _batch_size(cfg: PathConfig, N: int) -> int:
    """Paths per batch, keeping one batch of innovations near 4M numbers."""
    first, last = cfg.innovation_range(N)
    width = (last - first + 1) * cfg.model.dim
    return int(max(1, min(_BATCH, _CELLS // width)))


def _batched(n_paths: int, threads: int, work, size: int = 4096):
    starts = list(range(0, n_paths, size))
    chunks = [np.arange(s, min(s + size, n_paths), dtype=np.int64) for s in starts]
    if threads <= 1:
        return [work(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, chunks))


def _quantiles(times: np.ndarray) -> dict:
    if times.size == 0:
        return {}
    qs = np.quantile(times, [0.1, 0.5, 0.9])
    return {"q10": float(qs[0]), "q50": float(qs[1]), "q90": float(qs[2])}


def ruin_mc_grid(spec: RuinSpec, us, n_paths: int, M: float = 20.0, *, seed: int = 0, threads: int = 1) -> list[RuinEstimate]:
    """Plain Monte Carlo for several u on common random numbers.

    Each u is judged on its own horizon N(u); the paths are shared.
    """
    _require_drift(spec)
    us = [float(u) for u in us]
    if any(u <= 0 for u in us):
        raise InvalidParameter("u must be positive")
    Ns = [horizon(spec, u, M) for u in us]
    Nmax = max(Ns)
    cfg = spec.config(Nmax, seed)

    def work(paths):
        return _first_hits(spec, cfg, paths, Nmax, us)

    first = np.concatenate(_batched(int(n_paths), threads, work, _batch_size(cfg, Nmax)), axis=1)
    out = []
    for j, (u, N) in enumerate(zip(us, Ns)):
        t = first[j]
        hit = (t > 0) & (t <= N)
        k = int(hit.sum())
        rho = k / n_paths
        se = math.sqrt(rho * (1 - rho) / n_paths)
        tb, cert = horizon_tail_bound(spec, u, N)
        out.append(
            RuinEstimate(u, rho, se, "plain", N, tb, _quantiles(t[hit]), seed, int(n_paths), k, cert,
                         {"tau_err": cfg.tau_err, "M": M})
        )
    return out


def ruin_mc(spec: RuinSpec, u: float, n_paths: int, M: float = 20.0, *, seed: int = 0, threads: int = 1) -> RuinEstimate:
    """Plain Monte Carlo estimate of rho(u) on the horizon M a^{-1}(u)."""
    return ruin_mc_grid(spec, [u], n_paths, M, seed=seed, threads=threads)[0]


# ---------------------------------------------------------------------------
# importance sampling
# ---------------------------------------------------------------------------


def tilt_root(spec: RuinSpec) -> np.ndarray:
    """theta* = k v with Lambda(k v) = k v.mu, k > 0."""
    model, v = spec.model, spec.A.v
    drift = spec.drift
    d = model.dim

    def h(k):
        with np.errstate(all="ignore"):
            return float(model.log_mgf(k * v if d > 1 else k * float(v[0]))) - k * drift

    if not drift > 0:
        raise RootNotBracketed("tilt root is zero: the drift does not point away from the set")
    lo = 1e-8
    if not h(lo) < 0:
        raise RootNotBracketed("drifted cumulant is not negative near zero")
    hi = 1e-3
    while True:
        val = h(hi)
        if not math.isfinite(val) or val > 0:
            break
        lo = hi
        hi *= 2
        if hi > 1e8:
            raise RootNotBracketed("tilt root not bracketed")
    if not math.isfinite(h(hi)):
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            val = h(mid)
            if not math.isfinite(val):
                b = mid
            elif val > 0:
                hi = mid
                break
            else:
                a = mid
        else:
            raise RootNotBracketed("the drifted cumulant stays negative up to the edge of its domain")
        lo = a
    k = optimize.brentq(h, lo, hi, xtol=1e-14, rtol=1e-14)
    return k * v if d > 1 else np.array([k * float(v[0])])


def ruin_is(
    spec: RuinSpec,
    u: float,
    n_paths: int,
    *,
    seed: int = 0,
    threads: int = 1,
    max_horizon: int | None = None,
    fallback: bool = False,
    M: float = 20.0,
) -> RuinEstimate:
    """Exponentially tilted estimate of rho(u), stopped at the first hit."""
    if not isinstance(spec.family, FiniteLag):
        raise UnsupportedFamily("tilting is offered for finite-lag (including i.i.d.) families only")
    _require_drift(spec)
    try:
        theta = tilt_root(spec)
    except RootNotBracketed:
        if not fallback:
            raise
        warnings.warn("tilt root not bracketed; falling back to plain Monte Carlo", RuntimeWarning)
        return ruin_mc(spec, u, n_paths, M, seed=seed, threads=threads)
    th = theta if spec.model.dim > 1 else float(theta[0])
    a_inv = int(spec.regime.a_inverse(u)[0])
    start = max(16, 4 * a_inv)
    cap = int(max_horizon or 1000 * max(a_inv, 16))
    A = spec.A
    thr = u * A.threshold
    lo_lag, hi_lag = (int(x) for x in spec.family.lag_range())

    def work(paths):
        weights = np.zeros(paths.size)
        times = np.zeros(paths.size, dtype=np.int64)
        todo = np.arange(paths.size)
        H = start
        while todo.size and H <= cap:
            cfg = spec.config(H, seed)
            first, last = cfg.innovation_range(H)
            z = _innovations(cfg, paths[todo], first, last, th)
            x = _filter(z, cfg.coefficients())
            S = np.cumsum(x, axis=1)
            n = np.arange(1, H + 1)
            an = np.asarray(spec.regime.a(n), dtype=float)
            if spec.model.dim == 1:
                proj = A.direction[0] * (S - an * float(spec.mu_vec[0]))
            else:
                proj = (S - an[:, None] * spec.mu_vec) @ A.v
            hit = proj > thr if not A.closed else proj >= thr
            got = hit.any(axis=1)
            tau = np.argmax(hit, axis=1) + 1
            # innovations with index <= tau - lo decide the event {first hit at tau}
            csum = np.cumsum(_llr_terms(cfg, z, th), axis=1)
            pos = tau - lo_lag - first
            llr = csum[np.arange(todo.size), pos]
            idx = todo[got]
            weights[idx] = np.exp(-llr[got])
            times[idx] = tau[got]
            todo = todo[~got]
            H *= 2
        return weights, times, todo.size

    parts = _batched(int(n_paths), threads, work, _batch_size(spec.config(start, seed), cap))
    w = np.concatenate([p[0] for p in parts])
    t = np.concatenate([p[1] for p in parts])
    missed = int(sum(p[2] for p in parts))
    rho = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(w.size)) if w.size > 1 else math.inf
    meta = {"theta": theta.tolist(), "missed": missed, "cap": cap}
    tb = 0.0
    if missed:
        meta["note"] = "paths without a hit by the cap contribute zero weight"
    return RuinEstimate(u, min(rho, 1.0), se, "tilted", cap, tb, _quantiles(t[t > 0]), seed, int(n_paths),
                        int((t > 0).sum()), missed == 0, meta)


# ---------------------------------------------------------------------------
# scaled cumulants and decay fits
# ---------------------------------------------------------------------------


def g_function(spec: RuinSpec):
    """g_n(t) = (1/n)[sum_i Lambda(t phi_{i,n}) - a_n t.mu], computed analytically."""
    fam, model = spec.family, spec.model
    mu = spec.mu_vec

    def g_n(t, n):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        k_n = default_window(fam, int(n)) if fam.memory == "long" or fam.is_finite else fam.truncation_lag(1e-12) + int(n) + 1
        tt = t_arr if model.dim > 1 else float(t_arr[0])
        total = coefficient_cumulant(fam, model, tt, int(n), k_n)
        return (total - float(spec.regime.a(int(n))) * float(t_arr @ mu)) / n

    return g_n


def empirical_g(spec: RuinSpec, t, n_grid, *, h: float = 1e-5):
    """g_n(t) on ``n_grid``, its extrapolated limit and the limit's gradient."""
    g_n = g_function(spec)
    n_grid = sorted(int(n) for n in n_grid)
    if len(n_grid) < 2:
        raise InvalidParameter("need at least two n values")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    vals = np.array([g_n(t, n) for n in n_grid])
    n1, n2 = n_grid[-2], n_grid[-1]

    def lim(tt):
        return (n2 * g_n(tt, n2) - n1 * g_n(tt, n1)) / (n2 - n1)

    g = lim(t)
    grad = np.zeros(t.size)
    for i in range(t.size):
        e = np.zeros(t.size)
        step = h * max(1.0, abs(t[i]))
        e[i] = step
        grad[i] = (lim(t + e) - lim(t - e)) / (2 * step)
    return vals, float(g), grad


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float
    slope_se: float
    n_points: int
    bracket: tuple[float, float] | None
    inside: bool | None

    def as_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "slope_se": self.slope_se,
            "n_points": self.n_points,
            "bracket": list(self.bracket) if self.bracket else None,
            "inside": self.inside,
        }


def _continuous_b(reg: RegimeSpec, u: np.ndarray) -> np.ndarray:
    """b at the real-valued inverse of a for power normalisations."""
    if not reg.uses_product_sequence and reg.tag.startswith("S"):
        n = (u / reg.a_scale) ** (1.0 / reg.omega)
        return np.asarray(reg.b(n), dtype=float)
    return np.asarray(reg.b(reg.a_inverse(u)), dtype=float)


def ruin_decay_fit(estimates, reg: RegimeSpec, bracket=None, *, regressor=None, max_rel_se: float = 0.3) -> DecayFit:
    """Least-squares slope of log rho_hat(u) against b_{a^{-1}(u)}.

    ``regressor`` may replace b_{a^{-1}(u)} by any function of u.
    """
    pts = sorted(
        (e for e in estimates if e.rho_hat > 0 and e.se / e.rho_hat < max_rel_se),
        key=lambda e: e.u,
    )
    if len(pts) < 4:
        raise InsufficientData(f"need at least 4 usable points, got {len(pts)}")
    u = np.array([e.u for e in pts])
    y = np.log([e.rho_hat for e in pts])
    x = np.asarray(regressor(u), dtype=float) if regressor is not None else _continuous_b(reg, u)
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    slope, icpt = float(coef[0]), float(coef[1])
    resid = y - X @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(len(pts) - 2, 1)
    sxx = float(((x - x.mean()) ** 2).sum())
    slope_se = math.sqrt(ss_res / dof / sxx) if sxx > 0 else math.inf
    inside = None
    if bracket is not None:
        lo, hi = float(bracket[0]), float(bracket[1])
        inside = lo <= slope <= hi
        bracket = (lo, hi)
    return DecayFit(slope, icpt, r2, slope_se, len(pts), bracket, inside)
