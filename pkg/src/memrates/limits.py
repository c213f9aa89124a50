"""Limit constants: segment growth rates, the memory tables and the
logarithmic ruin asymptotics for every regime.

All searches over the scalar variables c > 0, u > 0 and over tilts t = kappa v
use the same scheme: a logarithmic grid over [1e-4, 1e4] to bracket the
optimum, then golden-section refinement in log scale. Membership in the
strict tilt sets is decided with a margin of 1e-9 and boundary points are
excluded, which can only make a reported bound more conservative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize

from .errors import (
    CertificationError,
    EmptyFeasibleSet,
    EmptyG,
    ForbiddenOmega,
    InvalidParameter,
    MissingHeavyProfile,
    NoNegativeG,
    OutOfRange,
    RegimeMismatch,
    RootNotBracketed,
    UnsupportedDimension,
)
from .model import (
    BalancedPower,
    CoefficientFamily,
    FiniteLag,
    Gaussian,
    InnovationModel,
    RegimeSpec,
    TargetSet,
)
from .ratefn import (
    KernelG,
    _interval_for_windows,
    _short_window_limits,
    coefficient_cumulant,
    kernel_integral,
    lambda_alpha,
    lambda_h,
    legendre,
    pi_region,
    regime_cumulant,
)

__all__ = [
    "RateBounds",
    "RuinAsymptote",
    "NyrhinenBounds",
    "log_grid_optimize",
    "halfspace_conjugate_inf",
    "segment_rate_bounds",
    "table1_theta",
    "table2_theta",
    "ruin_cramer_bounds",
    "ruin_gaussian_bounds",
    "ruin_heavy_bounds",
    "ruin_lm_bounds",
    "ruin_lm_gaussian_bounds",
    "ruin_lm_heavy_bounds",
    "nyrhinen_bounds",
    "ruin_asymptote",
    "short_family_check",
]

MARGIN = 1e-9
_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RateBounds:
    """Bracket I_* <= I^* for the growth of long strange segments."""

    lower: float
    upper: float
    regime: str
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self):
        return {"lower": self.lower, "upper": self.upper, "regime": self.regime, "diagnostics": self.diagnostics}


@dataclass(frozen=True)
class RuinAsymptote:
    """Bounds on lim log(rho(u)) / b_{a^{-1}(u)} with optional exact value."""

    lower: float
    upper: float
    regime: str
    exact: float | None = None
    constants: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    certified: bool = True
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.lower > self.upper:
            if self.lower > self.upper + 1e-9 * max(1.0, abs(self.upper)):
                raise CertificationError(f"lower bound {self.lower} exceeds upper bound {self.upper}")
            # round-off between two routes to the same number
            object.__setattr__(self, "lower", self.upper)

    @property
    def bracket(self) -> tuple[float, float]:
        return self.lower, self.upper

    def as_dict(self):
        return {
            "regime": self.regime,
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "constants": self.constants,
            "optimizer": self.optimizer,
            "certified": self.certified,
            "notes": list(self.notes),
        }


class NyrhinenBounds(NamedTuple):
    upper: float
    lower: float
    kappa_bar: float
    t_lower: float
    certified: bool
    degenerate: bool


# ---------------------------------------------------------------------------
# scalar optimisation
# ---------------------------------------------------------------------------


def _golden_log(h, a, b, tol, maximize, max_iter=200):
    """Golden section on [log a, log b] for h(x); returns (x, h(x))."""
    sign = -1.0 if maximize else 1.0

    def k(s):
        val = h(math.exp(s))
        return sign * val if math.isfinite(val) else math.inf

    lo, hi = math.log(a), math.log(b)
    c = hi - _GOLD * (hi - lo)
    d = lo + _GOLD * (hi - lo)
    kc, kd = k(c), k(d)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if kc <= kd:
            hi, d, kd = d, c, kc
            c = hi - _GOLD * (hi - lo)
            kc = k(c)
        else:
            lo, c, kc = c, d, kd
            d = lo + _GOLD * (hi - lo)
            kd = k(d)
    s = c if kc <= kd else d
    return math.exp(s), sign * min(kc, kd)


def log_grid_optimize(
    fun: Callable[[float], float],
    lo: float = 1e-4,
    hi: float = 1e4,
    *,
    per_decade: int = 64,
    tol: float = 1e-10,
    maximize: bool = False,
) -> tuple[float, float, dict]:
    """Optimise a scalar function of x > 0 on a log grid plus golden refinement.

    Non-finite values are treated as infeasible. Returns the optimiser, the
    optimal value and a trace; raises ``EmptyFeasibleSet`` when no grid point
    gives a finite value.
    """
    n = max(2, int(round(per_decade * math.log10(hi / lo)))) + 1
    xs = np.logspace(math.log10(lo), math.log10(hi), n)
    vals = np.array([fun(float(x)) for x in xs], dtype=float)
    finite = np.isfinite(vals)
    if not finite.any():
        raise EmptyFeasibleSet("objective is infinite on the whole search grid")
    score = np.where(finite, -vals if maximize else vals, np.inf)
    k = int(np.argmin(score))
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, n - 1)]
    x_best, v_best = float(xs[k]), float(vals[k])
    if a < b:
        x_ref, v_ref = _golden_log(fun, float(a), float(b), tol, maximize)
        if math.isfinite(v_ref) and ((v_ref > v_best) if maximize else (v_ref < v_best)):
            x_best, v_best = x_ref, v_ref
    trace = {
        "grid_points": int(n),
        "feasible_points": int(finite.sum()),
        "bracket": [float(a), float(b)],
        "at_edge": bool(k == 0 or k == n - 1),
    }
    return x_best, v_best, trace


def _bisect(pred, good: float, bad: float, iters: int = 200, rel: float = 1e-15) -> float:
    """Boundary between a point where ``pred`` holds and one where it fails."""
    for _ in range(iters):
        wide = good > 0 and bad > 4 * good
        mid = math.sqrt(good * bad) if wide else 0.5 * (good + bad)
        if pred(mid):
            good = mid
        else:
            bad = mid
        if abs(bad - good) <= rel * max(abs(good), 1e-300):
            break
    return good


def _set_edge(h, in_set, good: float, bad: float) -> float:
    """Right end of the open set {h < 0} entered at ``good``, left at ``bad``.

    The supremum of an open set is its boundary, so when ``h`` is finite and
    positive at ``bad`` the edge is the root of ``h``; otherwise the set ends
    at the edge of the domain and is located by bisection.
    """
    hb = h(bad)
    if math.isfinite(hb) and hb >= 0 and math.isfinite(h(good)):
        if hb == 0:
            return bad
        try:
            return optimize.brentq(h, good, bad, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        except ValueError:
            pass
    return _bisect(in_set, good, bad)


# ---------------------------------------------------------------------------
# conjugates over half-spaces
# ---------------------------------------------------------------------------


def _ray(f: Callable, v: np.ndarray) -> Callable[[float], float]:
    if v.size == 1:
        v0 = float(v[0])
        return lambda k: float(f(k * v0))
    return lambda k: float(f(k * v))


def halfspace_conjugate_inf(f: Callable, v, s: float, kappa_max: float = math.inf, *, open_set: bool = False) -> float:
    """inf of f* over {z : v.z >= s} (or > s), by the dual sup_k [k s - f(k v)].

    ``kappa_max`` restricts the dual variable, which is how conjugates
    restricted to a tilt region are handled.
    """
    if s <= 0:
        return 0.0
    v = np.atleast_1d(np.asarray(v, dtype=float))
    phi = _ray(f, v)
    val = legendre(phi, s, region=(0.0, kappa_max)).value
    if open_set and math.isfinite(val):
        # an open set sees the conjugate just beyond its boundary
        probe = legendre(phi, s * (1 + 1e-9) + 1e-12, region=(0.0, kappa_max)).value
        if not math.isfinite(probe):
            return math.inf
    return val


def _power_dual(a_coef: float, beta: float, s: float) -> float:
    """sup over k >= 0 of k s - a k**beta."""
    if s <= 0:
        return 0.0
    return (beta - 1.0) * (a_coef * beta**beta) ** (1.0 / (1.0 - beta)) * s ** (beta / (beta - 1.0))


# ---------------------------------------------------------------------------
# input checks
# ---------------------------------------------------------------------------


def short_family_check(fam: CoefficientFamily, tol: float = 1e-9) -> None:
    """Short-memory regimes need summable coefficients adding up to one."""
    if fam.memory != "short":
        raise RegimeMismatch("a short-memory regime needs an absolutely summable family")
    total = fam.total()
    if abs(total - 1.0) > tol:
        raise RegimeMismatch(f"coefficients must sum to 1, got {total:.12g}")


def _drift(A: TargetSet, mu) -> np.ndarray:
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if mu.shape != (A.dim,):
        raise InvalidParameter(f"drift has dimension {mu.size}, set has {A.dim}")
    return mu


def _require_condition_A(A: TargetSet, mu) -> np.ndarray:
    mu = _drift(A, mu)
    ok, _ = A.condition_A(mu)
    if not ok:
        raise EmptyFeasibleSet("Condition A fails: need v.mu > 0 and a positive threshold")
    return mu


def _parallel_positive(x: np.ndarray, v: np.ndarray, tol: float = 1e-9) -> bool:
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        return False
    vh = v / np.linalg.norm(v)
    along = float(x @ vh)
    return along > 0 and float(np.linalg.norm(x - along * vh)) <= tol * nx


def _direction_grid(dim: int, count: int = 64) -> np.ndarray:
    """Deterministic, roughly uniform unit vectors."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = 2 * math.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    rng = np.random.default_rng(12345)
    pts = rng.standard_normal((count * dim, dim))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _agrees(x: float, y: float, tol: float = 1e-9) -> bool:
    return abs(x - y) <= tol * max(1.0, abs(x))


def _c_search(value_at, exponent: float, *, per_decade: int = 64, maximize=False):
    """inf over c > 0 of c**exponent * value_at(c)."""
    def obj(c):
        v = value_at(c)
        return c**exponent * v if math.isfinite(v) else math.inf

    return log_grid_optimize(obj, per_decade=per_decade, maximize=maximize)


# ---------------------------------------------------------------------------
# segment growth
# ---------------------------------------------------------------------------


def segment_rate_bounds(fam: CoefficientFamily, model: InnovationModel, reg: RegimeSpec, A: TargetSet) -> RateBounds:
    """I_* and I^* for the normalised increments falling in A."""
    tag = reg.tag
    if tag.startswith("S"):
        short_family_check(fam)
    elif not isinstance(fam, BalancedPower):
        raise RegimeMismatch(f"{tag} needs a BalancedPower family")
    v = A.v
    c = A.threshold
    if tag in ("S1", "R1"):
        if A.dim != 1:
            raise UnsupportedDimension(f"{tag} rates are implemented for half-lines only")
        return _pi_restricted_rates(fam, model, reg, A)
    f = regime_cumulant(model, reg)
    lower = halfspace_conjugate_inf(f, v, c)
    upper = halfspace_conjugate_inf(f, v, c, open_set=not A.closed)
    return RateBounds(lower, max(upper, lower), tag, {"cumulant": tag})


def _pi_restricted_rates(fam, model, reg, A) -> RateBounds:
    tag = reg.tag
    pi = pi_region(fam, model, tag)
    v0 = float(A.v[0])
    f = model.log_mgf if tag == "S1" else (lambda t, k=KernelG.of(fam): lambda_alpha(model, k, t))
    lam_star = pi.hi if v0 > 0 else -pi.lo
    kappa_max = lam_star / abs(v0)
    lower = halfspace_conjugate_inf(f, A.v, A.threshold, kappa_max)

    def J(eta):
        return halfspace_conjugate_inf(f, A.v, A.threshold + eta * A.norm_v, open_set=True)

    diag = {"lambda_star": lam_star, "pi": [pi.lo, pi.hi], "pi_margin": pi.margin}
    if not math.isfinite(lam_star):
        upper = J(0.0)
        diag["theta_inf"] = 0.0
        return RateBounds(lower, max(upper, lower), tag, diag)

    def feasible(eta):
        j = J(eta)
        return math.isfinite(j) and eta > j / lam_star + MARGIN

    etas = np.logspace(-8, 4, 8 * 12 + 1)
    first = next((k for k, e in enumerate(etas) if feasible(float(e))), None)
    if first is None:
        diag["theta_inf"] = math.inf
        return RateBounds(lower, math.inf, tag, diag)
    good = float(etas[first])
    bad = float(etas[first - 1]) if first > 0 else 0.0
    for _ in range(100):
        mid = 0.5 * (good + bad)
        if feasible(mid):
            good = mid
        else:
            bad = mid
        if good - bad <= 1e-12 * good:
            break
    upper = J(good)
    diag["theta_inf"] = good
    return RateBounds(lower, max(upper, lower), tag, diag)


# ---------------------------------------------------------------------------
# memory tables
# ---------------------------------------------------------------------------


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


def _div(num: Fraction, den: Fraction):
    if den == 0:
        return math.inf
    return num / den


def _table_args(memory, omega, alpha, beta):
    if memory not in ("short", "long"):
        raise InvalidParameter("memory must be 'short' or 'long'")
    w = _exact(omega)
    if w < Fraction(1, 2):
        raise OutOfRange(f"omega must be at least 1/2, got {omega}")
    a = _exact(alpha) if alpha is not None else None
    b = _exact(beta) if beta is not None else None
    if memory == "long" and (a is None or not Fraction(1, 2) < a <= 1):
        raise OutOfRange("long memory needs alpha in (1/2, 1]")
    return w, a, b


def _need_beta(b):
    if b is None or b <= 1:
        raise OutOfRange("this row needs beta > 1")
    return b


def table1_theta(memory: str, omega, alpha=None, beta=None):
    """Exponent theta with R_m of order (log m)**theta.

    Returns a ``Fraction`` or ``math.inf``.
    """
    w, a, b = _table_args(memory, omega, alpha, beta)
    if memory == "short":
        if w <= 1:
            return _div(Fraction(1), 2 * w - 1)
        b = _need_beta(b)
        return _div(b - 1, b * w - 1)
    if w <= Fraction(3, 2) - a:
        return math.inf
    if w <= 2 - a:
        return _div(Fraction(1), 2 * w + 2 * a - 3)
    b = _need_beta(b)
    return _div(b - 1, b * (w + a - 1) - 1)


def table2_theta(memory: str, omega, alpha=None, beta=None):
    """Exponent theta with -log rho(u) of order u**theta."""
    w, a, b = _table_args(memory, omega, alpha, beta)
    if memory == "short":
        if w <= 1:
            return (2 * w - 1) / w
        b = _need_beta(b)
        return (b * w - 1) / (w * (b - 1))
    if w <= Fraction(3, 2) - a:
        return Fraction(0)
    if w <= 2 - a:
        return (2 * w + 2 * a - 3) / w
    b = _need_beta(b)
    return (b * (w + a - 1) - 1) / (w * (b - 1))


# ---------------------------------------------------------------------------
# short memory, light tails
# ---------------------------------------------------------------------------


def _window_extremes(fam: CoefficientFamily, n_small: int = 200) -> tuple[float, float]:
    """Smallest and largest window sum phi_{i,n} over all i and n."""
    w_lo, w_hi, _ = _short_window_limits(fam)
    if fam.is_finite:
        lo_lag, hi_lag = fam.lag_range()
        span = int(hi_lag - lo_lag) + 2
        i = np.arange(int(lo_lag) - span - 1, int(hi_lag) + 1)
        vals = np.concatenate([fam.partial_sum(i, k) for k in range(1, span + 1)])
    else:
        L = fam.truncation_lag(1e-12)
        lo_lag, _ = fam.lag_range()
        start = -L - n_small if not math.isfinite(lo_lag) else int(lo_lag) - n_small
        i = np.arange(start, L + 1)
        vals = np.concatenate([fam.partial_sum(i, k) for k in range(1, n_small + 1)])
    return min(w_lo, float(vals.min())), max(w_hi, float(vals.max()))


def _k_window(fam: CoefficientFamily, n: int) -> int:
    if fam.is_finite:
        lo, hi = fam.lag_range()
        return int(max(abs(lo), abs(hi))) + n + 1
    return fam.truncation_lag(1e-12) + n + 1


def _certify_D(fam, model, t, drift: float, n_max: int) -> tuple[bool, dict]:
    """Finite-n check that sum_i Lambda(t phi_{i,n}) - n t.mu stays bounded."""
    ns = np.unique(np.geomspace(1, n_max, 24).astype(int))
    vals = []
    for n in ns:
        try:
            vals.append(coefficient_cumulant(fam, model, t, int(n), _k_window(fam, int(n))) - n * drift)
        except ArithmeticError:
            return False, {"n": int(n), "reason": "divergent term"}
    vals = np.array(vals)
    ok = bool(np.all(np.isfinite(vals)) and vals[-1] <= vals.max() and vals[-1] <= vals[-2] + 1e-9)
    return ok, {"n_grid": ns.tolist(), "sup": float(vals.max()), "last": float(vals[-1])}


def ruin_cramer_bounds(fam: CoefficientFamily, model: InnovationModel, A: TargetSet, mu, *, n_max: int = 10_000) -> RuinAsymptote:
    """Ruin asymptotics for short memory with light tails, scale u."""
    short_family_check(fam)
    mu = _require_condition_A(A, mu)
    v, c = A.v, A.threshold
    drift = float(v @ mu)
    d = A.dim
    ray = _ray(model.log_mgf, v)

    # domain of kappa: every window value times kappa v must be a finite tilt
    if d == 1:
        w_lo, w_hi = _window_extremes(fam)
        _, k_hi = _interval_for_windows(model.domain(), w_lo * v[0], w_hi * v[0])
        kappa_dom = k_hi
    elif model.finite_everywhere:
        kappa_dom = math.inf
    else:
        raise UnsupportedDimension("light-tailed bounds in d >= 2 need a cumulant finite everywhere")

    def h(k):
        return ray(k) - k * drift

    def in_D(k):
        if k >= kappa_dom:
            return False
        val = h(k)
        return math.isfinite(val) and val < -MARGIN

    grid = np.logspace(-4, 4, 8 * 8 + 1)
    inside = [in_D(float(k)) for k in grid]
    if not any(inside):
        raise EmptyFeasibleSet("no tilt along the set normal makes the drifted cumulant negative")
    last = max(k for k, ok in enumerate(inside) if ok)
    if last == len(grid) - 1:
        kappa_bar = math.inf
    else:
        kappa_bar = _set_edge(h, in_D, float(grid[last]), float(grid[last + 1]))
    notes = []
    if math.isfinite(kappa_bar):
        certified, cert = _certify_D(fam, model, kappa_bar * (1 - 1e-6) * (v if d > 1 else v[0]), kappa_bar * (1 - 1e-6) * drift, n_max)
    else:
        certified, cert = False, {"reason": "unbounded tilt set"}
    upper = -kappa_bar * c
    if not certified:
        notes.append("tilt-set membership not certified by the finite-n check")

    # lower bound: tilts t in the interior of Pi pushing the mean into A
    if d == 1:
        pi = pi_region(fam, model, "S1")
        t_hi = (pi.hi if v[0] > 0 else -pi.lo) / abs(v[0])
    else:
        t_hi = math.inf

    def F(k, u=v):
        if k >= t_hi * (1 - MARGIN):
            return math.inf
        t = k * u
        g = np.atleast_1d(np.asarray(model.grad(t if d > 1 else float(t[0])), dtype=float))
        if not np.all(np.isfinite(g)):
            return math.inf
        denom = float(v @ (g - mu))
        if denom <= MARGIN:
            return math.inf
        lam = float(model.log_mgf(t if d > 1 else float(t[0])))
        return c / denom * (float(t @ g) - lam)

    k_low, f_low, trace = log_grid_optimize(F)
    t_best = k_low * v
    if d > 1:
        # also search tilts tilted towards the drift inside span{v, mu}
        e1 = v / np.linalg.norm(v)
        perp = mu - (mu @ e1) * e1
        if np.linalg.norm(perp) > 1e-12:
            e2 = perp / np.linalg.norm(perp)
            for ang in np.linspace(-1.4, 1.4, 29):
                u = math.cos(ang) * e1 + math.sin(ang) * e2
                try:
                    kk, ff, _ = log_grid_optimize(lambda k, u=u: F(k, u), per_decade=16)
                except EmptyFeasibleSet:
                    continue
                if ff < f_low:
                    k_low, f_low, t_best = kk, ff, kk * u
    lower = -f_low

    constants: dict = {"kappa_bar": kappa_bar, "kappa_domain": kappa_dom}
    exact = None
    try:
        w, gamma_star, r = _cramer_w(model, mu, v, c)
        constants.update({"w": w, "gamma_star": gamma_star.tolist(), "r": r})
        hyp = model.finite_everywhere and model.unbounded and _parallel_positive(mu, v)
        if hyp:
            cand = -w * float(gamma_star @ mu)
            if _agrees(cand, lower) and _agrees(cand, upper):
                exact = cand
            else:
                notes.append("explicit limit differs from the bracket; not reported")
    except RootNotBracketed as exc:
        notes.append(str(exc))
    return RuinAsymptote(
        lower=lower,
        upper=upper,
        regime="S1",
        exact=exact,
        constants=constants,
        optimizer={"t_lower": t_best.tolist(), "lower_trace": trace, "D_check": cert},
        certified=certified,
        notes=tuple(notes),
    )


def _cramer_w(model, mu, v, c):
    """Root w > 0 of Lambda(w mu) = w |mu|^2 and the induced gamma*."""
    m2 = float(mu @ mu)
    d = mu.size
    arg = (lambda w: w * mu) if d > 1 else (lambda w: w * float(mu[0]))

    def f(w):
        val = float(model.log_mgf(arg(w)))
        return val - w * m2

    lo = 1e-6
    if not f(lo) < 0:
        raise RootNotBracketed("no sign change for w near zero")
    hi = 1.0
    while True:
        val = f(hi)
        if not math.isfinite(val) or val > 0:
            break
        lo = hi
        hi *= 2.0
        if hi > 1e12:
            raise RootNotBracketed("w not bracketed below 1e12")
    if not math.isfinite(f(hi)):
        # shrink back into the domain
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            val = f(mid)
            if not math.isfinite(val):
                b = mid
            elif val > 0:
                hi = mid
                break
            else:
                a = mid
        else:
            raise RootNotBracketed("w not bracketed inside the cumulant's domain")
        lo = a
    w = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)
    g = np.atleast_1d(np.asarray(model.grad(arg(w)), dtype=float))
    denom = float(v @ (g - mu))
    if denom <= 0:
        raise RootNotBracketed("tilted mean does not move into the set")
    r = c / denom
    return w, r * (g - mu), r


# ---------------------------------------------------------------------------
# short memory, power normalisations
# ---------------------------------------------------------------------------


def _gaussian_of(Sigma) -> Gaussian:
    if isinstance(Sigma, Gaussian):
        return Sigma
    if isinstance(Sigma, InnovationModel):
        return Gaussian(Sigma.covariance() if Sigma.dim > 1 else float(np.asarray(Sigma.covariance()).ravel()[0]))
    return Gaussian(Sigma)


def ruin_gaussian_bounds(reg: RegimeSpec, Sigma, mu, A: TargetSet, omega: float | None = None) -> RuinAsymptote:
    """Ruin asymptotics under S3 (Gaussian-domain, a_n = n**omega)."""
    if reg.tag != "S3":
        raise RegimeMismatch("Gaussian ruin bounds need regime S3")
    w = float(reg.omega if omega is None else omega)
    if not 0.5 < w <= 1.0:
        raise RegimeMismatch(f"S3 needs omega in (1/2, 1], got {w}")
    G = _gaussian_of(Sigma)
    if G.dim != A.dim:
        raise InvalidParameter("covariance and set dimensions differ")
    mu = _require_condition_A(A, mu)
    S = np.atleast_2d(G.matrix)
    v, thr = A.v, A.threshold
    q = float(v @ S @ v)
    drift = float(v @ mu)
    k = (2 * w - 1) / w

    def inner(c):
        s = drift + c * thr
        return 0.0 if s <= 0 else s * s / (2 * q)

    c_opt, val, trace = _c_search(inner, -k)
    bound = -val
    constants = {"exponent": k, "c_opt": c_opt}
    exact, notes = None, []
    gamma0 = thr * (S @ v) / q
    Sinv_mu = np.linalg.solve(S, mu)
    dirs = _direction_grid(A.dim)
    dirs = dirs[dirs @ v >= 0]
    hyp = bool(np.all(dirs @ Sinv_mu >= -1e-9 * np.linalg.norm(Sinv_mu))) and _parallel_positive(Sinv_mu, v)
    if hyp:
        m = float(mu @ Sinv_mu)
        g = float(gamma0 @ np.linalg.solve(S, gamma0))
        b = float(mu @ np.linalg.solve(S, gamma0))
        c0 = math.sqrt(max((2 * w - 1) * (m * g - b * b) + w * w * b * b, 0.0)) / g - (1 - w) * b / g
        z = mu + c0 * gamma0
        cand = -0.5 * c0 ** (-k) * float(z @ np.linalg.solve(S, z))
        constants.update({"c0": c0, "gamma0": gamma0.tolist()})
        if _agrees(cand, bound):
            exact = cand
        else:
            notes.append("explicit limit differs from the numerical optimum")
    return RuinAsymptote(bound, bound, "S3", exact, constants, {"c_trace": trace}, True, tuple(notes))


def _profile_coef(model: InnovationModel, v: np.ndarray) -> float:
    """a' with Lambda^h(k v) = a' k**beta for k > 0."""
    return lambda_h(model, v if v.size > 1 else float(v[0]))


def ruin_heavy_bounds(reg: RegimeSpec, model: InnovationModel, mu, A: TargetSet, omega: float | None = None) -> RuinAsymptote:
    """Ruin asymptotics under S4 (balanced heavy profile)."""
    if reg.tag != "S4":
        raise RegimeMismatch("heavy-profile ruin bounds need regime S4")
    hp = model.heavy_profile
    if hp is None:
        raise MissingHeavyProfile(f"{model.law} has no heavy profile")
    beta = hp.beta
    w = float(reg.omega if omega is None else omega)
    if w < 1:
        raise RegimeMismatch("S4 needs omega >= 1")
    mu = _require_condition_A(A, mu)
    v, thr = A.v, A.threshold
    drift = float(v @ mu)
    a_coef = _profile_coef(model, v)
    nu = 1.0 + (w - 1.0) * beta / (beta - 1.0)
    E = nu / w

    def inner(c):
        return _power_dual(a_coef, beta, drift + c * thr)

    c_opt, val, trace = _c_search(inner, -E)
    bound = -val
    constants = {"nu": nu, "exponent": E, "c_opt": c_opt, "beta": beta}
    notes = ["the upper bound is reported with a leading minus sign, matching the lower bound"]
    exact = None
    # constant profile on every direction that can see the set or the drift
    dirs = _direction_grid(A.dim)
    vh = v / np.linalg.norm(v)
    keep = np.linalg.norm(dirs + vh, axis=1) > 1e-6 if A.dim > 1 else (dirs[:, 0] * vh[0] > 0) | (dirs[:, 0] * mu[0] > 0)
    zetas = np.array([float(hp.zeta(dvec if A.dim > 1 else np.array([dvec[0]]))) for dvec in dirs[keep]])
    a_const = float(zetas[0])
    hyp = bool(np.all(np.abs(zetas - a_const) <= 1e-9 * max(1.0, abs(a_const)))) and _parallel_positive(mu, v)
    if hyp:
        gamma0 = thr * v / float(v @ v)
        K = (beta - 1.0) * (a_const * beta**beta) ** (1.0 / (1.0 - beta))
        mg = float(mu @ gamma0)
        gg = float(gamma0 @ gamma0)
        mm = float(mu @ mu)
        disc = 4 * (beta * w - 1) * (mm * gg - mg * mg) + beta * beta * w * w * mg * mg
        c0 = (math.sqrt(max(disc, 0.0)) + (beta * w - 2) * mg) / (2 * gg)
        cand = -K * c0 ** (-E) * float(np.linalg.norm(mu + c0 * gamma0)) ** (beta / (beta - 1.0))
        constants.update({"K_beta": K, "c0": c0, "a": a_const})
        if _agrees(cand, bound):
            exact = cand
        else:
            notes.append("explicit limit differs from the numerical optimum")
    return RuinAsymptote(bound, bound, "S4", exact, constants, {"c_trace": trace}, True, tuple(notes))


# ---------------------------------------------------------------------------
# long memory
# ---------------------------------------------------------------------------


def _lm_family(reg: RegimeSpec, tag: str, fam=None) -> BalancedPower:
    if reg.tag != tag:
        raise RegimeMismatch(f"expected regime {tag}, got {reg.tag}")
    fam = fam if fam is not None else reg.family
    if not isinstance(fam, BalancedPower):
        raise RegimeMismatch(f"{tag} needs a BalancedPower family")
    return fam


def _sup_u(a: float, D: float, alpha: float) -> float:
    """sup over u > 0 of -u**(alpha-1) a + u D, for a > 0 and D < 0."""
    u = ((1.0 - alpha) * a / -D) ** (1.0 / (2.0 - alpha))
    return -(u ** (alpha - 1.0)) * a + u * D


def ruin_lm_bounds(reg: RegimeSpec, fam: BalancedPower, model: InnovationModel, mu, A: TargetSet, *, per_decade: int = 8) -> RuinAsymptote:
    """Ruin asymptotics under R2 (long memory, a_n = n Psi_n)."""
    fam = _lm_family(reg, "R2", fam)
    mu = _drift(A, mu)
    v, thr = A.v, A.threshold
    drift = float(v @ mu)
    if drift <= 0 or thr <= 0:
        raise EmptyG("no tilt gives a positive drift term and a positive set infimum")
    alpha = fam.alpha
    kern = KernelG.of(fam)

    def f(t):
        return lambda_alpha(model, kern, t)

    def inner(c):
        return halfspace_conjugate_inf(f, v, drift + c * thr)

    pd = per_decade if alpha < 1 else 64
    c_opt, val, trace = _c_search(inner, 1.0 / (alpha - 2.0), per_decade=pd)
    lower = -val
    constants: dict = {"alpha": alpha, "c_opt": c_opt}
    notes = []
    if alpha < 1:
        ray = _ray(f, v)
        C2 = kernel_integral(kern, 2.0)
        constants["C_alpha_2"] = C2

        def S(k):
            D = ray(k) - k * drift
            if not math.isfinite(D) or D >= -MARGIN:
                return math.inf
            return _sup_u(k * thr, D, alpha)

        try:
            k_opt, upper, utrace = log_grid_optimize(S, per_decade=per_decade)
        except EmptyFeasibleSet as exc:
            raise EmptyG("the set G is empty on the search grid") from exc
        constants["t_upper"] = (k_opt * v).tolist()
        notes.append("the inf-sup upper bound is negative as displayed and is reported without a sign change")
        optimizer = {"c_trace": trace, "t_trace": utrace}
    else:
        upper = lower
        optimizer = {"c_trace": trace}
    return RuinAsymptote(lower, upper, "R2", None, constants, optimizer, True, tuple(notes))


def ruin_lm_gaussian_bounds(
    reg: RegimeSpec, Sigma, mu, A: TargetSet, alpha: float | None = None, omega: float | None = None
) -> RuinAsymptote:
    """Ruin asymptotics under R3 (long memory, Gaussian domain)."""
    fam = _lm_family(reg, "R3")
    alpha = float(fam.alpha if alpha is None else alpha)
    w = float(reg.omega if omega is None else omega)
    if not (1.5 - alpha < w <= 2.0 - alpha + 1e-12):
        raise RegimeMismatch(f"R3 needs omega in (3/2-alpha, 2-alpha], got {w}")
    G = _gaussian_of(Sigma)
    mu = _require_condition_A(A, mu)
    S_mat = np.atleast_2d(G.matrix)
    v, thr = A.v, A.threshold
    q = float(v @ S_mat @ v)
    drift = float(v @ mu)
    kern = KernelG(alpha, fam.p)
    C = kernel_integral(kern, 2.0)
    e = (3.0 - 2.0 * alpha) / w

    def inner(c):
        s = drift + c * thr
        return 0.0 if s <= 0 else s * s / (2 * q)

    c_opt, val, trace = _c_search(inner, -2.0 + e)
    lower = -val / C
    constants: dict = {"C_alpha_2": C, "exponent": e, "c_opt": c_opt}
    optimizer: dict = {"c_trace": trace}
    if alpha < 1:
        K = w * (3 - 2 * alpha - w) ** (1 - e) / (2 * (alpha + w) - 3) ** (2 - e)
        constants["K_alpha_omega"] = K

        def obj(k):
            gap = k * drift - 0.5 * C * k * k * q
            if gap <= MARGIN:
                return -math.inf
            return gap ** (-1 + e) * (k * thr) ** (2 - e)

        try:
            k_opt, best, utrace = log_grid_optimize(obj, maximize=True)
        except EmptyFeasibleSet as exc:
            raise EmptyG("the set G is empty on the search grid") from exc
        upper = -K * best
        constants["t_upper"] = (k_opt * v).tolist()
        optimizer["t_trace"] = utrace
    else:
        upper = lower
    exact, notes = None, []
    if A.dim == 1 and v[0] == 1.0 and thr == 1.0:
        s2 = float(S_mat[0, 0])
        m0 = float(mu[0])
        wa = w + alpha
        cand = (
            -((2 * wa - 3) ** ((3 - 2 * wa) / w) / (3 - 2 * alpha) ** ((3 - 2 * alpha) / w))
            * (2.0 / (s2 * C))
            * w * w
            * m0 ** ((3 - 2 * alpha) / w)
        )
        constants["explicit"] = cand
        if _agrees(cand, lower) and _agrees(cand, upper):
            exact = cand
        else:
            notes.append("explicit limit differs from the bracket; not reported as exact")
    return RuinAsymptote(lower, upper, "R3", exact, constants, optimizer, True, tuple(notes))


def ruin_lm_heavy_bounds(
    reg: RegimeSpec,
    model: InnovationModel,
    mu,
    A: TargetSet,
    alpha: float | None = None,
    beta: float | None = None,
    omega: float | None = None,
) -> RuinAsymptote:
    """Ruin asymptotics under R4 (long memory, heavy profile)."""
    fam = _lm_family(reg, "R4")
    alpha = float(fam.alpha if alpha is None else alpha)
    hp = model.heavy_profile
    if hp is None:
        raise MissingHeavyProfile(f"{model.law} has no heavy profile")
    beta = float(hp.beta if beta is None else beta)
    w = float(reg.omega if omega is None else omega)
    crit = beta * (1 - alpha) + 1
    if abs(w - crit) <= 1e-12:
        raise ForbiddenOmega(f"omega = beta(1-alpha)+1 = {crit} is excluded")
    mu = _require_condition_A(A, mu)
    v, thr = A.v, A.threshold
    drift = float(v @ mu)
    a_coef = _profile_coef(model, v)
    kern = KernelG(alpha, fam.p)
    C = kernel_integral(kern, beta)
    E = (beta * (w + alpha - 1) - 1) / (w * (beta - 1))

    def inner(c):
        return _power_dual(a_coef, beta, drift + c * thr)

    c_opt, val, trace = _c_search(inner, -E)
    lower = -val / C ** (1.0 / (beta - 1.0))
    constants: dict = {"C_alpha_beta": C, "exponent": E, "c_opt": c_opt}
    optimizer: dict = {"c_trace": trace}

    def hCL(k):
        return C * a_coef * k**beta

    if alpha == 1.0:
        upper = lower
    elif w < crit:
        ex1 = (crit - w) / (w * (beta - 1))
        ex2 = (1 - beta * (w + alpha - 1)) / (w * (beta - 1))
        K1 = w * (beta - 1) * (crit - w) ** (-ex1) / (beta * (w + alpha - 1) - 1) ** ((beta * (w + alpha - 1) - 1) / (w * (beta - 1)))
        constants.update({"K1": K1, "branch": "G1"})

        def obj(k):
            gap = k * drift - hCL(k)
            if gap <= MARGIN:
                return -math.inf
            return gap**ex1 / (k * thr) ** ex2

        try:
            k_opt, best, utrace = log_grid_optimize(obj, maximize=True)
        except EmptyFeasibleSet as exc:
            raise EmptyG("the set G1 is empty on the search grid") from exc
        upper = -K1 * best
        constants["t_upper"] = (k_opt * v).tolist()
        optimizer["t_trace"] = utrace
    else:
        dd = w - 1 - beta * (1 - alpha)
        K2 = dd * (1 + beta * (1 - alpha)) ** ((1 + beta * (1 - alpha)) / dd) / w ** (w / dd)
        constants.update({"K2": K2, "branch": "G2"})

        def obj(k):
            pen = K2 * hCL(k) ** (w / dd) / (k * drift) ** ((1 + beta * (1 - alpha)) / dd)
            gap = k * thr - pen
            return gap if gap > MARGIN else -math.inf

        try:
            k_opt, best, utrace = log_grid_optimize(obj, maximize=True)
        except EmptyFeasibleSet as exc:
            raise EmptyG("the set G2 is empty on the search grid") from exc
        upper = -best
        constants["t_upper"] = (k_opt * v).tolist()
        optimizer["t_trace"] = utrace
    exact, notes = None, []
    if A.dim == 1 and v[0] == 1.0 and thr == 1.0:
        xi = float(hp.zeta(np.array([1.0])))
        m0 = float(mu[0])
        p1 = beta * (w + alpha - 1) - 1
        p2 = 1 + beta * (1 - alpha)
        cand = (
            -(p1 ** (-p1 / (w * (beta - 1))) / p2 ** (p2 / (w * (beta - 1))))
            * (beta - 1)
            * (w**beta / (xi * C)) ** (1.0 / (beta - 1))
            * m0 ** (p2 / (w * (beta - 1)))
        )
        constants["explicit"] = cand
        if _agrees(cand, lower) and _agrees(cand, upper):
            exact = cand
        else:
            notes.append("explicit limit differs from the bracket; not reported as exact")
    return RuinAsymptote(lower, upper, "R4", exact, constants, optimizer, True, tuple(notes))


# ---------------------------------------------------------------------------
# bounds from the scaled cumulants g_n
# ---------------------------------------------------------------------------


def ruin_asymptote(fam: CoefficientFamily, model: InnovationModel, reg: RegimeSpec, mu, A: TargetSet) -> RuinAsymptote:
    """Route to the ruin bounds that belong to the regime tag."""
    tag = reg.tag
    if tag in ("S1", "S2"):
        return ruin_cramer_bounds(fam, model, A, mu)
    if tag in ("S3", "S4"):
        short_family_check(fam)
        if tag == "S3":
            return ruin_gaussian_bounds(reg, model, mu, A)
        return ruin_heavy_bounds(reg, model, mu, A)
    if tag in ("R1", "R2"):
        return ruin_lm_bounds(reg, fam, model, mu, A)
    if tag == "R3":
        return ruin_lm_gaussian_bounds(reg, model, mu, A)
    return ruin_lm_heavy_bounds(reg, model, mu, A)


def nyrhinen_bounds(
    g_n: Callable,
    A: TargetSet,
    search_box: tuple[float, float] = (1e-4, 1e4),
    *,
    n_grid=None,
    n_max: int = 10_000,
) -> NyrhinenBounds:
    """Upper and lower ruin exponents from g_n(t) = log E exp(t.Y_n) / n.

    ``g_n(t, n)`` is called with tilts along the set normal; its limit is
    estimated by Richardson extrapolation over the two largest ``n`` in
    ``n_grid``.
    """
    v, thr = A.v, A.threshold
    if thr <= 0:
        return NyrhinenBounds(-0.0, -math.inf, 0.0, 0.0, False, True)
    if n_grid is None:
        n_grid = np.unique(np.geomspace(1, n_max, 16).astype(int))
    n_grid = np.asarray(sorted(set(int(n) for n in n_grid)))
    n1, n2 = int(n_grid[-2]), int(n_grid[-1])
    d = A.dim

    def tilt(k):
        return k * v if d > 1 else float(k * v[0])

    def g(k):
        try:
            a1 = float(g_n(tilt(k), n1))
            a2 = float(g_n(tilt(k), n2))
        except ArithmeticError:
            return math.inf
        if not (math.isfinite(a1) and math.isfinite(a2)):
            return math.inf
        return (n2 * a2 - n1 * a1) / (n2 - n1)

    def finite_all(k):
        for n in n_grid:
            try:
                val = float(g_n(tilt(k), int(n)))
            except ArithmeticError:
                return False
            if not math.isfinite(n * val):
                return False
        return True

    def in_D(k):
        gv = g(k)
        return math.isfinite(gv) and gv < -MARGIN and finite_all(k)

    lo, hi = search_box
    grid = np.logspace(math.log10(lo), math.log10(hi), 8 * int(round(math.log10(hi / lo))) + 1)
    inside = [in_D(float(k)) for k in grid]
    if not any(inside):
        raise NoNegativeG("no tilt with g(t) < 0 found in the search box")
    last = max(k for k, ok in enumerate(inside) if ok)
    certified = True
    if last == len(grid) - 1:
        kappa_bar = float(grid[-1])
        certified = False
    else:
        kappa_bar = _set_edge(g, in_D, float(grid[last]), float(grid[last + 1]))
    upper = -kappa_bar * thr

    def lower_obj(k):
        gv = g(k)
        if not math.isfinite(gv):
            return -math.inf
        h = 1e-5 * max(1.0, k)
        gp, gm = g(k + h), g(k - h)
        if not (math.isfinite(gp) and math.isfinite(gm)):
            return -math.inf
        dg = (gp - gm) / (2 * h)
        if dg <= MARGIN:
            return -math.inf
        eta = thr / dg
        return eta * (gv - k * dg)

    try:
        k_low, lower, _ = log_grid_optimize(lower_obj, lo, hi, per_decade=16, maximize=True)
    except EmptyFeasibleSet:
        k_low, lower = 0.0, -math.inf
    lower = min(lower, upper)
    return NyrhinenBounds(upper, lower, kappa_bar, k_low, certified, False)
