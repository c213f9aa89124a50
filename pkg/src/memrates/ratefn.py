"""Transform-level quantities: cumulants, convex conjugates, the
memory-deformed cumulant Lambda_alpha, the kernel constants C_{alpha,beta},
the heavy profile Lambda^h, the tilt regions Pi / Pi_alpha and the regime
speeds.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize

from .errors import (
    DivergentTerm,
    EmptyRegion,
    InvalidParameter,
    MissingHeavyProfile,
    RegimeMismatch,
    Undecidable,
    UnsupportedDimension,
)
from .model import (
    BalancedPower,
    CoefficientFamily,
    FiniteLag,
    Gaussian,
    InnovationModel,
    LimitProfile,
    RegimeSpec,
)
from .quadrature import integrate

__all__ = [
    "ConjugateResult",
    "KernelG",
    "PiRegion",
    "Speed",
    "log_mgf",
    "legendre",
    "conjugate",
    "kernel_integral",
    "lambda_alpha",
    "lambda_h",
    "gaussian_part",
    "regime_cumulant",
    "pi_region",
    "speed_sequence",
    "coefficient_cumulant",
    "finite_n_mgf_sum",
]


def log_mgf(model: InnovationModel, t):
    """Lambda(t) with +inf outside the domain; scalars stay scalars."""
    out = model.log_mgf(t)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# convex conjugates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConjugateResult:
    value: float
    argmax: float | np.ndarray
    converged: bool
    iterations: int


_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def _scalar(f, lam):
    with np.errstate(all="ignore"):
        val = float(f(lam))
    return val if not math.isnan(val) else math.inf


def _golden_max(h, a, b, tol, max_iter=400):
    """Maximise a unimodal h on [a, b]; returns (argmax, value, iterations)."""
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    hc, hd = h(c), h(d)
    it = 0
    while abs(b - a) > tol * max(1.0, abs(c)) and it < max_iter:
        it += 1
        if hc >= hd:
            b, d, hd = d, c, hc
            c = b - _GOLD * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + _GOLD * (b - a)
            hd = h(d)
    cands = [(hc, c), (hd, d), (h(a), a), (h(b), b)]
    best = max(cands, key=lambda p: p[0])
    return best[1], best[0], it


def _legendre_1d(f, x, lo, hi, grad, tol):
    x = float(x)

    def h(lam):
        val = _scalar(f, lam)
        return -math.inf if math.isinf(val) and val > 0 else lam * x - val

    l0 = min(max(0.0, lo), hi)
    h0 = h(l0)
    if not math.isfinite(h0):
        raise InvalidParameter("convex function must be finite at the origin of the region")
    # direction of ascent
    probe = 1e-7
    up = h(min(l0 + probe, hi)) if hi > l0 else -math.inf
    down = h(max(l0 - probe, lo)) if lo < l0 else -math.inf
    if grad is not None:
        slope = x - float(grad(l0))
        direction = 1.0 if slope > 0 else (-1.0 if slope < 0 else 0.0)
        if direction > 0 and hi <= l0:
            direction = 0.0
        if direction < 0 and lo >= l0:
            direction = 0.0
    else:
        direction = 1.0 if up > h0 else (-1.0 if down > h0 else 0.0)
    iterations = 0
    if direction == 0.0:
        a, b = max(l0 - probe, lo), min(l0 + probe, hi)
    else:
        bound = hi if direction > 0 else lo
        prev, best, hbest = l0, l0, h0
        step = 1.0
        while True:
            iterations += 1
            cand = l0 + direction * step
            if (direction > 0 and cand >= bound) or (direction < 0 and cand <= bound):
                cand = bound
            hc = h(cand)
            if hc > hbest:
                prev, best, hbest = best, cand, hc
                if cand == bound:
                    a, b = sorted((prev, bound))
                    break
                if abs(cand) > 1e15:
                    return ConjugateResult(math.inf, direction * math.inf, True, iterations)
                step *= 2.0
            else:
                a, b = sorted((prev, cand))
                break
    lam, val, it = _golden_max(h, a, b, tol)
    iterations += it
    # polish with the stationarity equation when a derivative is supplied
    if grad is not None and a < lam < b:
        delta = 1e-6 * max(1.0, abs(lam))
        left, right = max(a, lam - delta), min(b, lam + delta)
        with np.errstate(all="ignore"):
            ga, gb = x - float(grad(left)), x - float(grad(right))
        if np.isfinite(ga) and np.isfinite(gb) and ga > 0 > gb:
            root = optimize.brentq(lambda s: x - float(grad(s)), left, right, xtol=1e-15, rtol=1e-15)
            hr = h(root)
            if hr >= val - 1e-15 * max(1.0, abs(val)):
                lam, val = root, max(hr, val)
    for edge in (lo, hi):
        if math.isfinite(edge) and abs(lam - edge) <= 10 * tol * max(1.0, abs(edge)):
            he = h(edge)
            if he >= val - 1e-15 * max(1.0, abs(val)):
                lam, val = edge, max(he, val)
    # smallest-norm maximiser on flat stretches
    if lam != l0:
        slack = 1e-14 * max(1.0, abs(val))
        if h(l0) >= val - slack:
            lam = l0
        elif h(lam - math.copysign(1e-4 * max(1.0, abs(lam - l0)), lam - l0)) >= val - slack:
            inner, outer = l0, lam
            for _ in range(80):
                mid = 0.5 * (inner + outer)
                if h(mid) >= val - slack:
                    outer = mid
                else:
                    inner = mid
            lam = outer
    val = max(val, h0)
    return ConjugateResult(val, lam, True, iterations)


def _fd_grad(f, lam, eps=1e-6):
    d = lam.size
    g = np.empty(d)
    for k in range(d):
        e = np.zeros(d)
        step = eps * max(1.0, abs(lam[k]))
        e[k] = step
        g[k] = (float(f(lam + e)) - float(f(lam - e))) / (2 * step)
    return g


def _fd_hess(grad, lam, eps=1e-5):
    d = lam.size
    H = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        step = eps * max(1.0, abs(lam[k]))
        e[k] = step
        H[:, k] = (grad(lam + e) - grad(lam - e)) / (2 * step)
    return 0.5 * (H + H.T)


def _legendre_nd(f, x, region, grad, hess, max_iter=200):
    x = np.asarray(x, dtype=float)
    d = x.size

    def h(lam):
        val = _scalar(f, lam)
        return -math.inf if val == math.inf else float(lam @ x) - val

    if region is not None:
        bounds = [(None if not math.isfinite(lo) else lo, None if not math.isfinite(hi) else hi) for lo, hi in region]
        for lo, hi in region:
            if lo > hi:
                raise EmptyRegion("constraint region is empty")
        start = np.array([min(max(0.0, lo), hi) for lo, hi in region])

        def obj(lam):
            val = h(lam)
            return 1e300 if not math.isfinite(val) else -val

        res = optimize.minimize(obj, start, method="L-BFGS-B", bounds=bounds, options={"ftol": 1e-15, "gtol": 1e-11})
        return ConjugateResult(-float(res.fun), res.x, bool(res.success), int(res.nit))

    gfun = (lambda lam: np.asarray(grad(lam), dtype=float)) if grad is not None else (lambda lam: _fd_grad(f, lam))
    hfun = (lambda lam: np.asarray(hess(lam), dtype=float)) if hess is not None else (lambda lam: _fd_hess(gfun, lam))
    lam = np.zeros(d)
    val = h(lam)
    for it in range(1, max_iter + 1):
        r = x - gfun(lam)
        if np.linalg.norm(r) <= 1e-10 * max(1.0, np.linalg.norm(x)):
            return ConjugateResult(val, lam, True, it)
        H = hfun(lam)
        try:
            step = np.linalg.solve(H + 1e-14 * np.eye(d), r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, r, rcond=None)[0]
        if not np.all(np.isfinite(step)) or float(step @ r) <= 0:
            step = r
        t = 1.0
        while t > 1e-12:
            cand = lam + t * step
            hc = h(cand)
            if math.isfinite(hc) and hc >= val:
                break
            t *= 0.5
        else:
            return ConjugateResult(val, lam, False, it)
        lam, val = cand, hc
        if np.linalg.norm(lam) > 1e12:
            return ConjugateResult(math.inf, lam, True, it)
    return ConjugateResult(val, lam, False, max_iter)


def legendre(
    f: Callable,
    x,
    region=None,
    *,
    grad: Callable | None = None,
    hess: Callable | None = None,
    tol: float = 1e-12,
) -> ConjugateResult:
    """sup over lambda (in ``region`` if given) of lambda.x - f(lambda).

    In one dimension ``region`` is a pair ``(lo, hi)``; in higher dimension
    it is a list of per-coordinate bounds. ``f`` must be convex and finite
    at the point of the region nearest the origin.
    """
    xa = np.asarray(x, dtype=float)
    if xa.size == 1:
        lo, hi = (-math.inf, math.inf) if region is None else (float(region[0]), float(region[1]))
        if lo > hi:
            raise EmptyRegion(f"region [{lo}, {hi}] is empty")
        return _legendre_1d(f, float(xa.ravel()[0]), lo, hi, grad, tol)
    return _legendre_nd(f, xa, region, grad, hess)


def conjugate(model: InnovationModel, x, region=None) -> ConjugateResult:
    """Lambda*(x) (or the region-restricted conjugate) for an innovation model."""
    if model.dim == 1:
        return legendre(model.log_mgf, x, region, grad=model.grad)
    grad = model.grad if isinstance(model, Gaussian) else None
    hess = model.hess if isinstance(model, Gaussian) else None
    return legendre(model.log_mgf, x, region, grad=grad, hess=(lambda t: hess(t)) if hess else None)


# ---------------------------------------------------------------------------
# the long-memory kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelG:
    """g(x) = (1-alpha) * int_x^{x+1} |y|^-alpha (p 1{y>=0} + q 1{y<0}) dy."""

    alpha: float
    p: float = 1.0

    def __post_init__(self):
        if not 0.5 < self.alpha <= 1.0:
            raise InvalidParameter(f"kernel needs alpha in (1/2, 1], got {self.alpha}")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameter(f"p={self.p} must lie in [0, 1]")

    @classmethod
    def of(cls, fam: BalancedPower) -> "KernelG":
        return cls(fam.alpha, fam.p)

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def _h(self, x):
        # (x+1)^(1-a) - x^(1-a) for x >= 0, written to avoid cancellation
        x = np.asarray(x, dtype=float)
        e = 1.0 - self.alpha
        out = np.empty_like(x)
        small = x < 1.0
        out[small] = (x[small] + 1.0) ** e - x[small] ** e
        xb = x[~small]
        out[~small] = xb**e * np.expm1(e * np.log1p(1.0 / xb))
        return out

    def _mid(self, x):
        e = 1.0 - self.alpha
        return self.q * (-x) ** e + self.p * (x + 1.0) ** e

    def g(self, x):
        x = np.asarray(x, dtype=float)
        if self.alpha == 1.0:
            return np.where((x > -1.0) & (x < 0.0), 1.0, 0.0)
        out = np.zeros_like(x)
        right = x >= 0
        left = x <= -1
        mid = ~(right | left)
        out[right] = self.p * self._h(x[right])
        out[left] = self.q * self._h(-x[left] - 1.0)
        out[mid] = self._mid(x[mid])
        return out

    @property
    def argmax(self) -> float:
        if self.alpha == 1.0:
            return -0.5
        if self.p == 0.0:
            return -1.0
        if self.q == 0.0:
            return 0.0
        r = (self.q / self.p) ** (1.0 / self.alpha)
        return -r / (1.0 + r)

    @property
    def gmax(self) -> float:
        if self.alpha == 1.0:
            return 1.0
        return float(self._mid(np.asarray(self.argmax)))


_MESHES: dict = {}
_MESH_LOCK = threading.Lock()


def _kernel_quad(kern: KernelG, F, rho: float, key, tol: float) -> float:
    """int F(g(x)) dx with F(s) = O(s**rho) at 0; +inf when it diverges."""
    a = kern.alpha
    if a * rho <= 1.0:
        return math.inf
    kappa = 1.0 / (a * rho - 1.0)
    pieces = []
    if kern.p > 0 or kern.q > 0:

        def near(x, kern=kern):
            hx = kern._h(x)
            return F(kern.p * hx) + F(kern.q * hx)

        def far(s, kern=kern, kappa=kappa):
            s = np.asarray(s, dtype=float)
            x = s ** (-kappa)
            hx = kern._h(x)
            jac = kappa * s ** (-kappa - 1.0)
            return (F(kern.p * hx) + F(kern.q * hx)) * jac

        x_star = kern.argmax
        pieces.append(("near", near, 0.0, 1.0))
        pieces.append(("far", far, 0.0, 1.0))
        if -1.0 < x_star < 0.0:
            pieces.append(("midL", lambda x: F(kern._mid(x)), -1.0, x_star))
            pieces.append(("midR", lambda x: F(kern._mid(x)), x_star, 0.0))
        else:
            pieces.append(("mid", lambda x: F(kern._mid(x)), -1.0, 0.0))
    # absolute floor on the scale of the integrand at the kernel's peak
    with np.errstate(over="ignore", invalid="ignore"):
        peak = float(np.abs(np.asarray(F(np.array([kern.gmax])), dtype=float)).ravel()[0])
    atol = 1e-4 * tol * peak if math.isfinite(peak) and peak > 0 else 1e-4 * tol
    total = 0.0
    for name, fn, lo, hi in pieces:
        mkey = (kern.alpha, kern.p, rho, name, key)
        with _MESH_LOCK:
            mesh = _MESHES.get(mkey)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            res = integrate(fn, lo, hi, atol=atol, rtol=tol, mesh=mesh)
        if not math.isfinite(res.value):
            return math.inf if res.value > 0 or math.isnan(res.value) else res.value
        if mesh is None:
            with _MESH_LOCK:
                _MESHES[mkey] = res.mesh
        total += res.value
    return total


def kernel_integral(kern: KernelG, beta: float, tol: float = 1e-12) -> float:
    """C_{alpha,beta} = int g(x)**beta dx (1 exactly when alpha = 1)."""
    if not beta > 1.0:
        raise InvalidParameter(f"beta must exceed 1, got {beta}")
    if kern.alpha == 1.0:
        return 1.0
    return _kernel_quad(kern, lambda s: np.abs(s) ** beta, beta, ("C", beta), tol)


def _vanishing_order(model: InnovationModel) -> float | None:
    """Order rho with Lambda(s) ~ s**rho at the origin; None if Lambda == 0."""
    if isinstance(model, LimitProfile):
        return model.beta
    cov = np.atleast_2d(model.covariance())
    if not np.any(cov):
        return None
    return 2.0


def lambda_alpha(model: InnovationModel, kern: KernelG, lam, tol: float = 1e-10) -> float:
    """Lambda_alpha(lam) = int Lambda(lam g(x)) dx; Lambda itself when alpha = 1."""
    lam = np.asarray(lam, dtype=float)
    if kern.alpha == 1.0:
        return float(model.log_mgf(lam))
    if not np.any(lam):
        return 0.0
    rho = _vanishing_order(model)
    if rho is None:
        return 0.0
    if model.dim == 1:
        lv = float(lam)
        if float(model.log_mgf(lv * kern.gmax)) == math.inf or float(model.log_mgf(lv * min(kern.p, kern.q))) == math.inf:
            return math.inf

        def F(s):
            return model.log_mgf(lv * s)

    else:
        if float(model.log_mgf(lam * kern.gmax)) == math.inf:
            return math.inf

        def F(s):
            s = np.asarray(s, dtype=float)
            return model.log_mgf(s[..., None] * lam)

    return _kernel_quad(kern, F, rho, ("L", model.law), tol)


def lambda_h(model: InnovationModel, lam) -> float:
    """Lambda^h(lam) = zeta(lam/|lam|) |lam|**beta."""
    hp = model.heavy_profile
    if hp is None:
        raise MissingHeavyProfile(f"{model.law} has no heavy profile")
    lam = np.asarray(lam, dtype=float)
    if model.dim == 1:
        r = abs(float(lam))
        if r == 0.0:
            return 0.0
        return float(hp.zeta(np.array([math.copysign(1.0, float(lam))]))) * r**hp.beta
    r = float(np.linalg.norm(lam))
    if r == 0.0:
        return 0.0
    return float(hp.zeta(lam / r)) * r**hp.beta


def gaussian_part(model: InnovationModel) -> Gaussian:
    """The centred Gaussian sharing the innovations' covariance."""
    return Gaussian(model.covariance() if model.dim > 1 else float(np.asarray(model.covariance()).ravel()[0]))


def regime_cumulant(model: InnovationModel, reg: RegimeSpec) -> Callable:
    """The limiting cumulant whose conjugate is the regime's rate function."""
    tag = reg.tag
    if tag in ("S1", "S2"):
        return model.log_mgf
    if tag == "S3":
        return gaussian_part(model).log_mgf
    if tag == "S4":
        return lambda t: lambda_h(model, t)
    kern = KernelG.of(reg.family)
    if tag in ("R1", "R2"):
        return lambda t: lambda_alpha(model, kern, t)
    if tag == "R3":
        C = kernel_integral(kern, 2.0)
        G = gaussian_part(model)
        return lambda t: C * float(G.log_mgf(t))
    C = kernel_integral(kern, model.heavy_profile.beta if model.heavy_profile else reg.beta)
    return lambda t: C * lambda_h(model, t)


# ---------------------------------------------------------------------------
# tilt regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiRegion:
    """Open interval (lo, hi) of admissible tilts together with its certificate."""

    lo: float
    hi: float
    lam_star: float
    certified: bool
    margin: float
    window_range: tuple[float, float]
    finite_n_range: tuple[float, float] | None = None
    note: str = ""

    def contains(self, lam) -> bool:
        return self.lo < lam < self.hi

    @property
    def interval(self) -> tuple[float, float]:
        return self.lo, self.hi


def _interval_for_windows(dom, w_lo, w_hi):
    a, b = dom
    lo, hi = -math.inf, math.inf
    for w in (w_lo, w_hi):
        if w > 0:
            lo = max(lo, a / w)
            hi = min(hi, b / w)
        elif w < 0:
            lo = max(lo, b / w)
            hi = min(hi, a / w)
    return lo, hi


def _short_window_limits(fam: CoefficientFamily, tail_tol: float = 1e-14):
    """Range of window sums phi_{i,n} for all large n, with an envelope width."""
    total = fam.total()
    if isinstance(fam, FiniteLag):
        left, right = fam.left_right_sums()
        vals = np.concatenate([[0.0, total], left, right])
        return float(vals.min()), float(vals.max()), 0.0
    L = fam.truncation_lag(tail_tol)
    lags, coef = fam.truncated(L)
    left = np.cumsum(coef)
    right = np.cumsum(coef[::-1])
    neg, pos = fam.tail_signed(L)
    vals = np.concatenate([[0.0, total], left, right])
    w_lo = float(min(vals.min(), -neg, total - neg))
    w_hi = float(max(vals.max(), pos, total + pos))
    return w_lo, w_hi, max(neg, pos)


def pi_region(fam: CoefficientFamily, model: InnovationModel, regime="S1", n_max: int = 10_000, tol: float = 1e-9) -> PiRegion:
    """Admissible tilts for the upper rate function under S1 or R1."""
    tag = regime.tag if isinstance(regime, RegimeSpec) else str(regime)
    if model.dim != 1:
        raise UnsupportedDimension("tilt regions are implemented for one-dimensional innovations")
    dom = model.domain()
    if tag == "S1":
        if fam.memory != "short":
            raise RegimeMismatch("S1 needs a short-memory family")
        w_lo, w_hi, tail = _short_window_limits(fam)
        lo, hi = _interval_for_windows(dom, w_lo, w_hi)
        # the envelope may only widen the window range; compare with the unwidened bounds
        lo0, hi0 = _interval_for_windows(dom, min(w_lo + tail, 0.0), max(w_hi - tail, 0.0))
        margin = max(abs(hi0 - hi) if math.isfinite(hi) else 0.0, abs(lo0 - lo) if math.isfinite(lo) else 0.0)
        if margin > tol * max(1.0, abs(hi) if math.isfinite(hi) else 1.0):
            raise Undecidable(f"tail envelope leaves an undecided margin {margin:.3g}", margin)
        # finite-n diagnostic over windows of length up to n_max
        finite = None
        if fam.is_finite:
            lo_lag, hi_lag = fam.lag_range()
            n = int(min(n_max, hi_lag - lo_lag + 2))
            i = np.arange(int(lo_lag) - n - 1, int(hi_lag) + 1)
            vals = np.concatenate([fam.partial_sum(i, k) for k in range(1, n + 1)])
            finite = (float(vals.min()), float(vals.max()))
        return PiRegion(lo, hi, hi, True, margin, (w_lo, w_hi), finite, "limit window sums")
    if tag == "R1":
        if not isinstance(fam, BalancedPower):
            raise RegimeMismatch("R1 needs a BalancedPower family")
        kern = KernelG.of(fam)
        gmax = kern.gmax
        lo, hi = _interval_for_windows(dom, 0.0, gmax)
        lo2, hi2 = _interval_for_windows(dom, 0.0, min(fam.p, fam.q)) if kern.alpha < 1 else (lo, hi)
        lo, hi = max(lo, lo2), min(hi, hi2)
        N = int(n_max)
        i = np.arange(-2 * N, N + 1)
        ratio = fam.partial_sum(i, N) / float(fam.Psi(N))
        finite = (float(ratio.min()), float(ratio.max()))
        margin = abs(finite[1] - gmax)
        return PiRegion(lo, hi, hi, True, margin, (0.0, gmax), finite, "kernel maximum")
    raise RegimeMismatch(f"tilt regions are defined for S1 and R1, not {tag}")


# ---------------------------------------------------------------------------
# speeds and finite-n sums
# ---------------------------------------------------------------------------


class Speed(NamedTuple):
    b: np.ndarray | float
    c: np.ndarray | float | None


def speed_sequence(reg: RegimeSpec, n) -> Speed:
    """b_n (and c_n for the heavy regimes) as exact representatives."""
    b = reg.b(n)
    c = reg.c(n)
    if np.ndim(n) == 0:
        b = float(b)
        c = None if c is None else float(c)
    return Speed(b, c)


_CHUNK = 1 << 20


def _window_index_range(fam: CoefficientFamily, n: int, k_n: int) -> tuple[int, int]:
    lo_lag, hi_lag = fam.lag_range()
    lo = -k_n if not math.isfinite(lo_lag) else max(-k_n, int(lo_lag) - n)
    hi = k_n if not math.isfinite(hi_lag) else min(k_n, int(hi_lag) - 1)
    return lo, hi


def default_window(fam: CoefficientFamily, n: int) -> int:
    if fam.is_finite:
        lo, hi = fam.lag_range()
        return int(max(abs(lo), abs(hi))) + n + 1
    if fam.memory == "short":
        return max(n * n, fam.truncation_lag(1e-12) + n + 1)
    return n * n


def coefficient_cumulant(fam: CoefficientFamily, model: InnovationModel, t, n: int, k_n: int | None = None) -> float:
    """sum over |i| <= k_n of Lambda(t * phi_{i,n})."""
    n = int(n)
    if k_n is None:
        k_n = default_window(fam, n)
    lo, hi = _window_index_range(fam, n, int(k_n))
    t = np.asarray(t, dtype=float)
    total = 0.0
    start = lo
    while start <= hi:
        stop = min(hi, start + _CHUNK - 1)
        i = np.arange(start, stop + 1, dtype=np.int64)
        w = fam.partial_sum(i, n)
        arg = w * float(t) if model.dim == 1 else w[:, None] * t
        vals = model.log_mgf(arg)
        if not np.all(np.isfinite(vals)):
            raise DivergentTerm(f"cumulant is infinite for some window at n={n}")
        total += float(np.sum(vals))
        start = stop + 1
    return total


def finite_n_mgf_sum(fam, model, reg: RegimeSpec, lam, n: int, k_n: int | None = None) -> float:
    """(1/b_n) * sum_{|i| <= k_n} Lambda((b_n/a_n) lam phi_{i,n})."""
    b = float(reg.b(n))
    a = float(reg.a(n))
    return coefficient_cumulant(fam, model, (b / a) * np.asarray(lam, dtype=float), n, k_n) / b
