"""The acceptance suite: ten end-to-end checks with fixed seeds and tolerances.

Each criterion returns a :class:`CriterionResult`; :func:`run_suite` prints
one PASS/FAIL line per criterion. The command ``memrates verify`` and the
test module both go through here.

Two conventions deserve a note. A fitted Monte Carlo slope cannot land
inside a bracket of zero width, so "inside [lower, upper]" is judged with
three regression standard errors of slack on each side. The long-memory
checks are directional, as finite-n corrections swamp the limiting
constants at any affordable path length.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .limits import (
    nyrhinen_bounds,
    ruin_cramer_bounds,
    ruin_gaussian_bounds,
    ruin_lm_gaussian_bounds,
    table1_theta,
    table2_theta,
)
from .model import BalancedPower, FiniteLag, Gaussian, RegimeSpec, TargetSet, TwoSidedDiscrete
from .ratefn import KernelG, finite_n_mgf_sum, kernel_integral, lambda_alpha
from .ruin import RuinSpec, g_function, ruin_decay_fit, ruin_is, ruin_mc_grid
from .segments import first_hitting_T, growth_statistic, longest_strange_segment_exact, longest_strange_segment_fast
from .simulate import PathConfig, sample_path, sample_paths

SE_SLACK = 3.0
IID = FiniteLag(((0, 1.0),))
MA2 = FiniteLag(((0, 0.5), (1, 0.5)))
HALF_LINE = TargetSet.half_line(1.0)


@dataclass(frozen=True)
class CriterionResult:
    number: str
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number}: {self.title} | {self.detail} ({self.seconds:.1f} s)"


def _timed(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(threads: int = 1) -> CriterionResult:
            t0 = time.perf_counter()
            passed, detail = fn(threads)
            return CriterionResult(number, title, bool(passed), detail, time.perf_counter() - t0)

        return run

    return wrap


def _inside(slope: float, se: float, lo: float, hi: float) -> bool:
    pad = SE_SLACK * se
    return lo - pad <= slope <= hi + pad


@functools.lru_cache(maxsize=None)
def _tilted_fit(fam: FiniteLag, threads: int):
    spec = RuinSpec(fam, Gaussian(1.0), RegimeSpec("S1"), 0.5, HALF_LINE)
    t0 = time.perf_counter()
    est = [ruin_is(spec, float(u), 100_000, seed=1, threads=threads) for u in range(4, 13)]
    fit = ruin_decay_fit(est, spec.regime)
    return fit, time.perf_counter() - t0


@_timed("1", "Cramer slope, i.i.d. Gaussian, tilted Monte Carlo")
def criterion_1(threads):
    fit, secs = _tilted_fit(IID, threads)
    ok = abs(fit.slope + 1.0) <= 0.1 and secs < 60.0
    return ok, f"slope {fit.slope:.5f} (se {fit.slope_se:.1e}), target -1 +/- 10%, {secs:.1f} s of 60"


@_timed("2", "short-memory moving average keeps the i.i.d. slope")
def criterion_2(threads):
    fit, _ = _tilted_fit(MA2, threads)
    iid, _ = _tilted_fit(IID, threads)
    bounds = ruin_cramer_bounds(MA2, Gaussian(1.0), HALF_LINE, 0.5)
    inside = _inside(fit.slope, fit.slope_se, bounds.lower, bounds.upper)
    close = abs(fit.slope / iid.slope - 1.0) <= 0.15
    return inside and close, (
        f"slope {fit.slope:.5f} (se {fit.slope_se:.1e}) vs bracket [{bounds.lower:.6f}, {bounds.upper:.6f}]"
        f" with {SE_SLACK:g} se slack; ratio to i.i.d. {fit.slope / iid.slope:.4f}"
    )


@_timed("3", "segment growth R_m / log m, i.i.d. Gaussian, m = 1e6")
def criterion_3(threads):
    m = 10**6
    t0 = time.perf_counter()
    cfg = PathConfig(m, IID, Gaussian(1.0), seed=3)
    paths = sample_paths(cfg, 20, threads=threads)
    table = growth_statistic(paths, HALF_LINE, m_grid=[m])
    secs = time.perf_counter() - t0
    mean = float(table.mean[0])
    return 1.5 <= mean <= 2.5 and secs < 90.0, f"mean {mean:.4f} (std {table.std[0]:.3f}), window [1.5, 2.5], {secs:.1f} s of 90"


@_timed("4", "kernel quadrature: Gaussian Lambda_alpha against C_{alpha,2}")
def criterion_4(threads):
    G = Gaussian(1.0)
    worst = 0.0
    for alpha in (0.6, 0.75, 0.9, 1.0):
        kern = KernelG(alpha, 1.0)
        c2 = kernel_integral(kern, 2.0)
        for lam in (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0):
            worst = max(worst, abs(lambda_alpha(G, kern, lam) / (0.5 * lam * lam) - c2))
    ones = [kernel_integral(KernelG(1.0, 1.0), beta) for beta in (1.5, 2.0, 3.0)]
    return worst < 1e-6 and all(c == 1.0 for c in ones), f"max deviation {worst:.2e} (< 1e-6); C_(1,beta) = {ones}"


@_timed("5", "finite-n coefficient sum approaches Lambda_alpha")
def criterion_5(threads):
    fam = BalancedPower(0.75, 1.0)
    G = Gaussian(1.0)
    got = finite_n_mgf_sum(fam, G, RegimeSpec("R2", family=fam), 1.0, 10_000)
    want = lambda_alpha(G, KernelG(0.75, 1.0), 1.0)
    rel = abs(got / want - 1.0)
    return rel < 0.02, f"n = 1e4: {got:.6f} vs Lambda_alpha(1) = {want:.6f}, relative gap {rel:.4f} (< 0.02)"


@_timed("6", "closed forms agree where their regimes meet")
def criterion_6(threads):
    G = Gaussian(1.0)
    cramer = ruin_cramer_bounds(IID, G, HALF_LINE, 0.5).exact
    s3 = ruin_gaussian_bounds(RegimeSpec("S3", 1.0), G, 0.5, HALF_LINE).exact
    e1 = abs(s3 / cramer - 1.0)
    r3 = RegimeSpec("R3", 1.0, family=BalancedPower(0.75, 1.0))
    e2 = 0.0
    for w in (0.6, 0.75, 0.9, 1.0):
        lm = ruin_lm_gaussian_bounds(r3, G, 0.5, HALF_LINE, alpha=1.0, omega=w).exact
        sm = ruin_gaussian_bounds(RegimeSpec("S3", w), G, 0.5, HALF_LINE).exact
        e2 = max(e2, abs(lm / sm - 1.0))
    exps = []
    for beta in (Fraction(3, 2), Fraction(2), Fraction(3)):
        for w in (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3)):
            exps.append(table2_theta("long", w, 1, beta) == (beta * w - 1) / (w * (beta - 1)))
    ok = e1 < 1e-10 and e2 < 1e-10 and all(exps)
    return ok, f"Gaussian power vs Cramer {e1:.1e}; long memory at alpha=1 vs short {e2:.1e}; heavy exponents exact: {all(exps)}"


def _reference_table(alpha: Fraction, beta: Fraction, w: Fraction):
    """Both tables written out row by row, as an independent reference."""
    if w <= Fraction(3, 2) - alpha:
        row = 1
    elif w <= 1:
        row = 2
    elif w <= 2 - alpha:
        row = 3
    else:
        row = 4

    def inv(x):
        return math.inf if x == 0 else 1 / x

    short1 = inv(2 * w - 1) if row <= 2 else (beta - 1) / (beta * w - 1)
    short2 = (2 * w - 1) / w if row <= 2 else (beta * w - 1) / (w * (beta - 1))
    if row == 1:
        long1, long2 = math.inf, Fraction(0)
    elif row in (2, 3):
        long1, long2 = inv(2 * w + 2 * alpha - 3), (2 * w + 2 * alpha - 3) / w
    else:
        long1, long2 = (beta - 1) / (beta * (w + alpha - 1) - 1), (beta * (w + alpha - 1) - 1) / (w * (beta - 1))
    return {("1", "short"): short1, ("1", "long"): long1, ("2", "short"): short2, ("2", "long"): long2}


def table_omegas(alpha: Fraction) -> list[Fraction]:
    """Row boundaries and interior points of both tables for one alpha."""
    edges = [Fraction(1, 2), Fraction(3, 2) - alpha, Fraction(1), 2 - alpha, Fraction(3)]
    mids = [(a + b) / 2 for a, b in zip(edges, edges[1:])]
    return sorted(set(edges + mids + [Fraction(2)]))


@_timed("7", "exponent tables, exact rational cells")
def criterion_7(threads):
    checked = bad = 0
    for alpha in (Fraction(3, 5), Fraction(3, 4), Fraction(9, 10)):
        for beta in (Fraction(3, 2), Fraction(2), Fraction(3)):
            for w in table_omegas(alpha):
                want = _reference_table(alpha, beta, w)
                for (tab, memory), value in want.items():
                    fn = table1_theta if tab == "1" else table2_theta
                    checked += 1
                    bad += fn(memory, w, alpha, beta) != value
    return bad == 0, f"{checked} cells, {bad} mismatches"


def _random_instance(rng: np.random.Generator):
    m = int(rng.integers(1, 400))
    kind = rng.integers(3)
    if kind == 0:
        x = rng.standard_normal(m)
    elif kind == 1:
        # integer steps produce ties, which separate open from closed sets
        x = rng.integers(-2, 3, size=m).astype(float)
    else:
        z = rng.standard_normal(m + 2)
        x = 0.5 * z[2:] + 0.3 * z[1:-1] + 0.2 * z[:-2]
    y = float(rng.choice([0.0, 0.25, 0.5, 1.0, 2.0]) if kind == 1 else rng.uniform(-0.5, 2.0))
    return x, TargetSet.half_line(y, closed=bool(rng.integers(2)))


@_timed("8", "exact and fast segment algorithms; R_m / T_r duality")
def criterion_8(threads):
    rng = np.random.default_rng(8)
    mismatches = 0
    for _ in range(1000):
        x, A = _random_instance(rng)
        mismatches += longest_strange_segment_exact(x, A)[0] != longest_strange_segment_fast(x, A)[0]
    violations = 0
    model = TwoSidedDiscrete((-1.0, 0.0, 1.0), (0.3, 0.4, 0.3))
    for k in range(200):
        cfg = PathConfig(150, MA2 if k % 2 else IID, model if k % 3 == 0 else Gaussian(1.0), seed=8, path_index=k)
        path = sample_path(cfg)
        # dyadic thresholds keep exact ties exact in both routes
        A = TargetSet.half_line(0.25 + 0.125 * (k % 7), closed=bool(k % 2))
        for m in (10, 40, 75, 150):
            R = longest_strange_segment_exact(path.values[:m], A)[0]
            for r in range(1, m + 1):
                try:
                    T = first_hitting_T(path.values[:m], A, r=r)
                except ArithmeticError:
                    T = math.inf
                violations += (R >= r) != (T <= m)
    return mismatches == 0 and violations == 0, f"1000 instances, {mismatches} mismatches; 200 paths, {violations} duality violations"


@_timed("9", "general ruin bounds: i.i.d. exact, moving average brackets the simulated slope")
def criterion_9(threads):
    G = Gaussian(1.0)
    iid = nyrhinen_bounds(g_function(RuinSpec(IID, G, RegimeSpec("S1"), 0.5, HALF_LINE)), HALF_LINE)
    ma = nyrhinen_bounds(g_function(RuinSpec(MA2, G, RegimeSpec("S1"), 0.5, HALF_LINE)), HALF_LINE)
    fit, _ = _tilted_fit(MA2, threads)
    exact = abs(iid.upper + 1.0) < 1e-8 and abs(iid.lower + 1.0) < 1e-8
    inside = _inside(fit.slope, fit.slope_se, ma.lower, ma.upper)
    return exact and inside, (
        f"i.i.d. [{iid.lower:.10f}, {iid.upper:.10f}]; moving average [{ma.lower:.6f}, {ma.upper:.6f}]"
        f" vs slope {fit.slope:.5f} (se {fit.slope_se:.1e})"
    )


@_timed("10a", "long memory: ruin decays like exp(-c u^(1/2)), slower than short memory")
def criterion_10a(threads):
    fam = BalancedPower(0.75, 1.0)
    reg = RegimeSpec("R3", 1.0, family=fam)
    theta = float(table2_theta("long", 1, Fraction(3, 4)))
    us = [2.0, 3.0, 4.0, 5.0, 6.0]
    long_spec = RuinSpec(fam, Gaussian(1.0), reg, 1.0, HALF_LINE)
    long_est = ruin_mc_grid(long_spec, us, 20_000, seed=10, threads=threads)
    fit = ruin_decay_fit(long_est, reg, regressor=lambda u: u**theta)
    per_u_long = ruin_decay_fit(long_est, reg, regressor=lambda u: u)
    # short-memory comparison with the same one-step variance
    var = float(np.sum(PathConfig(1, fam, Gaussian(1.0)).coefficients() ** 2))
    short_spec = RuinSpec(IID, Gaussian(var), RegimeSpec("S1"), 1.0, HALF_LINE)
    short_est = ruin_mc_grid(short_spec, us, 20_000, seed=10, threads=threads)
    per_u_short = ruin_decay_fit(short_est, short_spec.regime, regressor=lambda u: u)
    ok = fit.r2 > 0.9 and per_u_long.slope > per_u_short.slope
    return ok, (
        f"R^2 against u^{theta:g} = {fit.r2:.4f} (> 0.9); per-u slope {per_u_long.slope:.4f} long"
        f" vs {per_u_short.slope:.4f} short (variance {var:.4f})"
    )


@_timed("10b", "long memory: segment statistic grows with m")
def criterion_10b(threads):
    fam = BalancedPower(0.75, 1.0)
    reg = RegimeSpec("R3", 1.0, family=fam)
    grid = [10**3, 10**4, 10**5, 10**6]
    paths = sample_paths(PathConfig(10**6, fam, Gaussian(1.0), reg, seed=11), 10, threads=threads)
    mean = growth_statistic(paths, HALF_LINE, reg, m_grid=grid).mean
    ok = mean[3] > mean[1] and bool(np.all(np.diff(mean) > 0))
    shown = ", ".join(f"m={m:.0e}: {s:.4f}" for m, s in zip(grid, mean))
    return ok, f"mean statistic {shown}"


CRITERIA = {
    "1": criterion_1,
    "2": criterion_2,
    "3": criterion_3,
    "4": criterion_4,
    "5": criterion_5,
    "6": criterion_6,
    "7": criterion_7,
    "8": criterion_8,
    "9": criterion_9,
    "10a": criterion_10a,
    "10b": criterion_10b,
}


def run_suite(which=None, *, threads: int = 1, echo=print) -> list[CriterionResult]:
    """Run the selected criteria (all by default), echoing one line each."""
    keys = list(CRITERIA) if not which else [str(k) for k in which]
    results = []
    for key in keys:
        res = CRITERIA[key](threads)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
