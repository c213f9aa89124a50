import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import optimize

from memrates.errors import EmptyFeasibleSet, EmptyG, ForbiddenOmega, OutOfRange, RegimeMismatch
from memrates.limits import (
    halfspace_conjugate_inf,
    log_grid_optimize,
    nyrhinen_bounds,
    ruin_asymptote,
    ruin_cramer_bounds,
    ruin_gaussian_bounds,
    ruin_heavy_bounds,
    ruin_lm_bounds,
    ruin_lm_gaussian_bounds,
    ruin_lm_heavy_bounds,
    segment_rate_bounds,
    table1_theta,
    table2_theta,
)
from memrates.model import (
    BalancedPower,
    CenteredExponential,
    FiniteLag,
    Gaussian,
    LimitProfile,
    RegimeSpec,
    TargetSet,
)
from memrates.ratefn import KernelG, kernel_integral
from memrates.ruin import RuinSpec, g_function

IID = FiniteLag(((0, 1.0),))
MA2 = FiniteLag(((0, 0.5), (1, 0.5)))
A1 = TargetSet.half_line(1.0)
C34 = 0.8740191847628567  # C_{3/4,2}, frozen from the kernel oracle in test_ratefn


def outer_inf(fun, lo=1e-6, hi=1e6):
    """Independent minimiser in log c: dense grid, then bounded Brent."""
    xs = np.logspace(math.log10(lo), math.log10(hi), 4001)
    vals = [fun(x) for x in xs]
    k = int(np.argmin(vals))
    a, b = math.log(xs[max(k - 1, 0)]), math.log(xs[min(k + 1, len(xs) - 1)])
    res = optimize.minimize_scalar(lambda s: fun(math.exp(s)), bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-13})
    return res.fun


def test_log_grid_optimize_finds_interior_optimum():
    x, val, trace = log_grid_optimize(lambda x: (math.log(x) - 1.5) ** 2 + 2.0)
    assert x == pytest.approx(math.exp(1.5), rel=1e-6)
    assert val == pytest.approx(2.0, abs=1e-12)
    assert not trace["at_edge"]
    x, val, _ = log_grid_optimize(lambda x: x * math.exp(-x), maximize=True)
    assert x == pytest.approx(1.0, rel=1e-5)
    with pytest.raises(EmptyFeasibleSet):
        log_grid_optimize(lambda x: math.inf)


def test_halfspace_dual_of_a_quadratic():
    f = lambda t: 0.5 * float(np.dot(t, t))
    v = np.array([1.0])
    assert halfspace_conjugate_inf(f, v, 2.0) == pytest.approx(2.0, abs=1e-10)
    assert halfspace_conjugate_inf(f, v, -1.0) == 0.0
    v2 = np.array([1.0, 1.0])
    # inf of |z|^2/2 over v.z >= s is s^2 / (2 |v|^2)
    assert halfspace_conjugate_inf(f, v2, 3.0) == pytest.approx(9.0 / 4.0, abs=1e-9)


# --- segment rates --------------------------------------------------------


def test_segment_rate_gaussian_short_memory():
    rb = segment_rate_bounds(IID, Gaussian(1.0), RegimeSpec("S2"), A1)
    assert rb.lower == pytest.approx(0.5, abs=1e-10)
    assert rb.upper == pytest.approx(0.5, abs=1e-10)
    s1 = segment_rate_bounds(IID, Gaussian(1.0), RegimeSpec("S1"), A1)
    assert s1.lower == pytest.approx(0.5, abs=1e-10)


def test_segment_rate_long_memory_gaussian():
    fam = BalancedPower(0.75, 1.0)
    rb = segment_rate_bounds(fam, Gaussian(1.0), RegimeSpec("R2", family=fam), A1)
    assert rb.lower == pytest.approx(1.0 / (2.0 * C34), rel=1e-6)
    assert rb.upper == pytest.approx(1.0 / (2.0 * C34), rel=1e-6)


def test_segment_rate_zero_when_set_reaches_the_mean():
    rb = segment_rate_bounds(IID, Gaussian(1.0), RegimeSpec("S2"), TargetSet.half_line(-0.5))
    assert rb.lower == 0.0


@pytest.mark.parametrize("kappa", [0.5, 2.0, 3.0])
def test_segment_rate_scale_covariance(kappa):
    base = segment_rate_bounds(MA2, Gaussian(2.0), RegimeSpec("S2"), A1)
    scaled = segment_rate_bounds(MA2, Gaussian(2.0), RegimeSpec("S2"), TargetSet.half_line(kappa))
    assert scaled.lower == pytest.approx(kappa**2 * base.lower, rel=1e-9)
    assert scaled.upper == pytest.approx(kappa**2 * base.upper, rel=1e-9)


def test_segment_rate_exponential_matches_conjugate():
    # Lambda*(x) = x - log(1 + x) for the centred unit exponential
    rb = segment_rate_bounds(IID, CenteredExponential(1.0), RegimeSpec("S1"), TargetSet.half_line(2.0))
    assert rb.lower == pytest.approx(2.0 - math.log(3.0), abs=1e-9)


# --- tables ------------------------------------------------------------------


def test_table_cells_known_values():
    assert table1_theta("short", 1) == 1
    assert table1_theta("long", 1, Fraction(3, 4)) == 2
    assert table1_theta("long", Fraction(1, 2), Fraction(3, 4)) == math.inf
    assert table2_theta("short", 1) == 1
    assert table2_theta("long", 1, Fraction(3, 4)) == Fraction(1, 2)
    assert table2_theta("long", 2, Fraction(3, 4), 2) == Fraction(5, 4)
    assert isinstance(table2_theta("long", 2, 0.75, 2), Fraction)


def test_alpha_one_collapses_memory():
    for beta in (Fraction(3, 2), Fraction(2), Fraction(5)):
        for w in (Fraction(3, 5), Fraction(4, 5), Fraction(1), Fraction(3, 2), Fraction(5, 2)):
            assert table2_theta("long", w, 1, beta) == table2_theta("short", w, None, beta)


def test_table_errors():
    with pytest.raises(OutOfRange):
        table1_theta("short", Fraction(1, 3))
    with pytest.raises(OutOfRange):
        table1_theta("long", 1, Fraction(1, 2))
    with pytest.raises(OutOfRange):
        table2_theta("short", 2)
    with pytest.raises(Exception):
        table2_theta("medium", 1)


# --- short memory, light tails ---------------------------------------------


def test_cramer_iid_gaussian():
    r = ruin_cramer_bounds(IID, Gaussian(1.0), A1, 0.5)
    assert r.lower == pytest.approx(-1.0, abs=1e-9)
    assert r.upper == pytest.approx(-1.0, abs=1e-9)
    assert r.exact == pytest.approx(-1.0, abs=1e-9)
    r4 = ruin_cramer_bounds(IID, Gaussian(4.0), A1, 1.0)
    assert r4.exact == pytest.approx(-0.5, abs=1e-9)


def test_cramer_moving_average_keeps_the_iid_value():
    r = ruin_cramer_bounds(MA2, Gaussian(1.0), A1, 0.5)
    assert r.lower == pytest.approx(-1.0, abs=1e-9)
    assert r.upper == pytest.approx(-1.0, abs=1e-9)


def test_cramer_exponential_root():
    root = optimize.brentq(lambda w: -math.log(1 - 0.5 * w) - 0.5 * w - 0.25 * w, 1e-6, 1.999999, xtol=1e-15)
    r = ruin_cramer_bounds(IID, CenteredExponential(1.0), A1, 0.5)
    assert r.constants["w"] == pytest.approx(root, rel=1e-9)
    assert root == pytest.approx(1.17, abs=0.005)
    assert r.lower <= r.upper
    assert r.upper == pytest.approx(-0.5 * root, rel=1e-8)


def test_gaussian_power_normalisation():
    r = ruin_gaussian_bounds(RegimeSpec("S3", 0.75), Gaussian(1.0), 0.5, A1)
    want = -0.5 * 0.25 ** (-2 / 3) * 0.75**2
    assert want == pytest.approx(-0.7087, abs=1e-4)
    assert r.exact == pytest.approx(want, rel=1e-10)
    assert r.lower == pytest.approx(want, rel=1e-8)
    # independent outer minimisation of c^(-(2w-1)/w) (mu + c)^2 / 2
    w = 0.75
    grid = -outer_inf(lambda c: c ** (-(2 * w - 1) / w) * (0.5 + c) ** 2 / 2)
    assert r.lower == pytest.approx(grid, rel=1e-9)


def test_gaussian_power_at_omega_one_is_cramer():
    cr = ruin_cramer_bounds(IID, Gaussian(1.0), A1, 0.5).exact
    assert ruin_gaussian_bounds(RegimeSpec("S3", 1.0), Gaussian(1.0), 0.5, A1).exact == pytest.approx(cr, abs=1e-12)


def test_gaussian_power_two_dimensional_reduces_to_first_coordinate():
    A = TargetSet.half_space((1.0, 0.0), 1.0)
    r2 = ruin_gaussian_bounds(RegimeSpec("S3", 0.8), Gaussian(np.eye(2)), (1.0, 0.0), A)
    r1 = ruin_gaussian_bounds(RegimeSpec("S3", 0.8), Gaussian(1.0), 1.0, A1)
    assert r2.lower == pytest.approx(r1.lower, rel=1e-9)
    assert r2.exact == pytest.approx(r1.exact, rel=1e-9)


# --- short memory, heavy profile ---------------------------------------------


def test_heavy_profile_constant():
    r = ruin_heavy_bounds(RegimeSpec("S4", 1.5, beta=2.0), Gaussian(1.0), 0.5, A1)
    assert r.constants["K_beta"] == pytest.approx(0.5)
    assert r.constants["nu"] == pytest.approx(2.0)


def test_heavy_profile_outer_inf_by_grid():
    r = ruin_heavy_bounds(RegimeSpec("S4", 1.5, beta=2.0), Gaussian(1.0), 0.5, A1)
    E = 2.0 / 1.5

    def inner(c):
        # sup over k of k s - k^2 / 2 is s^2 / 2, reached at k = s
        s = 0.5 + c
        return s * s / 2

    grid = -outer_inf(lambda c: c ** (-E) * inner(c))
    assert r.lower == pytest.approx(grid, abs=1e-8)
    assert r.exact == pytest.approx(grid, abs=1e-8)


def test_heavy_profile_omega_one_is_linear():
    r = ruin_heavy_bounds(RegimeSpec("S4", 1.0, beta=3.0), LimitProfile(3.0, 0.4), 0.5, A1)
    assert r.constants["nu"] == 1.0
    assert r.constants["exponent"] == 1.0
    # with nu = 1 the limit is -sup{t : Lambda(t) <= t mu} for Lambda = 0.4 t^3
    assert r.lower == pytest.approx(-math.sqrt(0.5 / 0.4), rel=1e-8)


def test_heavy_profile_general_beta():
    beta, w, a, mu = 1.5, 2.0, 0.7, 0.8
    r = ruin_heavy_bounds(RegimeSpec("S4", w, beta=beta), LimitProfile(beta, a), mu, A1)
    nu = 1 + (w - 1) * beta / (beta - 1)

    def inner(c):
        s = mu + c
        # search in log k over a bracket wide enough for every c on the grid
        res = optimize.minimize_scalar(lambda t: -(math.exp(t) * s - a * math.exp(t * beta)), bounds=(-30, 30),
                                       method="bounded", options={"xatol": 1e-12})
        return -res.fun

    grid = -outer_inf(lambda c: c ** (-nu / w) * inner(c), 1e-3, 1e3)
    assert r.lower == pytest.approx(grid, rel=1e-7)


# --- long memory --------------------------------------------------------------


def test_long_memory_alpha_one_is_cramer():
    fam = BalancedPower(1.0, 1.0)
    r = ruin_lm_bounds(RegimeSpec("R2", family=fam), fam, Gaussian(1.0), 0.5, A1)
    assert r.lower == pytest.approx(-1.0, abs=1e-8)
    assert r.upper == pytest.approx(-1.0, abs=1e-8)


@pytest.mark.slow
def test_long_memory_product_normalisation_gaussian():
    fam = BalancedPower(0.75, 1.0)
    r = ruin_lm_bounds(RegimeSpec("R2", family=fam), fam, Gaussian(1.0), 0.5, A1)
    lower = -outer_inf(lambda c: c ** (1 / (0.75 - 2)) * (0.5 + c) ** 2 / (2 * C34))
    assert r.lower == pytest.approx(lower, rel=1e-6)
    assert r.lower <= r.upper
    assert r.constants["C_alpha_2"] == pytest.approx(C34, rel=1e-9)


def test_long_memory_empty_G():
    fam = BalancedPower(0.75, 1.0)
    with pytest.raises(EmptyG):
        ruin_lm_bounds(RegimeSpec("R2", family=fam), fam, Gaussian(1.0), -0.5, A1)


def test_long_memory_gaussian_closed_form():
    fam = BalancedPower(0.75, 1.0)
    r = ruin_lm_gaussian_bounds(RegimeSpec("R3", 1.0, family=fam), Gaussian(1.0), 0.5, A1)
    want = -(0.5**-0.5 / 1.5**1.5) * (2 / C34) * 0.5**1.5
    assert want * C34 == pytest.approx(-0.5443, abs=1e-4)
    assert r.exact == pytest.approx(want, rel=1e-8)
    assert r.lower == pytest.approx(want, rel=1e-8)
    assert r.upper == pytest.approx(want, rel=1e-8)


def test_long_memory_gaussian_alpha_one():
    fam = BalancedPower(0.75, 1.0)
    r = ruin_lm_gaussian_bounds(RegimeSpec("R3", 1.0, family=fam), Gaussian(1.0), 0.5, A1, alpha=1.0, omega=1.0)
    assert r.exact == pytest.approx(-1.0, abs=1e-10)


@pytest.mark.parametrize("w", [0.9, 1.1, 1.25])
def test_long_memory_gaussian_lower_by_grid(w):
    fam = BalancedPower(0.75, 1.0)
    r = ruin_lm_gaussian_bounds(RegimeSpec("R3", w, family=fam), Gaussian(1.0), 0.5, A1)
    e = 1.5 / w
    grid = -outer_inf(lambda c: c ** (e - 2) * (0.5 + c) ** 2 / 2) / C34
    assert r.lower == pytest.approx(grid, rel=1e-7)
    assert r.exact == pytest.approx(grid, rel=1e-7)


def test_long_memory_heavy_closed_form():
    fam = BalancedPower(0.75, 1.0)
    r = ruin_lm_heavy_bounds(RegimeSpec("R4", 1.25, beta=2.0, family=fam), Gaussian(1.0), 0.5, A1)
    want = -(1 / 1.5**1.2) * (1.25**2 / (0.5 * C34)) * 0.5**1.2
    assert r.exact == pytest.approx(want, rel=1e-8)
    assert r.lower <= r.upper


def test_long_memory_heavy_second_branch():
    fam = BalancedPower(0.75, 1.0)
    r = ruin_lm_heavy_bounds(RegimeSpec("R4", 2.0, beta=2.0, family=fam), Gaussian(1.0), 0.5, A1)
    assert r.constants["branch"] == "G2"
    assert r.lower <= r.upper < 0


def test_long_memory_heavy_alpha_one_exponent():
    fam = BalancedPower(0.75, 1.0)
    for beta, w in [(2.0, 1.5), (3.0, 2.0)]:
        r = ruin_lm_heavy_bounds(RegimeSpec("R4", w, beta=beta, family=fam), LimitProfile(beta, 0.5), 0.5, A1, alpha=1.0)
        assert r.constants["exponent"] == pytest.approx((beta * w - 1) / (w * (beta - 1)), rel=1e-14)
        s4 = ruin_heavy_bounds(RegimeSpec("S4", w, beta=beta), LimitProfile(beta, 0.5), 0.5, A1)
        assert r.lower == pytest.approx(s4.lower, rel=1e-8)


def test_forbidden_omega():
    fam = BalancedPower(0.75, 1.0)
    with pytest.raises(ForbiddenOmega):
        ruin_lm_heavy_bounds(RegimeSpec("R4", 1.5, beta=2.0, family=fam), Gaussian(1.0), 0.5, A1)


def test_regime_guards():
    with pytest.raises(RegimeMismatch):
        ruin_gaussian_bounds(RegimeSpec("S2"), Gaussian(1.0), 0.5, A1)
    with pytest.raises(RegimeMismatch):
        ruin_heavy_bounds(RegimeSpec("S3", 0.8), Gaussian(1.0), 0.5, A1)


def test_lower_never_exceeds_upper_across_grids():
    fam = BalancedPower(0.75, 1.0)
    seen = 0
    for mu in (0.25, 0.5, 1.0, 2.0):
        for y in (0.5, 1.0, 3.0):
            A = TargetSet.half_line(y)
            results = [
                ruin_cramer_bounds(MA2, Gaussian(1.5), A, mu),
                ruin_gaussian_bounds(RegimeSpec("S3", 0.7), Gaussian(1.0), mu, A),
                ruin_heavy_bounds(RegimeSpec("S4", 1.7, beta=2.5), LimitProfile(2.5, 0.3), mu, A),
                ruin_lm_gaussian_bounds(RegimeSpec("R3", 0.9, family=fam), Gaussian(1.0), mu, A),
                ruin_lm_heavy_bounds(RegimeSpec("R4", 1.3, beta=2.0, family=fam), Gaussian(1.0), mu, A),
                ruin_lm_heavy_bounds(RegimeSpec("R4", 2.5, beta=2.0, family=fam), Gaussian(1.0), mu, A),
            ]
            for r in results:
                assert r.lower <= r.upper
                seen += 1
    assert seen == 72


def test_dispatch_by_regime():
    fam = BalancedPower(0.75, 1.0)
    assert ruin_asymptote(IID, Gaussian(1.0), RegimeSpec("S2"), 0.5, A1).regime.startswith("S")
    r = ruin_asymptote(fam, Gaussian(1.0), RegimeSpec("R3", 1.0, family=fam), 0.5, A1)
    assert r.regime == "R3"


# --- general bounds from the scaled cumulant ----------------------------------


def test_nyrhinen_iid_gaussian_is_tight():
    g = g_function(RuinSpec(IID, Gaussian(1.0), RegimeSpec("S1"), 0.5, A1))
    nb = nyrhinen_bounds(g, A1)
    assert nb.upper == pytest.approx(-1.0, abs=1e-8)
    assert nb.lower == pytest.approx(-1.0, abs=1e-8)
    assert nb.kappa_bar == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("mu", [0.25, 0.5, 1.0])
def test_nyrhinen_brackets_the_cramer_limit(mu):
    g = g_function(RuinSpec(IID, Gaussian(1.0), RegimeSpec("S1"), mu, A1))
    nb = nyrhinen_bounds(g, A1)
    exact = ruin_cramer_bounds(IID, Gaussian(1.0), A1, mu).exact
    assert nb.upper + 1e-8 >= exact >= nb.lower - 1e-8


def test_nyrhinen_moving_average():
    g = g_function(RuinSpec(MA2, Gaussian(1.0), RegimeSpec("S1"), 0.5, A1))
    nb = nyrhinen_bounds(g, A1)
    assert nb.lower <= nb.upper
    assert nb.upper == pytest.approx(-1.0, abs=1e-6)


def test_nyrhinen_unreachable_set_is_degenerate():
    g = g_function(RuinSpec(IID, Gaussian(1.0), RegimeSpec("S1"), 0.5, A1))
    nb = nyrhinen_bounds(g, TargetSet.half_line(-1.0))
    assert nb.degenerate
    assert nb.upper == 0.0 and math.copysign(1.0, nb.upper) == -1.0
