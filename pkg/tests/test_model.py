import math

import numpy as np
import pytest

from memrates.errors import InvalidParameter, NotNormalizable, RegimeMismatch
from memrates.model import (
    BalancedPower,
    CenteredExponential,
    FiniteLag,
    Gaussian,
    Geometric,
    PowerSummable,
    RegimeSpec,
    TargetSet,
    TwoSidedDiscrete,
    condition_A_check,
    make_coefficients,
    make_innovations,
    partial_sum_phi,
)


def brute_window(fam, i, n):
    return sum(float(fam.phi(k)) for k in range(i + 1, i + n + 1))


FAMILIES = [
    FiniteLag(((0, 1.0),)),
    FiniteLag(((-2, 0.3), (0, 0.5), (3, 0.2))),
    Geometric(0.5, 0.5),
    Geometric(-0.4, 1.0),
    PowerSummable(2.5, 1.0),
    BalancedPower(0.75, 1.0),
    BalancedPower(0.6, 0.3, scale=2.0, phi0=0.1),
    BalancedPower(0.9, 0.5, delta=1.0),
]


def test_iid_embedding():
    fam = make_coefficients("FiniteLag", {"lags": [[0, 1.0]]})
    assert float(fam.phi(0)) == 1.0
    for n in (1, 4):
        got = fam.partial_sum(np.arange(-n - 3, 4), n)
        want = [1.0 if -n <= i < 0 else 0.0 for i in range(-n - 3, 4)]
        assert got.tolist() == want


def test_normalized_geometric_half():
    fam = make_coefficients("Geometric", {"r": 0.5, "normalize": True})
    i = np.arange(60)
    np.testing.assert_allclose(fam.phi(i), 2.0 ** (-i - 1.0), rtol=1e-15)
    assert fam.total() == pytest.approx(1.0, abs=1e-12)
    assert fam.abs_total() == pytest.approx(1.0, abs=1e-12)


def test_Psi_small_n_by_direct_sum():
    fam = BalancedPower(0.75, 1.0)
    direct = 1 + 2**-0.75 + 3**-0.75 + 4**-0.75
    assert float(fam.Psi(4)) == pytest.approx(direct, rel=1e-13)
    assert float(fam.Psi(4)) == pytest.approx(2.386848, abs=1e-6)
    assert float(fam.psi(7)) == pytest.approx(7**-0.75)


def test_Psi_large_n_matches_summation():
    fam = BalancedPower(0.75, 1.0)
    for n in (10, 999, 12345, 200_000):
        direct = math.fsum((np.arange(1, n + 1, dtype=float)) ** -0.75)
        assert float(fam.Psi(n)) == pytest.approx(direct, rel=1e-12)


def test_Psi_with_log_factor():
    fam = BalancedPower(0.8, 1.0, delta=0.5)
    k = np.arange(1, 5001, dtype=float)
    direct = math.fsum(k**-0.8 * np.log(k + math.e) ** 0.5)
    assert float(fam.Psi(5000)) == pytest.approx(direct, rel=1e-10)


def test_Psi_asymptotic_ratio():
    # Psi_n = n^(1-a)/(1-a) + zeta(a) + o(1); the ratio test only reaches 1% for smaller alpha
    from scipy.special import zeta

    for alpha in (0.6, 0.75):
        fam = BalancedPower(alpha, 1.0)
        n = 10**6
        lead = n ** (1 - alpha) / (1 - alpha)
        assert float(fam.Psi(n)) - lead == pytest.approx(float(zeta(alpha)), abs=1e-3)
    fam = BalancedPower(0.6, 1.0)
    assert float(fam.Psi(10**6)) / ((10**6) ** 0.4 / 0.4) == pytest.approx(1.0, abs=0.01)


def test_partial_sum_examples():
    assert partial_sum_phi(FiniteLag(((0, 1.0),)), -1, 1) == 1.0
    assert partial_sum_phi(FiniteLag(((0, 0.5), (1, 0.5))), -1, 2) == 1.0
    assert partial_sum_phi(BalancedPower(0.75, 1.0), 0, 3) == pytest.approx(1 + 2**-0.75 + 3**-0.75, rel=1e-13)


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: type(f).__name__)
def test_window_sums_against_brute_force(fam):
    for n in (1, 2, 7):
        for i in range(-15, 10):
            assert partial_sum_phi(fam, i, n) == pytest.approx(brute_window(fam, i, n), abs=1e-12)


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: type(f).__name__)
def test_window_recursion(fam):
    i = np.arange(-40, 40)
    for n in (1, 3, 10, 50):
        step = fam.partial_sum(i, n + 1) - fam.partial_sum(i, n) - fam.phi(i + n + 1)
        assert np.max(np.abs(step)) <= 1e-12


def test_balanced_power_tails():
    fam = BalancedPower(0.7, 0.3)
    n = np.array([10, 1000, 100000])
    np.testing.assert_allclose(fam.phi(n) / fam.psi(n), 0.3)
    np.testing.assert_allclose(fam.phi(-n) / fam.psi(n), 0.7)
    assert fam.abs_total() == math.inf


def test_Psi_nondecreasing():
    fam = BalancedPower(0.55, 0.5)
    vals = fam.Psi(np.arange(0, 3000))
    assert np.all(np.diff(vals) >= 0)


def test_normalizing_short_families():
    for kind, params in [("FiniteLag", {"lags": [[0, 2.0], [1, 2.0]]}), ("PowerSummable", {"alpha": 3.0})]:
        fam = make_coefficients(kind, dict(params, normalize=True))
        assert fam.total() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(NotNormalizable):
        make_coefficients("FiniteLag", {"lags": [[0, 1.0], [1, -1.0]], "normalize": True})
    with pytest.raises(NotNormalizable):
        make_coefficients("BalancedPower", {"alpha": 0.75, "normalize": True})


def test_bad_parameters():
    with pytest.raises(InvalidParameter):
        BalancedPower(0.4)
    with pytest.raises(InvalidParameter):
        Geometric(1.0)
    with pytest.raises(InvalidParameter):
        make_coefficients("Nope")
    with pytest.raises(InvalidParameter):
        make_innovations("Gaussian", {"variance": 1.0, "colour": 3})
    with pytest.raises(InvalidParameter):
        TwoSidedDiscrete((-1.0, 1.0), (0.2, 0.8))


@pytest.mark.parametrize(
    "model",
    [Gaussian(2.0), CenteredExponential(1.5), TwoSidedDiscrete((-1.0, 0.0, 2.0), (0.5, 0.25, 0.25)),
     make_innovations("CenteredGamma", {"shape": 2.0, "rate": 1.0}), make_innovations("BoundedUniform")],
    ids=lambda m: m.law,
)
def test_innovations_are_centred_and_convex(model):
    assert float(model.log_mgf(0.0)) == 0.0
    assert float(model.grad(0.0)) == pytest.approx(0.0, abs=1e-12)
    t = np.linspace(-0.4, 0.4, 41)
    lam = model.log_mgf(t)
    assert np.all(np.diff(lam, 2) >= -1e-12)


def test_exponential_domain():
    m = CenteredExponential(1.0)
    assert float(m.log_mgf(0.5)) == pytest.approx(-math.log(0.5) - 0.5)
    assert float(m.log_mgf(1.0)) == math.inf


def test_support_inf_homogeneous():
    A = TargetSet.half_space((1.0, 2.0), 3.0)
    t = np.array([0.5, 1.0])
    for k in (0.1, 1.0, 7.0):
        assert A.support_inf(k * t) == pytest.approx(k * A.support_inf(t))
    assert A.support_inf(np.array([1.0, 0.0])) == -math.inf
    H = TargetSet.half_line(2.0)
    assert H.support_inf(3.0) == 6.0
    assert H.support_inf(-1.0) == -math.inf


def test_shrunk_sets_are_nested():
    A = TargetSet.half_space((1.0, -1.0), 0.5)
    rng = np.random.default_rng(0)
    x = rng.normal(scale=3.0, size=(2000, 2))
    inner, outer = A.shrink(0.7).contains(x), A.shrink(0.2).contains(x)
    assert np.all(outer[inner])
    # the shrunk set is exactly the points further than eta from the complement
    dist = (x @ A.v - A.threshold) / A.norm_v
    np.testing.assert_array_equal(A.shrink(0.7).contains(x), dist > 0.7)


def test_condition_A_examples():
    ok, w = condition_A_check(TargetSet.half_line(1.0), 0.5)
    assert ok and w.tolist() == [1.0]
    ok, w = condition_A_check(TargetSet.half_line(1.0), -0.5)
    assert not ok and w is None
    ok, w = condition_A_check(TargetSet.half_space((1.0, 0.0), 1.0), (1.0, 1.0))
    assert ok and w.tolist() == [1.0, 0.0]


def test_regime_speeds():
    fam = BalancedPower(0.75, 1.0)
    n = np.array([1.0, 10.0, 1000.0])
    np.testing.assert_allclose(RegimeSpec("S3", 0.75).b(n), n**0.5)
    np.testing.assert_allclose(RegimeSpec("R2", family=fam).a(n), n * fam.Psi(n.astype(int)))
    r3 = RegimeSpec("R3", 1.0, family=fam)
    np.testing.assert_allclose(r3.b(n), n / fam.Psi(n.astype(int)) ** 2)


def test_a_inverse_is_right_continuous_inverse():
    fam = BalancedPower(0.75, 1.0)
    for reg in (RegimeSpec("S3", 0.8, a_scale=2.0), RegimeSpec("R2", family=fam), RegimeSpec("S2")):
        for u in (0.5, 1.0, 3.3, 17.0, 250.0):
            n = int(reg.a_inverse(u)[0])
            assert float(reg.a(n)) >= u
            assert n == 1 or float(reg.a(n - 1)) < u


def test_regime_validation():
    with pytest.raises(RegimeMismatch):
        RegimeSpec("S3", 0.4)
    with pytest.raises(RegimeMismatch):
        RegimeSpec("R3", 1.0, family=FiniteLag(((0, 1.0),)))
    with pytest.raises(RegimeMismatch):
        RegimeSpec("S4", 1.5)
    with pytest.raises(RegimeMismatch):
        RegimeSpec("Q1")
