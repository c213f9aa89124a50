from fractions import Fraction

import numpy as np
import pytest

from memrates.errors import InvalidParameter, NotFoundWithinBudget, UnsupportedSet
from memrates.model import BalancedPower, FiniteLag, Gaussian, RegimeSpec, TargetSet
from memrates.segments import (
    EXACT_CAP,
    Witness,
    first_hitting_T,
    growth_statistic,
    longest_segment_profile,
    longest_strange_segment_exact,
    longest_strange_segment_fast,
)
from memrates.simulate import PathConfig, sample_path, sample_paths

A1 = TargetSet.half_line(1.0)


def brute_R(x, y, strict=True):
    """Longest window with mean above y, by exact rational arithmetic."""
    xs = [Fraction(v) for v in x]
    y = Fraction(y)
    best = 0
    for k in range(len(xs)):
        total = Fraction(0)
        for l in range(k + 1, len(xs) + 1):
            total += xs[l - 1]
            n = l - k
            if (total > y * n) if strict else (total >= y * n):
                best = max(best, n)
    return best


def brute_T(x, y, r):
    for l in range(r, len(x) + 1):
        if brute_R(x[:l], y) >= r:
            return l
    return None


@pytest.mark.parametrize(
    "x, want, wit",
    [([2.0, -1.0, 3.0], 3, Witness(3, 3)), ([-1.0, -1.0], 0, None), ([0.5, 2.0, 0.5], 2, Witness(2, 2))],
)
def test_small_examples(x, want, wit):
    for f in (longest_strange_segment_exact, longest_strange_segment_fast):
        r, w = f(x, A1)
        assert r == want
        assert w == wit


def test_first_hitting_example():
    assert first_hitting_T([0.5, 2.0, 0.5], A1, r=1) == 2
    assert first_hitting_T([0.5, 2.0, 0.5], A1, r=2) == 2
    with pytest.raises(NotFoundWithinBudget):
        first_hitting_T([0.5, 2.0, 0.5], A1, r=3)


def test_closed_set_admits_equality():
    assert longest_strange_segment_exact([0.5, 2.0, 0.5], A1, closed=True)[0] == 3
    assert longest_strange_segment_fast([0.5, 2.0, 0.5], A1, closed=True)[0] == 3


def test_against_rational_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(300):
        m = int(rng.integers(1, 25))
        x = rng.integers(-3, 4, size=m) / 4.0
        y = float(rng.choice([-0.25, 0.0, 0.5, 1.0]))
        A = TargetSet.half_line(y)
        want = brute_R(x, y)
        assert longest_strange_segment_exact(x, A)[0] == want
        assert longest_strange_segment_fast(x, A)[0] == want
        r = int(rng.integers(1, m + 1))
        t = brute_T(list(x), y, r)
        if t is None:
            with pytest.raises(NotFoundWithinBudget):
                first_hitting_T(x, A, r=r)
        else:
            assert first_hitting_T(x, A, r=r) == t


def test_fast_matches_exact_on_random_paths():
    rng = np.random.default_rng(1)
    for i in range(1000):
        m = int(rng.integers(2, 2001)) if i % 10 == 0 else int(rng.integers(2, 200))
        x = rng.normal(size=m)
        y = (0.5, 1.0, 2.0)[i % 3]
        A = TargetSet.half_line(y)
        r_e, w_e = longest_strange_segment_exact(x, A)
        r_f, w_f = longest_strange_segment_fast(x, A)
        assert r_e == r_f
        assert w_e == w_f


def test_monotone_paths():
    up = np.full(100, 2.0)
    assert longest_strange_segment_fast(up, A1)[0] == 100
    down = np.full(100, -2.0)
    assert longest_strange_segment_fast(down, A1)[0] == 0
    with pytest.raises(NotFoundWithinBudget):
        first_hitting_T(down, A1, r=1)


def test_profile_is_nondecreasing_and_matches_prefixes():
    x = sample_path(PathConfig(3000, FiniteLag(((0, 0.5), (1, 0.5))), Gaussian(1.0), seed=4)).values
    R, _ = longest_segment_profile(x, TargetSet.half_line(0.5))
    assert np.all(np.diff(R) >= 0)
    for l in (1, 10, 500, 2999):
        assert R[l] == longest_strange_segment_exact(x[:l], TargetSet.half_line(0.5))[0]


def test_shrinking_the_set_shrinks_R():
    x = np.random.default_rng(2).normal(size=5000)
    rs = [longest_strange_segment_fast(x, TargetSet.half_line(y))[0] for y in (0.25, 0.5, 1.0, 2.0)]
    assert rs == sorted(rs, reverse=True)


def test_normalisation_scale():
    x = np.random.default_rng(3).normal(size=400)
    reg = RegimeSpec("S3", 1.0, a_scale=2.0)
    # a_n = 2n turns (1, inf) into mean increment above 2
    assert longest_strange_segment_fast(x, A1, reg)[0] == longest_strange_segment_fast(x, TargetSet.half_line(2.0))[0]
    assert longest_strange_segment_exact(x, A1, reg)[0] == longest_strange_segment_fast(x, A1, reg)[0]


def test_nonlinear_normalisation_uses_the_scan():
    x = np.random.default_rng(4).normal(size=300)
    reg = RegimeSpec("S3", 0.75)
    with pytest.raises(UnsupportedSet):
        longest_strange_segment_fast(x, A1, reg)
    r, w = longest_strange_segment_exact(x, A1, reg)
    S = np.concatenate([[0.0], np.cumsum(x)])
    if r:
        assert (S[w.l] - S[w.l - w.n]) / reg.a(w.n) > 1.0
    for n in range(r + 1, 301):
        assert np.all((S[n:] - S[:-n]) / reg.a(n) <= 1.0)
    t = first_hitting_T(x, A1, reg, r=1)
    assert (S[t] - S[t - 1]) / reg.a(1) > 1.0 or t > 1


def test_vector_paths_and_unsupported_sets():
    x = np.random.default_rng(5).normal(size=(200, 2))
    A = TargetSet.half_space((1.0, 1.0), 1.0)
    r, w = longest_strange_segment_exact(x, A)
    proj = x.sum(axis=1)
    assert r == brute_R(proj.round(12), 1.0) or r == longest_strange_segment_fast(proj, A1)[0]
    with pytest.raises(UnsupportedSet):
        longest_strange_segment_fast(x, A)
    with pytest.raises(UnsupportedSet):
        longest_strange_segment_fast(x[:, 0], TargetSet.half_space((-1.0,), 1.0))


def test_exact_cap():
    with pytest.raises(InvalidParameter):
        longest_strange_segment_exact(np.zeros(EXACT_CAP + 1), A1)


def test_hitting_on_a_stream():
    cfg = PathConfig(1, FiniteLag(((0, 1.0),)), Gaussian(1.0), seed=6)
    full = sample_path(PathConfig(4096, cfg.family, cfg.model, seed=6)).values
    src = lambda n: sample_path(PathConfig(n, cfg.family, cfg.model, seed=6))
    t = first_hitting_T(src, TargetSet.half_line(0.3), r=40, cap=4096)
    assert t == first_hitting_T(full, TargetSet.half_line(0.3), r=40)
    with pytest.raises(NotFoundWithinBudget):
        first_hitting_T(src, TargetSet.half_line(5.0), r=40, cap=512)
    with pytest.raises(InvalidParameter):
        first_hitting_T(src, A1, r=1)
    with pytest.raises(InvalidParameter):
        first_hitting_T(full, A1, r=0)


def test_duality_between_R_and_T():
    x = np.random.default_rng(7).normal(size=500)
    A = TargetSet.half_line(0.5)
    R, _ = longest_segment_profile(x, A)
    for r in (1, 3, 10, 30):
        try:
            t = first_hitting_T(x, A, r=r)
        except NotFoundWithinBudget:
            assert R[-1] < r
            continue
        assert R[t] >= r and R[t - 1] < r


def test_growth_statistic_deterministic_paths():
    paths = [np.full(1000, 0.5), np.full(1000, 0.5)]
    tab = growth_statistic(paths, A1, m_grid=[10, 100, 1000])
    assert np.all(tab.mean == 0) and np.all(tab.std == 0)
    assert len(tab.rows) == 6
    with pytest.raises(InvalidParameter):
        growth_statistic(paths[:1], A1)


def test_growth_statistic_power_speed():
    reg = RegimeSpec("S3", 0.75)
    paths = sample_paths(PathConfig(400, FiniteLag(((0, 1.0),)), Gaussian(1.0), seed=8), 3)
    tab = growth_statistic(paths, A1, reg, m_grid=[50, 400])
    for row in tab.rows:
        assert row["b_R"] == pytest.approx(row["R_m"] ** 0.5 if row["R_m"] else 0.0)
        assert row["statistic"] == pytest.approx(row["b_R"] / np.log(row["m"]))


def test_growth_statistic_linear_speed():
    paths = sample_paths(PathConfig(20_000, FiniteLag(((0, 1.0),)), Gaussian(1.0), seed=9), 4)
    tab = growth_statistic(paths, A1, RegimeSpec("S2"))
    assert np.all(np.diff(tab.m) > 0)
    recs = tab.as_records()
    assert recs[-1]["m"] == 20_000 and recs[-1]["n_paths"] == 4
    # the limit is 1 / rate = 2 for unit Gaussian steps and y = 1
    assert 1.0 < tab.mean[-1] < 3.0


def test_long_memory_paths_accepted():
    fam = BalancedPower(0.75, 1.0)
    paths = sample_paths(PathConfig(500, fam, Gaussian(1.0), seed=10, L=200), 2)
    tab = growth_statistic(paths, A1, RegimeSpec("R1", family=fam), m_grid=[100, 500])
    assert tab.mean.shape == (2,)
