from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from combwalk import analysis, bset
from combwalk.rng import RngStream


def brute_force_law(b, n):
    """Independent oracle: enumerate every path recursively."""
    out = {}

    def walk(x, y, steps_left, prob):
        if steps_left == 0:
            out[(x, y)] = out.get((x, y), Fraction(0)) + prob
            return
        if b.contains(y):
            q = prob / 4
            walk(x + 1, y, steps_left - 1, q)
            walk(x - 1, y, steps_left - 1, q)
            walk(x, y + 1, steps_left - 1, q)
            walk(x, y - 1, steps_left - 1, q)
        else:
            q = prob / 2
            walk(x, y + 1, steps_left - 1, q)
            walk(x, y - 1, steps_left - 1, q)

    walk(0, 0, n, Fraction(1))
    return out


def test_exact_one_step_comb():
    d = analysis.exact_distribution(bset.finite([0]), 1)
    assert d.prob(1, 0) == d.prob(-1, 0) == d.prob(0, 1) == d.prob(0, -1) == Fraction(1, 4)
    assert d.total() == 1


def test_exact_two_step_values():
    # hand check: return via horizontal neighbors 2*(1/4*1/4), vertical 2*(1/4*1/2)
    d = analysis.exact_distribution(bset.finite([0]), 2)
    assert d.prob(0, 0) == Fraction(3, 8)
    p = analysis.exact_distribution(bset.all_levels(), 2)
    assert p.prob(0, 0) == Fraction(1, 4)


def test_exact_matches_brute_force_enumeration():
    for b in [bset.finite([0]), bset.periodic(2, 2), bset.halfplane(), bset.finite([])]:
        for n in (1, 2, 3, 5):
            dp = analysis.exact_distribution(b, n)
            brute = brute_force_law(b, n)
            assert dp.pmf == brute, (str(b), n)


def test_exact_symmetries_and_mass():
    for b in [bset.finite([0]), bset.periodic(3, 2), bset.halfplane()]:
        d = analysis.exact_distribution(b, 6)
        assert d.total() == 1
        for (x, y), p in d.pmf.items():
            assert d.prob(-x, y) == p          # horizontal mirror always
    sym = analysis.exact_distribution(bset.periodic(2, 2), 6)
    for (x, y), p in sym.pmf.items():
        assert sym.prob(-x, -y) == p           # B = -B adds the point symmetry


def test_exact_cap():
    with pytest.raises(ValueError):
        analysis.exact_distribution(bset.finite([0]), 15)


def test_tv_distance_basics():
    d = analysis.exact_distribution(bset.finite([0]), 2)
    counts = {pt: int(p * 80000) for pt, p in d.pmf.items()}
    assert analysis.tv_distance(d, counts) == pytest.approx(0.0, abs=1e-12)
    disjoint = {(0, 2): 5}
    d1 = analysis.exact_distribution(bset.finite([]), 2)   # lives on x = 0
    assert analysis.tv_distance(d1, {(0, 2): 3, (0, 0): 3, (0, -2): 2}) <= 1.0
    # unreachable parity -> step-count mismatch
    with pytest.raises(ValueError):
        analysis.tv_distance(d, {(1, 0): 1})
    with pytest.raises(ValueError):
        analysis.tv_distance(d, {})
    assert analysis.tv_distance(d, disjoint) <= 1.0


def test_tv_distance_disjoint_supports_is_one():
    d = analysis.exact_distribution(bset.finite([]), 2)    # only x = 0 reachable
    emp = {(2, 0): 7, (-2, 0): 3}                          # legal parity, zero mass
    assert analysis.tv_distance(d, emp) == pytest.approx(1.0)


def test_ks_against_own_reference():
    u = RngStream(4242).uniforms(10**5)
    samples = np.sqrt(u)                      # CDF x^2 on [0,1]
    res = analysis.ks_against(samples, lambda x: np.clip(x, 0, 1) ** 2)
    assert res.statistic < 0.013
    # oracle: scipy one-sample KS statistic agrees
    sp = stats.kstest(samples, lambda x: np.clip(x, 0, 1) ** 2).statistic
    assert res.statistic == pytest.approx(float(sp), abs=1e-12)


def test_ks_against_degenerate_and_errors():
    res = analysis.ks_against(np.full(500, 0.5), lambda x: np.clip(x, 0, 1))
    assert res.statistic >= 0.5
    with pytest.raises(ValueError):
        analysis.ks_against([], lambda x: x)
    with pytest.raises(ValueError):
        analysis.ks_against([0.1, 0.2, 0.3] * 40, lambda x: -np.asarray(x))


def test_ks_two_sample():
    a = RngStream(1).uniforms(4000)
    b = RngStream(2).uniforms(4000)
    assert analysis.ks_two_sample(a, b).statistic < 0.05
    c = 0.5 * RngStream(3).uniforms(4000)
    assert analysis.ks_two_sample(a, c).statistic > 0.3


def test_fit_exponent_exact_power_law():
    ns = [2**k for k in range(10, 17)]
    fit = analysis.fit_exponent({n: n**0.375 for n in ns})
    assert fit.slope == pytest.approx(0.375, abs=1e-12)
    assert fit.stderr == pytest.approx(0.0, abs=1e-9)


def test_fit_exponent_scale_invariance():
    ns = [100, 1000, 10**4, 10**5]
    f1 = analysis.fit_exponent({n: n**0.25 for n in ns})
    f2 = analysis.fit_exponent({n: 7.3 * n**0.25 for n in ns})
    assert f1.slope == pytest.approx(f2.slope, abs=1e-12)
    assert f2.intercept - f1.intercept == pytest.approx(np.log(7.3), abs=1e-9)


def test_fit_exponent_residual_orthogonality():
    ns = [2**k for k in range(8, 16)]
    vals = {n: n**0.4 * (1.0 + 0.05 * np.sin(n)) for n in ns}
    fit = analysis.fit_exponent(vals)
    xs = np.array([p[0] for p in fit.points])
    ys = np.array([p[1] for p in fit.points])
    resid = ys - (fit.intercept + fit.slope * xs)
    assert abs(resid.sum()) < 1e-9
    assert abs((resid * xs).sum()) < 1e-9


def test_fit_exponent_insufficient_points():
    with pytest.raises(ValueError):
        analysis.fit_exponent({10: 1.0, 20: 2.0, 40: 3.0})
    with pytest.raises(ValueError):
        analysis.fit_exponent({10: 1.0, 20: 2.0, 40: 3.0, 80: 4.0})  # < 2 decades


def test_empirical_counts_roundtrip():
    gen = np.random.default_rng(5)
    x = gen.integers(-50, 50, size=2000)
    y = gen.integers(-50, 50, size=2000)
    table = analysis.empirical_counts(x, y)
    assert sum(table.values()) == 2000
    from collections import Counter

    oracle = Counter(zip(x.tolist(), y.tolist()))
    assert table == dict(oracle)
