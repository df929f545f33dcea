import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtr

from combwalk import timechange as tc
from combwalk.rng import RngStream


def synthetic_path(values, dt=0.01):
    """BrownianPath with a hand-picked sign profile (values at grid points)."""
    v = np.asarray(values, dtype=np.float64)
    cum = np.zeros(v.size)
    np.cumsum((v[:-1] >= 0) * dt, out=cum[1:])
    return tc.BrownianPath(horizon=(v.size - 1) * dt, dt=dt, values=v,
                           cum_nonneg=cum, seed=0)


def test_path_increment_moments():
    p = tc.sample_path(horizon=2.0, dt=1e-3, seed=5)
    inc = np.diff(p.values)
    assert abs(inc.mean()) < 3 * math.sqrt(1e-3 / inc.size)
    assert abs(inc.var() / 1e-3 - 1.0) < 0.1
    assert p.values.size == int(2.0 / 1e-3) + 1


def test_path_occupation_bookkeeping():
    p = tc.sample_path(horizon=1.0, dt=1e-3, seed=9)
    assert np.all(np.diff(p.cum_nonneg) >= 0)
    assert np.all(p.cum_nonneg <= p.grid + 1e-12)
    neg_time = np.sum((p.values[:-1] < 0) * p.dt)
    assert p.cum_nonneg[-1] + neg_time == pytest.approx(p.grid[-1], abs=1e-9)


def test_clock_equal_weights_is_linear():
    p = tc.sample_path(1.0, 1e-3, seed=2)
    t = tc.TimeChange(1.5, 1.5, p)
    for s in (0.0, 0.25, 0.5, 0.999):
        assert t.clock(s) == pytest.approx(1.5 * round(s / 1e-3) * 1e-3, abs=1e-12)


def test_clock_on_synthetic_profiles():
    # path that stays nonnegative: clock runs at full gamma1 speed
    p = synthetic_path(np.ones(101))
    t = tc.TimeChange(2.0, 1.0, p)
    assert t.clock(1.0) == pytest.approx(2.0)
    # profile with 40% of each 5-cell block nonnegative: clock slope 1.4
    block = [1.0, 1.0, -1.0, -1.0, -1.0]
    p = synthetic_path(np.array(block * 40 + [1.0]))
    t = tc.TimeChange(2.0, 1.0, p)
    for k in (5, 10, 100, 200):
        s = k * 0.01
        assert t.clock(s) == pytest.approx(1.4 * s, abs=1e-12)


def test_drift_properties():
    p = tc.sample_path(1.0, 1e-3, seed=3)
    ident = tc.TimeChange(1.0, 1.0, p)
    assert ident.drift(0.7) == pytest.approx(0.0, abs=1e-12)
    t = tc.TimeChange(1.75, 1.0, p)
    # gamma2 = 1: drift is (gamma1-1) * occupation, nonnegative
    drifts = t.grid_clock - p.grid
    assert np.all(drifts >= -1e-12)
    assert np.all(np.diff(drifts) >= -1e-12)          # nondecreasing
    assert drifts[-1] == pytest.approx(0.75 * p.cum_nonneg[-1])


def test_clock_monotone_and_sandwiched():
    for seed in range(5):
        p = tc.sample_path(1.0, 1e-3, seed=seed)
        t = tc.TimeChange(1.8, 1.2, p)
        a = t.grid_clock
        assert np.all(np.diff(a) > 0)
        assert np.all(a >= 1.2 * p.grid - 1e-12)
        assert np.all(a <= 1.8 * p.grid + 1e-12)


def test_inverse_identity_and_sandwich():
    p = tc.sample_path(1.0, 1e-3, seed=11)
    t = tc.TimeChange(2.0, 1.0, p)
    ks = np.arange(0, 1001, 37)
    back = t.inverse(t.grid_clock[ks])
    assert np.max(np.abs(back - p.grid[ks])) < 1e-3
    sa = RngStream(1).uniforms(1000) * t.grid_clock[-1]
    r = t.inverse(sa)
    assert np.all(r >= sa / 2.0 - 1e-3)
    assert np.all(r <= sa / 1.0 + 1e-3)
    eq = tc.TimeChange(1.5, 1.5, p)
    s = 0.9
    assert eq.inverse(s) == pytest.approx(s / 1.5, abs=1e-3)
    with pytest.raises(ValueError):
        t.inverse(t.grid_clock[-1] + 1.0)


def test_inverse_increments_subadditive():
    # A^-1(u+v) - A^-1(u) <= v (up to grid slack)
    p = tc.sample_path(1.0, 1e-3, seed=13)
    t = tc.TimeChange(2.0, 1.25, p)
    top = float(t.grid_clock[-1])
    gen = np.random.default_rng(0)
    u = gen.uniform(0, top * 0.7, size=300)
    v = gen.uniform(0, top * 0.3, size=300)
    gap = np.asarray(t.inverse(u + v)) - np.asarray(t.inverse(u))
    assert np.all(gap <= v + 1e-3 + 1e-12)
    assert np.all(gap >= -1e-12)


def test_oscillating_bm_identity_weights():
    p = tc.sample_path(1.0, 1e-3, seed=17)
    t = tc.TimeChange(1.0, 1.0, p)
    grid = p.grid[::50]
    y = t.oscillating_bm(grid)
    assert np.allclose(y, p.values[::50], atol=1e-9)
    assert t.oscillating_bm(np.array([0.0]))[0] == 0.0


def test_discrete_clock():
    assert tc.discrete_clock({0: 3, 2: 2, -1: 5}, 10, 1.5, 1.5) == pytest.approx(15.0)
    assert tc.discrete_clock({0: 4, 7: 6}, 10, 2.0, 1.0) == pytest.approx(20.0)
    mixed = tc.discrete_clock({1: 4, -2: 6}, 10, 2.0, 1.0)
    assert mixed == pytest.approx(2.0 * 4 + 1.0 * 6)
    with pytest.raises(ValueError):
        tc.discrete_clock({0: 3}, 10, 2.0, 1.0)


def test_vertical_clock_cdf_values():
    assert tc.vertical_clock_cdf(1.0, 0.5, 2.0, 1.0) == 0.0
    assert tc.vertical_clock_cdf(1.0, 1.0, 2.0, 1.0) == 1.0
    # arcsin(sqrt(1/2)) = pi/4 makes this exactly one half
    assert tc.vertical_clock_cdf(1.0, 2.0 / 3.0, 2.0, 1.0) == pytest.approx(0.5, abs=1e-12)
    v = np.linspace(0.4, 1.1, 400)
    f = tc.vertical_clock_cdf(1.0, v, 2.0, 1.0)
    assert np.all(np.diff(f) >= -1e-12)
    assert f[0] == 0.0 and f[-1] == 1.0
    with pytest.raises(ValueError):
        tc.vertical_clock_cdf(1.0, 0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        tc.vertical_clock_cdf(1.0, 0.5, 1.5, 2.0)


def test_vertical_clock_cdf_matches_density():
    t, g1, g2 = 1.0, 2.0, 1.0
    eps = 1e-6
    for v in (0.55, 0.6, 2.0 / 3.0, 0.8, 0.95):
        num = (tc.vertical_clock_cdf(t, v + eps, g1, g2)
               - tc.vertical_clock_cdf(t, v - eps, g1, g2)) / (2 * eps)
        assert num == pytest.approx(tc.vertical_clock_pdf(t, v, g1, g2), rel=1e-4)


def test_vertical_clock_density_integrates_to_one():
    for (g1, g2) in [(2.0, 1.0), (1.5, 1.0), (2.0, 1.25)]:
        val, err = quad(lambda v: tc.vertical_clock_pdf(1.0, v, g1, g2),
                        1.0 / g1, 1.0 / g2, limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)


def test_horizontal_clock_law():
    t, g1, g2 = 1.0, 2.0, 1.0
    # support collapses to (0, t(1 - 1/gamma1)) when gamma2 = 1
    assert tc.horizontal_clock_cdf(t, 0.0, g1, g2) == pytest.approx(0.0, abs=1e-12)
    assert tc.horizontal_clock_cdf(t, 0.5, g1, g2) == pytest.approx(1.0, abs=1e-12)
    # complement of the vertical law at v = 2/3
    assert tc.horizontal_clock_cdf(t, 1.0 / 3.0, g1, g2) == pytest.approx(0.5, abs=1e-12)
    val, err = quad(lambda v: tc.horizontal_clock_pdf(t, v, g1, g2), 0.0, 0.5,
                    limit=200)
    assert val == pytest.approx(1.0, abs=1e-6)
    # cdf equals the integral of the density over the support
    for v in (0.1, 0.25, 0.4):
        ival, _ = quad(lambda u: tc.horizontal_clock_pdf(t, u, g1, g2), 0.0, v,
                       limit=200)
        assert tc.horizontal_clock_cdf(t, v, g1, g2) == pytest.approx(ival, abs=1e-6)


def test_sup_tail_series():
    assert tc.oscillating_sup_tail(0.0, 1.0, 2.0, 1.0, k_max=50).value == pytest.approx(1.0, abs=1e-9)
    # equal weights collapse to the reflection tail
    for g in (1.0, 1.7):
        for y in (0.3, 1.0, 2.5):
            got = tc.oscillating_sup_tail(y, 1.0, g, g).value
            want = 2.0 * (1.0 - ndtr(y * math.sqrt(g)))
            assert got == pytest.approx(want, abs=1e-12)
    assert tc.oscillating_sup_tail(1.0, 1.0, 1.0, 1.0).value == pytest.approx(0.3173105, abs=1e-6)
    ys = np.linspace(0, 3, 40)
    vals = [tc.oscillating_sup_tail(float(y), 1.0, 2.0, 1.0).value for y in ys]
    assert np.all(np.diff(vals) <= 1e-12)
    assert tc.oscillating_sup_tail(1.0, 1.0, 2.0, 1.0, k_max=200).truncation_error < 1e-9
    with pytest.raises(ValueError):
        tc.oscillating_sup_tail(-0.1, 1.0, 2.0, 1.0)


def test_arcsine_cdf():
    assert tc.arcsine_cdf(0.0) == 0.0
    assert tc.arcsine_cdf(1.0) == pytest.approx(1.0)
    assert tc.arcsine_cdf(0.5) == pytest.approx(0.5)
    x = np.linspace(0, 1, 50)
    assert np.all(np.diff(tc.arcsine_cdf(x)) >= 0)


def test_inverse_clock_sampler_light():
    samples = tc.sample_inverse_clock(1.0, 2.0, 1.0, n_paths=600, dt=1e-3,
                                      master_seed=77)
    assert np.all(samples >= 0.5 - 1e-3) and np.all(samples <= 1.0 + 1e-3)
    from combwalk.analysis import ks_against

    res = ks_against(samples, lambda v: tc.vertical_clock_cdf(1.0, v, 2.0, 1.0))
    assert res.statistic < 0.1


def test_oscillating_marginal_self_consistency_light():
    a = tc.sample_oscillating_marginal(1.0, 2.0, 1.0, 800, 1e-3, master_seed=1)
    b = tc.sample_oscillating_marginal(1.0, 2.0, 1.0, 800, 1e-3, master_seed=2)
    from combwalk.analysis import ks_two_sample

    assert ks_two_sample(a, b).statistic < 0.08
