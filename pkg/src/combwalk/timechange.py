"""Occupation time change of Brownian motion and its closed-form laws.

The clock A(t) weights the time a Wiener path spends on each half-line:
A(t) = gamma1 * (time with W >= 0 up to t) + gamma2 * (time with W < 0).
Its inverse turns W into an oscillating Brownian motion W(A^-1(t)), the
scaling limit of the vertical walk component when the two side densities
of B differ.  This module provides discretized paths, the clock and its
inverse, the discrete-walk analogue of the clock, exact CDFs/densities of
A^-1(t) and t - A^-1(t), the series formula for the supremum tail of the
oscillating motion, and seeded Monte Carlo samplers used to cross-check
the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import ndtr

from .rng import gaussian_generator, split_seed


@dataclass(frozen=True)
class BrownianPath:
    """Wiener path on a uniform grid of step dt over [0, horizon].

    values[k] = W(k*dt) with W(0) = 0.  cum_nonneg[k] is the left-endpoint
    Riemann sum of the time spent with W >= 0 strictly before k*dt; it is
    nondecreasing and bounded by k*dt.
    """

    horizon: float
    dt: float
    values: np.ndarray
    cum_nonneg: np.ndarray
    seed: int

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt


def sample_path(horizon: float, dt: float, seed: int) -> BrownianPath:
    """Draw a discretized Wiener path, one Gaussian increment per cell."""
    if horizon <= 0 or dt <= 0:
        raise ValueError("horizon and dt must be positive")
    m = int(math.floor(horizon / dt)) + 1
    gen = gaussian_generator(seed)
    values = np.zeros(m)
    np.cumsum(gen.standard_normal(m - 1) * math.sqrt(dt), out=values[1:])
    cum = np.zeros(m)
    np.cumsum((values[:-1] >= 0.0) * dt, out=cum[1:])
    return BrownianPath(horizon=horizon, dt=dt, values=values,
                        cum_nonneg=cum, seed=seed)


@dataclass
class TimeChange:
    """The occupation clock of one path with side weights gamma1, gamma2.

    gamma1 applies where the path is >= 0, gamma2 where it is < 0; both
    must be >= 1.  The parameters are used exactly as given (no silent
    reordering); the closed-form laws below additionally require
    gamma1 > gamma2.
    """

    gamma1: float
    gamma2: float
    path: BrownianPath

    def __post_init__(self):
        if self.gamma1 < 1.0 or self.gamma2 < 1.0:
            raise ValueError("gamma1 and gamma2 must be >= 1")
        g = self.path.grid
        self._clock = self.gamma2 * g + (self.gamma1 - self.gamma2) * self.path.cum_nonneg

    @property
    def grid_clock(self) -> np.ndarray:
        """A evaluated on the path grid (nondecreasing)."""
        return self._clock

    def _snap(self, t: float) -> int:
        last = self.path.values.size - 1
        if t < 0 or t > self.path.grid[last] + 0.5 * self.path.dt:
            raise ValueError(f"time {t} outside the path horizon")
        return min(int(round(t / self.path.dt)), last)

    def clock(self, t: float) -> float:
        """A(t) at the nearest grid point; gamma2*t <= A(t) <= gamma1*t."""
        return float(self._clock[self._snap(t)])

    def drift(self, t: float) -> float:
        """A(t) - t, nondecreasing since both weights are >= 1."""
        k = self._snap(t)
        return float(self._clock[k] - self.path.grid[k])

    def inverse(self, s) -> np.ndarray | float:
        """Monotone inverse of the clock, exact within each grid cell.

        A is piecewise linear between grid points (the indicator is held
        constant over each cell), so linear interpolation inverts it
        exactly; the sandwich s/gamma1 <= A^-1(s) <= s/gamma2 holds up to
        one dt of slack.
        """
        s_arr = np.asarray(s, dtype=np.float64)
        if np.any(s_arr < -1e-12) or np.any(s_arr > self._clock[-1] + 1e-12):
            raise ValueError("clock argument outside [0, A(horizon)]")
        out = np.interp(s_arr, self._clock, self.path.grid)
        return out if s_arr.ndim else float(out)

    def oscillating_bm(self, t_grid) -> np.ndarray:
        """Sample the time-changed path W(A^-1(t)) on the given times."""
        r = np.asarray(self.inverse(t_grid), dtype=np.float64)
        return np.interp(r, self.path.grid, self.path.values)


def discrete_clock(local_times: dict, n: int, gamma1: float, gamma2: float) -> float:
    """Walk analogue of the clock from a simple-walk local-time table.

    local_times maps level -> number of visits during steps 1..n (the
    counts must sum to n).  Returns gamma1 * (time at levels >= 0) +
    gamma2 * (time at levels < 0); always between gamma2*n and gamma1*n.
    """
    t_pos = sum(c for lv, c in local_times.items() if lv >= 0)
    t_neg = sum(c for lv, c in local_times.items() if lv < 0)
    if t_pos + t_neg != n:
        raise ValueError(f"local time counts sum to {t_pos + t_neg}, expected {n}")
    return gamma1 * t_pos + gamma2 * t_neg


# ----------------------------------------------------------------------
# closed-form laws
# ----------------------------------------------------------------------


def _check_gammas(gamma1: float, gamma2: float):
    if not gamma1 > gamma2 >= 1.0:
        raise ValueError("closed-form laws require gamma1 > gamma2 >= 1 "
                         "(equal weights give a point mass at t/gamma)")


def arcsine_cdf(x) -> np.ndarray | float:
    """CDF of the arcsine law on [0, 1]: (2/pi) * arcsin(sqrt(x))."""
    xa = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    out = (2.0 / math.pi) * np.arcsin(np.sqrt(xa))
    return out if np.ndim(x) else float(out)

def vertical_clock_cdf(t: float, v, gamma1: float, gamma2: float):
    """CDF of A^-1(t), the limit law of the vertical step count V_N/N.

    Supported on (t/gamma1, t/gamma2); inside the support the value is
    1 - (2/pi) * arcsin(sqrt((t - gamma2 v) / (v (gamma1 - gamma2)))).
    """
    _check_gammas(gamma1, gamma2)
    if t <= 0:
        raise ValueError("t must be positive")
    va = np.asarray(v, dtype=np.float64)
    lo, hi = t / gamma1, t / gamma2
    inside = (va > lo) & (va < hi)
    arg = np.empty_like(va)
    arg.fill(0.0)
    np.divide(t - gamma2 * va, va * (gamma1 - gamma2), out=arg, where=inside)
    out = np.where(va <= lo, 0.0, np.where(va >= hi, 1.0,
                   1.0 - (2.0 / math.pi) * np.arcsin(np.sqrt(np.clip(arg, 0.0, 1.0)))))
    return out if np.ndim(v) else float(out)


def vertical_clock_pdf(t: float, v, gamma1: float, gamma2: float):
    """Density of A^-1(t): t / (pi v sqrt((v gamma1 - t)(t - gamma2 v)))."""
    _check_gammas(gamma1, gamma2)
    va = np.asarray(v, dtype=np.float64)
    inside = (va > t / gamma1) & (va < t / gamma2)
    rad = np.ones_like(va)
    np.multiply(va * gamma1 - t, t - gamma2 * va, out=rad, where=inside)
    out = np.zeros_like(va)
    np.divide(t, math.pi * va * np.sqrt(np.abs(rad)), out=out, where=inside)
    return out if np.ndim(v) else float(out)


def horizontal_clock_cdf(t: float, v, gamma1: float, gamma2: float):
    """CDF of t - A^-1(t), the horizontal-clock limit law.

    Supported on (t(1 - 1/gamma2), t(1 - 1/gamma1)); obtained from the
    vertical law by the complement transform v -> t - v.
    """
    va = np.asarray(v, dtype=np.float64)
    out = 1.0 - np.asarray(vertical_clock_cdf(t, t - va, gamma1, gamma2))
    return out if np.ndim(v) else float(out)


def horizontal_clock_pdf(t: float, v, gamma1: float, gamma2: float):
    """Density of t - A^-1(t) on its support."""
    _check_gammas(gamma1, gamma2)
    va = np.asarray(v, dtype=np.float64)
    lo, hi = t * (1.0 - 1.0 / gamma2), t * (1.0 - 1.0 / gamma1)
    inside = (va > lo) & (va < hi)
    rad = np.ones_like(va)
    np.multiply((gamma1 - 1.0) * t - gamma1 * va,
                t * (1.0 - gamma2) + gamma2 * va, out=rad, where=inside)
    out = np.zeros_like(va)
    np.divide(t, math.pi * (t - va) * np.sqrt(np.abs(rad)), out=out, where=inside)
    return out if np.ndim(v) else float(out)


class SupTail(NamedTuple):
    value: float
    truncation_error: float
    k_max: int


def oscillating_sup_tail(y: float, t: float, gamma1: float, gamma2: float,
                         k_max: int = 200) -> SupTail:
    """Tail P(sup_{s<=t} W(A^-1(s)) > y) of the oscillating motion.

    Partial sum of the alternating series
        4 sqrt(g1)/(sqrt(g1)+sqrt(g2)) *
        sum_k ((sqrt(g2)-sqrt(g1))/(sqrt(g1)+sqrt(g2)))^k *
              (1 - Phi((2k+1) sqrt(g1) y / sqrt(t)))
    through k_max, with the geometric truncation bound reported.  For
    gamma1 == gamma2 the series collapses to the reflection-principle
    tail 2(1 - Phi(y sqrt(gamma)/sqrt(t))).
    """
    if y < 0:
        raise ValueError("y must be >= 0")
    if t <= 0:
        raise ValueError("t must be positive")
    if gamma1 < 1.0 or gamma2 < 1.0:
        raise ValueError("gamma1 and gamma2 must be >= 1")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    s1, s2 = math.sqrt(gamma1), math.sqrt(gamma2)
    ratio = (s2 - s1) / (s1 + s2)
    pref = 4.0 * s1 / (s1 + s2)
    ks = np.arange(k_max + 1)
    tails = ndtr(-(2.0 * ks + 1.0) * s1 * y / math.sqrt(t))
    total = pref * float(np.sum(np.power(ratio, ks) * tails))
    if ratio == 0.0:
        bound = 0.0
    else:
        bound = abs(ratio) ** (k_max + 1) / (1.0 - abs(ratio))
    return SupTail(value=min(max(total, 0.0), 1.0),
                   truncation_error=bound, k_max=k_max)


# ----------------------------------------------------------------------
# Monte Carlo samplers (independent cross-checks of the laws above)
# ----------------------------------------------------------------------


def sample_inverse_clock(t: float, gamma1: float, gamma2: float,
                         n_paths: int, dt: float, master_seed: int) -> np.ndarray:
    """A^-1(t) over n_paths independent discretized paths."""
    if not gamma1 >= gamma2 >= 1.0:
        raise ValueError("need gamma1 >= gamma2 >= 1")
    horizon = t / gamma2 + 2.0 * dt
    out = np.empty(n_paths)
    for i in range(n_paths):
        tc = TimeChange(gamma1, gamma2,
                        sample_path(horizon, dt, split_seed(master_seed, i)))
        out[i] = tc.inverse(t)
    return out


def sample_oscillating_sup(t: float, gamma1: float, gamma2: float,
                           n_paths: int, dt: float, master_seed: int) -> np.ndarray:
    """sup_{s<=t} W(A^-1(s)) over independent paths.

    The sup over s in [0, t] equals the running maximum of W over
    [0, A^-1(t)], evaluated on the grid.
    """
    if not gamma1 >= gamma2 >= 1.0:
        raise ValueError("need gamma1 >= gamma2 >= 1")
    horizon = t / gamma2 + 2.0 * dt
    out = np.empty(n_paths)
    for i in range(n_paths):
        path = sample_path(horizon, dt, split_seed(master_seed, i))
        tc = TimeChange(gamma1, gamma2, path)
        r = tc.inverse(t)
        k = int(math.floor(r / dt))          # grid points at or before A^-1(t)
        out[i] = path.values[:k + 1].max(initial=0.0)
    return out


def sample_oscillating_marginal(t: float, gamma1: float, gamma2: float,
                                n_paths: int, dt: float, master_seed: int) -> np.ndarray:
    """W(A^-1(t)) over independent paths (marginal of the oscillating motion)."""
    if not gamma1 >= gamma2 >= 1.0:
        raise ValueError("need gamma1 >= gamma2 >= 1")
    horizon = t / gamma2 + 2.0 * dt
    out = np.empty(n_paths)
    for i in range(n_paths):
        path = sample_path(horizon, dt, split_seed(master_seed, i))
        tc = TimeChange(gamma1, gamma2, path)
        out[i] = tc.oscillating_bm(np.array([t]))[0]
    return out
