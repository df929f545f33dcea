"""Retained-level sets B and their scaling parameters.

A comb-type lattice keeps horizontal edges only on the y-levels in a set
B of integers.  BSpec describes B declaratively; membership and windowed
counts are pure functions of the description, so instances can be shared
freely across simulation workers.

The derived parameters are the two side densities (as gamma1/gamma2, each
1 + density, both in [1,2]) and the growth exponent beta of the window
count |B ∩ [-n, n]| ~ c * n^beta, which selects the scaling regime.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Grid for the numeric beta fit: dyadic windows, least squares on
# (log n, log count).  Analytic kinds override the fit.
_BETA_FIT_GRID = [2**k for k in range(10, 21)]
_COUNT_CHUNK = 1 << 20


class DegenerateSetError(ValueError):
    """Raised when an operation needs a nonempty B but got an empty one."""


@dataclass(frozen=True)
class BSpec:
    """Declarative description of the set B of retained horizontal levels.

    kind is one of finite, periodic, power_gap, halfplane, all_levels,
    union, difference.  Use the factory functions below rather than the
    constructor; they validate parameters.
    """

    kind: str
    levels: tuple = ()           # finite
    period_pos: int = 0          # periodic: keep j >= 0 with j % L == 0
    period_neg: int = 0          # periodic: keep j < 0 with j % K == 0
    alpha_pos: float = 0.0       # power_gap: keep +floor(k**alpha_pos)
    alpha_neg: float = 0.0       # power_gap: keep -floor(k**alpha_neg)
    left: Optional["BSpec"] = None
    right: Optional["BSpec"] = None

    # -- membership ---------------------------------------------------

    def contains(self, y: int) -> bool:
        k = self.kind
        if k == "finite":
            i = bisect_left(self.levels, y)
            return i < len(self.levels) and self.levels[i] == y
        if k == "periodic":
            return (y % self.period_pos == 0) if y >= 0 else (y % self.period_neg == 0)
        if k == "halfplane":
            return y >= 0
        if k == "all_levels":
            return True
        if k == "power_gap":
            if y == 0:
                return True
            alpha = self.alpha_pos if y > 0 else self.alpha_neg
            return _is_power_floor(abs(y), alpha)
        if k == "union":
            return self.left.contains(y) or self.right.contains(y)
        if k == "difference":
            return self.left.contains(y) and not self.right.contains(y)
        raise ValueError(f"unknown BSpec kind {k!r}")

    def contains_array(self, y: np.ndarray) -> np.ndarray:
        """Vectorized membership for an integer array of any shape."""
        k = self.kind
        if k == "finite":
            if not self.levels:
                return np.zeros(y.shape, dtype=bool)
            return np.isin(y, np.asarray(self.levels, dtype=np.int64))
        if k == "periodic":
            return np.where(y >= 0, y % self.period_pos == 0, y % self.period_neg == 0)
        if k == "halfplane":
            return y >= 0
        if k == "all_levels":
            return np.ones(y.shape, dtype=bool)
        if k == "power_gap":
            out = _is_power_floor_array(np.abs(y), np.where(y > 0, self.alpha_pos, self.alpha_neg))
            return out | (y == 0)
        if k == "union":
            return self.left.contains_array(y) | self.right.contains_array(y)
        if k == "difference":
            return self.left.contains_array(y) & ~self.right.contains_array(y)
        raise ValueError(f"unknown BSpec kind {k!r}")

    # -- counting -----------------------------------------------------

    def count_window(self, n: int) -> int:
        """Exact number of elements of B in the window [-n, n]."""
        if n < 0:
            raise ValueError("window radius must be nonnegative")
        return self.count_side(n, +1) + self.count_side(n, -1) + int(self.contains(0))

    def count_side(self, n: int, sign: int) -> int:
        """|B ∩ [1, n]| for sign=+1, |B ∩ [-n, -1]| for sign=-1."""
        if n <= 0:
            return 0
        k = self.kind
        if k == "finite":
            if sign > 0:
                return bisect_right(self.levels, n) - bisect_right(self.levels, 0)
            return bisect_left(self.levels, 0) - bisect_left(self.levels, -n)
        if k == "periodic":
            return n // (self.period_pos if sign > 0 else self.period_neg)
        if k == "halfplane":
            return n if sign > 0 else 0
        if k == "all_levels":
            return n
        if k == "power_gap":
            return _count_power_floors(n, self.alpha_pos if sign > 0 else self.alpha_neg)
        # composite kinds: brute force over the window, chunked
        total = 0
        lo = 1
        while lo <= n:
            hi = min(n, lo + _COUNT_CHUNK - 1)
            ys = np.arange(lo, hi + 1, dtype=np.int64)
            if sign < 0:
                ys = -ys
            total += int(self.contains_array(ys).sum())
            lo = hi + 1
        return total

    def is_empty_on(self, n: int) -> bool:
        return self.count_window(n) == 0

    def is_finite_kind(self) -> bool:
        """True when B is known finite from its description alone."""
        if self.kind == "finite":
            return True
        if self.kind == "difference":
            return self.left.is_finite_kind()
        if self.kind == "union":
            return self.left.is_finite_kind() and self.right.is_finite_kind()
        return False

    def describe(self) -> dict:
        """JSON-serializable tagged record (config echo format)."""
        k = self.kind
        if k == "finite":
            return {"kind": k, "levels": list(self.levels)}
        if k == "periodic":
            return {"kind": k, "L": self.period_pos, "K": self.period_neg}
        if k == "power_gap":
            return {"kind": k, "alpha_pos": self.alpha_pos, "alpha_neg": self.alpha_neg}
        if k in ("halfplane", "all_levels"):
            return {"kind": k}
        return {"kind": k, "left": self.left.describe(), "right": self.right.describe()}

    def __str__(self) -> str:
        d = self.describe()
        k = d.pop("kind")
        args = ", ".join(f"{k2}={v}" for k2, v in d.items())
        return f"{k}({args})" if args else k


# -- factories ---------------------------------------------------------


def finite(levels) -> BSpec:
    lv = tuple(sorted(set(int(v) for v in levels)))
    return BSpec("finite", levels=lv)


def periodic(L: int, K: int) -> BSpec:
    if L < 1 or K < 1:
        raise ValueError("periodic parameters L, K must be >= 1")
    return BSpec("periodic", period_pos=int(L), period_neg=int(K))


def power_gap(alpha_pos: float, alpha_neg: float) -> BSpec:
    if alpha_pos <= 1 or alpha_neg <= 1:
        raise ValueError("power_gap exponents must be > 1")
    return BSpec("power_gap", alpha_pos=float(alpha_pos), alpha_neg=float(alpha_neg))


def halfplane() -> BSpec:
    return BSpec("halfplane")


def all_levels() -> BSpec:
    return BSpec("all_levels")


def union(a: BSpec, b: BSpec) -> BSpec:
    return BSpec("union", left=a, right=b)


def difference(a: BSpec, b: BSpec) -> BSpec:
    return BSpec("difference", left=a, right=b)


def two_dim_comb() -> BSpec:
    """The classical 2-dimensional comb: horizontal edges on the x-axis only."""
    return finite([0])


def mixed_hphc(alpha_remove: float, alpha_add: float) -> BSpec:
    """Half-plane-half-comb variant with power-law perturbations.

    Starts from the half plane (all j >= 0 kept), removes the levels
    floor(k**alpha_remove) for k >= 1, and adds the levels
    -floor(k**alpha_add) for k >= 1 below the axis.
    """
    negatives = difference(all_levels(), halfplane())
    removed = difference(power_gap(alpha_remove, alpha_remove), union(finite([0]), negatives))
    added = difference(power_gap(alpha_add, alpha_add), halfplane())
    return union(difference(halfplane(), removed), added)


def from_record(rec: dict) -> BSpec:
    """Inverse of BSpec.describe()."""
    kind = rec["kind"]
    if kind == "finite":
        return finite(rec["levels"])
    if kind == "periodic":
        return periodic(rec["L"], rec["K"])
    if kind == "power_gap":
        return power_gap(rec["alpha_pos"], rec["alpha_neg"])
    if kind == "halfplane":
        return halfplane()
    if kind == "all_levels":
        return all_levels()
    if kind == "union":
        return union(from_record(rec["left"]), from_record(rec["right"]))
    if kind == "difference":
        return difference(from_record(rec["left"]), from_record(rec["right"]))
    raise ValueError(f"unknown BSpec kind {kind!r}")


# -- floor(k**alpha) arithmetic ----------------------------------------


def _is_power_floor(y: int, alpha: float) -> bool:
    """Does floor(k**alpha) == y hold for some integer k >= 1?"""
    k0 = int(math.floor(y ** (1.0 / alpha)))
    for k in range(max(1, k0 - 2), k0 + 3):
        if int(math.floor(k**alpha)) == y:
            return True
    return False


def _is_power_floor_array(y: np.ndarray, alpha) -> np.ndarray:
    yf = np.maximum(y, 1).astype(np.float64)
    k0 = np.floor(yf ** (1.0 / np.asarray(alpha, dtype=np.float64)))
    hit = np.zeros(y.shape, dtype=bool)
    for off in (-2, -1, 0, 1, 2):
        k = np.maximum(k0 + off, 1.0)
        hit |= np.floor(k**alpha) == y
    return hit & (y > 0)


def _count_power_floors(n: int, alpha: float) -> int:
    """#{k >= 1: floor(k**alpha) <= n} (the floors are distinct for alpha > 1)."""
    if n < 1:
        return 0
    k = int(math.floor((n + 0.5) ** (1.0 / alpha)))
    while k >= 1 and math.floor(k**alpha) > n:
        k -= 1
    while math.floor((k + 1) ** alpha) <= n:
        k += 1
    return k


# -- derived model parameters ------------------------------------------


@dataclass
class ModelParams:
    """Scaling parameters of a comb-type walk on a given B.

    gamma1/gamma2 are 1 + (upper density of B on the positive/negative
    side); both lie in [1, 2].  beta is the growth exponent of the window
    count.  tau and c_beta are carried for reporting only and drive no
    computation.
    """

    gamma1: float
    gamma2: float
    beta: float
    tau: Optional[float] = None
    c_beta: Optional[float] = None
    degenerate_fit: bool = False
    # per-side diagnostics for mixed (union/difference) sets
    density_pos: Optional[float] = None
    density_neg: Optional[float] = None
    beta_pos: Optional[float] = None
    beta_neg: Optional[float] = None

    def __post_init__(self):
        if not (1.0 <= self.gamma1 <= 2.0 and 1.0 <= self.gamma2 <= 2.0):
            raise ValueError("gamma1, gamma2 must lie in [1, 2]")
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError("beta must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def derive_params(b: BSpec, n_probe: int = 10**6) -> ModelParams:
    """Compute (gamma1, gamma2, beta) for a B-set.

    Closed forms are used for the analytically known kinds; composite
    kinds fall back to windowed counting at n_probe for the densities and
    a log-log fit over dyadic windows for beta.
    """
    if n_probe < 1:
        raise ValueError("n_probe must be positive")
    k = b.kind
    if k == "finite":
        size = len(b.levels)
        return ModelParams(1.0, 1.0, 0.0, tau=None,
                           c_beta=float(size) if size else None,
                           degenerate_fit=(size == 0),
                           density_pos=0.0, density_neg=0.0)
    if k == "periodic":
        L, K = b.period_pos, b.period_neg
        return ModelParams((L + 1) / L, (K + 1) / K, 1.0, tau=1.0,
                           c_beta=1.0 / L + 1.0 / K,
                           density_pos=1.0 / L, density_neg=1.0 / K)
    if k == "halfplane":
        return ModelParams(2.0, 1.0, 1.0, tau=1.0, c_beta=1.0,
                           density_pos=1.0, density_neg=0.0)
    if k == "all_levels":
        return ModelParams(2.0, 2.0, 1.0, tau=1.0, c_beta=2.0,
                           density_pos=1.0, density_neg=1.0)
    if k == "power_gap":
        beta = 1.0 / min(b.alpha_pos, b.alpha_neg)
        c = 2.0 if b.alpha_pos == b.alpha_neg else 1.0
        return ModelParams(1.0, 1.0, beta, tau=None, c_beta=c,
                           density_pos=0.0, density_neg=0.0)

    # composite: numeric estimation
    cpos = b.count_side(n_probe, +1)
    cneg = b.count_side(n_probe, -1)
    dpos, dneg = cpos / n_probe, cneg / n_probe
    grid = [n for n in _BETA_FIT_GRID if n <= max(n_probe, _BETA_FIT_GRID[-1])]
    counts = [b.count_window(n) for n in grid]
    beta, c, degenerate = _loglog_slope(grid, counts)
    bpos, _, _ = _loglog_slope(grid, [b.count_side(n, +1) for n in grid])
    bneg, _, _ = _loglog_slope(grid, [b.count_side(n, -1) for n in grid])
    return ModelParams(min(1.0 + dpos, 2.0), min(1.0 + dneg, 2.0),
                       min(max(beta, 0.0), 1.0), tau=None,
                       c_beta=c, degenerate_fit=degenerate,
                       density_pos=dpos, density_neg=dneg,
                       beta_pos=bpos, beta_neg=bneg)


def _loglog_slope(ns, counts):
    """OLS slope/intercept of log(count) on log(n); skips zero counts."""
    xs = [math.log(n) for n, c in zip(ns, counts) if c > 0]
    ys = [math.log(c) for c in counts if c > 0]
    if len(xs) < 2:
        return 0.0, None, True
    A = np.vstack([xs, np.ones(len(xs))]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, np.asarray(ys), rcond=None)
    return float(slope), float(math.exp(intercept)), False


def classify_regime(b: BSpec, params: Optional[ModelParams] = None) -> Optional[str]:
    """Map a B-set to its scaling regime: beta1, beta_mid or beta0.

    Composite sets are not classified automatically (their two sides may
    sit in different regimes); callers must choose explicitly.
    """
    if b.kind in ("union", "difference"):
        return None
    p = params if params is not None else derive_params(b)
    if p.beta == 0.0:
        return "beta0"
    if p.beta == 1.0:
        return "beta1"
    return "beta_mid"
