"""Exact small-step enumeration, distribution statistics and diagnostics.

The enumeration oracle applies the exact transition kernel with rational
arithmetic, so engine output can be compared against ground truth with no
rounding.  The remaining tools are the empirical statistics the
experiments report: total variation against the oracle, one- and
two-sample Kolmogorov-Smirnov, log-log slope fits for the scaling
exponents, and the (reported, never asserted) iterated-logarithm envelope
ratios.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional

import numpy as np

from .bset import BSpec, ModelParams, derive_params
from .engine import EnsembleSummary, WalkTrace

EXACT_ENUMERATION_CAP = 14


@dataclass
class ExactDist:
    """Exact law of the walk position after n steps (rational masses)."""

    n: int
    pmf: dict

    def prob(self, x: int, y: int) -> Fraction:
        return self.pmf.get((x, y), Fraction(0))

    def total(self) -> Fraction:
        return sum(self.pmf.values(), Fraction(0))


def exact_distribution(b: BSpec, n: int) -> ExactDist:
    """Dynamic programming over the exact kernel from the origin.

    All transition masses are dyadic rationals (1/4 on retained levels,
    1/2 elsewhere), so Fractions keep the result exact.  Capped at
    n <= 14; the support grows quadratically.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > EXACT_ENUMERATION_CAP:
        raise ValueError(f"exact enumeration capped at n={EXACT_ENUMERATION_CAP}")
    quarter, half = Fraction(1, 4), Fraction(1, 2)
    pmf = {(0, 0): Fraction(1)}
    for _ in range(n):
        nxt = defaultdict(Fraction)
        for (x, y), p in pmf.items():
            if b.contains(y):
                q = p * quarter
                nxt[(x + 1, y)] += q
                nxt[(x - 1, y)] += q
                nxt[(x, y + 1)] += q
                nxt[(x, y - 1)] += q
            else:
                q = p * half
                nxt[(x, y + 1)] += q
                nxt[(x, y - 1)] += q
        pmf = dict(nxt)
    return ExactDist(n=n, pmf=pmf)


def tv_distance(exact: ExactDist, empirical: Mapping) -> float:
    """Total variation between the oracle law and empirical frequencies.

    empirical maps lattice points to counts (or weights).  Points that are
    unreachable in exact.n steps for parity or range reasons indicate a
    step-count mismatch and raise.
    """
    total = float(sum(empirical.values()))
    if total <= 0:
        raise ValueError("empirical distribution has no mass")
    n = exact.n
    for (x, y), c in empirical.items():
        if c and (abs(x) + abs(y) > n or (x + y - n) % 2 != 0):
            raise ValueError(f"point {(x, y)} unreachable in {n} steps: "
                             "step-count mismatch")
    points = set(exact.pmf) | set(empirical)
    acc = 0.0
    for pt in points:
        acc += abs(float(exact.pmf.get(pt, 0)) - empirical.get(pt, 0) / total)
    return 0.5 * acc


def empirical_counts(x: np.ndarray, y: np.ndarray) -> dict:
    """Frequency table of final positions from ensemble arrays."""
    key = (x.astype(np.int64) << np.int64(32)) ^ (y.astype(np.int64) & np.int64(0xFFFFFFFF))
    vals, counts = np.unique(key, return_counts=True)
    xs = (vals >> np.int64(32)).astype(np.int64)
    ys = (vals & np.int64(0xFFFFFFFF)).astype(np.int32).astype(np.int64)
    return {(int(a), int(b)): int(c) for a, b, c in zip(xs, ys, counts)}


@dataclass
class KSResult:
    statistic: float
    n_samples: int
    reference: str

    def __str__(self):
        return f"KS={self.statistic:.5f} (n={self.n_samples}, vs {self.reference})"


def ks_against(samples, cdf: Callable, reference: str = "cdf",
               jump_points=None) -> KSResult:
    """One-sample Kolmogorov-Smirnov statistic against a reference CDF.

    Exact sup-distance of the ECDF from the reference, evaluated at the
    sample points (both sides of each ECDF jump) and at any supplied
    reference jump points.  The reference is probed for monotonicity on
    the sample range.
    """
    s = np.sort(np.asarray(samples, dtype=np.float64))
    n = s.size
    if n == 0:
        raise ValueError("empty sample")
    f = np.asarray(cdf(s), dtype=np.float64)
    if np.any(np.diff(f) < -1e-12):
        raise ValueError("reference cdf is not monotone on the sample range")
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - f))
    d_minus = float(np.max(f - (i - 1) / n))
    stat = max(d_plus, d_minus)
    if jump_points is not None:
        q = np.asarray(jump_points, dtype=np.float64)
        ecdf_q = np.searchsorted(s, q, side="right") / n
        stat = max(stat, float(np.max(np.abs(ecdf_q - np.asarray(cdf(q))))))
    return KSResult(statistic=stat, n_samples=n, reference=reference)


def ks_two_sample(a, b, reference: str = "reference sample") -> KSResult:
    """Two-sample KS statistic (used where the reference is itself MC)."""
    from scipy.stats import ks_2samp

    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    stat = float(ks_2samp(a, b, method="asymp").statistic)
    return KSResult(statistic=stat, n_samples=a.size, reference=reference)


def ecdf(samples) -> tuple[np.ndarray, np.ndarray]:
    """Sorted sample points and right-continuous ECDF values."""
    s = np.sort(np.asarray(samples, dtype=np.float64))
    return s, np.arange(1, s.size + 1) / s.size


@dataclass
class SlopeFit:
    """Least-squares line through (log n, log value) points."""

    slope: float
    intercept: float
    stderr: float
    points: list

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "stderr": self.stderr, "points": self.points}


def fit_exponent(values: Mapping[int, float]) -> SlopeFit:
    """OLS slope of log(value) against log(n).

    Needs at least 4 distinct n spanning two decades, or at least 6
    points; multiplying all values by a constant moves only the
    intercept.
    """
    ns = sorted(values)
    if any(values[n] <= 0 for n in ns):
        raise ValueError("values must be positive for a log-log fit")
    k = len(ns)
    if not ((k >= 4 and ns[-1] / ns[0] >= 100) or k >= 6):
        raise ValueError("insufficient points: need >= 4 spanning two decades, or >= 6")
    xs = np.log(np.asarray(ns, dtype=np.float64))
    ys = np.log(np.asarray([values[n] for n in ns]))
    xbar = xs.mean()
    sxx = float(np.sum((xs - xbar) ** 2))
    slope = float(np.sum((xs - xbar) * (ys - ys.mean())) / sxx)
    intercept = float(ys.mean() - slope * xbar)
    resid = ys - (intercept + slope * xs)
    dof = max(k - 2, 1)
    stderr = float(math.sqrt(float(np.sum(resid**2)) / dof / sxx))
    return SlopeFit(slope=slope, intercept=intercept, stderr=stderr,
                    points=[(float(a), float(b)) for a, b in zip(xs, ys)])


# ----------------------------------------------------------------------
# iterated-logarithm envelopes and the general-position diagnostics
# ----------------------------------------------------------------------

# a.s. limit constants printed next to the observed ratios
BETA0_C1_LIMIT = 2.0 ** 1.25 / 3.0 ** 0.75


def _loglog(n: float) -> float:
    return math.log(math.log(n))


def _ratio_summary(values: np.ndarray, target: Optional[float] = None) -> dict:
    v = np.asarray(values, dtype=np.float64)
    out = {"min": float(v.min()), "median": float(np.median(v)),
           "max": float(v.max())}
    if target is not None:
        out["target"] = target
    return out


def _final_arrays(data) -> tuple[dict, int, Optional[dict]]:
    """Accept an EnsembleSummary or a list of WalkTraces."""
    if isinstance(data, EnsembleSummary):
        obs = data.observables
        need = {"x", "y", "m1", "m2", "h_count", "v_count", "d2"}
        if not need <= set(obs):
            raise ValueError("summary lacks envelope trackers; request the "
                             "'envelope_ratios' observable")
        return {k: np.asarray(obs[k]) for k in need}, data.n_steps, data.checkpoints
    traces = list(data)
    if not traces:
        raise ValueError("no traces supplied")
    n = traces[0].n_steps
    if any(t.n_steps != n for t in traces):
        raise ValueError("traces have differing lengths")
    arrays = {k: np.array([getattr(t, a) for t in traces], dtype=np.int64)
              for k, a in [("x", "x"), ("y", "y"), ("m1", "m1"), ("m2", "m2"),
                           ("h_count", "h_count"), ("v_count", "v_count"),
                           ("d2", "d2")]}
    cps = None
    if all(t.checkpoints for t in traces):
        steps = [row["step"] for row in traces[0].checkpoints]
        cps = {s: {k: np.array([t.checkpoints[i][k] for t in traces], dtype=np.int64)
                   for k in ("x", "y", "m1", "m2")}
               for i, s in enumerate(steps)}
    return arrays, n, cps


def envelope_diagnostics(data, regime: str, b: BSpec,
                         params: Optional[ModelParams] = None) -> dict:
    """Normalized max/ratio report against the iterated-logarithm limits.

    The a.s. constants are not reachable at any finite horizon; the report
    therefore carries wide observational summaries (min/median/max across
    replicas, max as a crude limsup proxy) next to the limit constants for
    inspection.  Nothing here asserts.
    """
    if regime not in ("beta1", "beta_mid", "beta0"):
        raise ValueError(f"unknown regime {regime!r}")
    if params is None:
        params = derive_params(b)
    if regime == "beta0" and not b.is_finite_kind():
        raise ValueError("beta0 regime requires a finite B")
    if regime == "beta1" and params.beta < 1.0:
        raise ValueError(f"beta1 regime requested but beta={params.beta}")

    arrays, n, checkpoints = _final_arrays(data)
    llg = _loglog(n)
    x, y = arrays["x"], arrays["y"]
    m1, m2 = arrays["m1"], arrays["m2"]

    ratios = {
        "c2max_over_lil": _ratio_summary(m2 / math.sqrt(2.0 * n * llg), target=1.0),
        "c2max_chung": _ratio_summary(m2 * math.sqrt(8.0 * llg / (math.pi**2 * n)),
                                      target=1.0),
    }
    constants = {"chung_normalizer": math.sqrt(8.0 * llg / (math.pi**2 * n))}
    if regime == "beta1":
        g1 = params.gamma1
        c1_limit = math.sqrt(2.0 * (1.0 - 1.0 / g1))
        c2_limit = math.sqrt(2.0 / g1)
        ratios["c1_over_sqrt_nllg"] = _ratio_summary(x / math.sqrt(n * llg),
                                                     target=c1_limit)
        ratios["c2_over_sqrt_nllg"] = _ratio_summary(y / math.sqrt(n * llg),
                                                     target=c2_limit)
        ratios["m1_over_sqrt_nllg"] = _ratio_summary(m1 / math.sqrt(n * llg),
                                                     target=c1_limit)
        constants["c1_limsup"] = c1_limit
        constants["c2_limsup"] = c2_limit
    elif regime == "beta0":
        size = float(len(b.levels)) if b.kind == "finite" else float(b.count_window(10**6))
        norm = math.sqrt(size) * n**0.25 * llg**0.75
        ratios["c1_beta0"] = _ratio_summary(x / norm, target=BETA0_C1_LIMIT)
        ratios["m1_beta0"] = _ratio_summary(m1 / norm, target=BETA0_C1_LIMIT)
        constants["c1_limsup"] = BETA0_C1_LIMIT
    else:
        beta = params.beta
        up = n ** ((1.0 + beta) / 4.0) * llg ** ((3.0 + beta) / 4.0)
        lo = n ** ((1.0 + beta) / 4.0) / math.log(n) ** ((1.0 + beta) / 2.0 + 0.1)
        ratios["c1_upper_band"] = _ratio_summary(np.abs(x) / up)
        ratios["c1_lower_band"] = _ratio_summary(np.abs(x) / lo)
        constants["exponent"] = (1.0 + beta) / 4.0

    report = {"regime": regime, "n_steps": n, "n_replicas": int(x.size),
              "constants": constants, "ratios": ratios}
    if checkpoints:
        rows = {}
        for step, cols in sorted(checkpoints.items()):
            if step < 16:
                continue     # loglog undefined territory
            ll = _loglog(step)
            rows[step] = {
                "c1_over_sqrt_nllg": float(np.max(cols["x"] / math.sqrt(step * ll))),
                "c2max_over_lil": float(np.max(cols["m2"] / math.sqrt(2.0 * step * ll))),
            }
        report["checkpoint_max_ratios"] = rows
    return report


def facts_report(trace: WalkTrace, b: BSpec, eps: float = 0.1) -> dict:
    """Per-trace diagnostics for the universal local-time/maximum facts.

    Monitored, never asserted: each entry is an observed ratio against its
    asymptotic normalizer (LIL, Chung LIL, Kesten local-time LIL, and the
    near-origin occupation lower bound).
    """
    v, h = trace.v_count, trace.h_count
    out: dict = {"eps": eps}
    if v >= 16:
        llv = _loglog(v)
        norm = math.sqrt(2.0 * v * llv)
        max_lt = max(trace.local_time2.values())
        out["fact1_maxlocaltime_vs_lil"] = max_lt / norm
        out["fact3_m2_vs_lil"] = trace.m2 / norm
        out["fact4_m2_vs_chung"] = trace.m2 * math.sqrt(8.0 * llv / (math.pi**2 * v))
        hw = math.sqrt(v) / math.log(v) ** (1.0 + eps)
        win = [lv for lv in range(-int(hw), int(hw) + 1)]
        occ = [trace.local_time2.get(lv, 0) for lv in win]
        out["fact2_min_near_origin_vs_bound"] = (min(occ) / hw) if occ else None
        in_b_occ = sum(trace.local_time2.get(lv, 0) for lv in win if b.contains(lv))
        out["fact7_h_minus_near_origin_occupation"] = h - in_b_occ
    if h >= 16:
        llh = _loglog(h)
        out["fact5_m1_vs_lil"] = trace.m1 / math.sqrt(2.0 * h * llh)
        out["fact6_m1_vs_chung"] = trace.m1 * math.sqrt(8.0 * llh / (math.pi**2 * h))
    return out
