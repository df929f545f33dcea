"""Experiment implementations behind the CLI subcommands.

Each experiment returns an ExperimentResult: a config echo, a list of
named pass/fail checks with their thresholds, and data tables ready for
CSV/figure rendering.  The same functions back the acceptance suite, so
the CLI and the tests exercise one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import analysis, bset, timechange
from .analysis import ecdf, empirical_counts, ks_against, ks_two_sample, tv_distance
from .bset import BSpec, ModelParams, derive_params
from .engine import run_ensemble
from .rng import TAG_VSTEP, draws_at, gaussian_generator, split_seed, stream_seed

_U = np.uint64

TV_THRESHOLD = 0.01
KS_THRESHOLD = 0.05
SUP_MC_TOLERANCE = 0.05


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    comparator: str = "<"

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value,
                "threshold": self.threshold, "comparator": self.comparator,
                "pass": self.passed}


@dataclass
class ExperimentResult:
    experiment: str
    params: dict
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)      # name -> (columns, rows)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, value: float, threshold: float,
              comparator: str = "<") -> Check:
        ops = {"<": value < threshold, "<=": value <= threshold,
               ">=": value >= threshold}
        c = Check(name, float(value), float(threshold), ops[comparator], comparator)
        self.checks.append(c)
        return c


def _ensemble_kwargs(threads):
    return {"threads": threads if threads else 1}


def resolve_gammas(b: Optional[BSpec], gamma1: Optional[float],
                   gamma2: Optional[float]) -> tuple[float, float, Optional[ModelParams]]:
    """Side weights from explicit overrides or from the B-set densities."""
    params = derive_params(b) if b is not None else None
    g1 = gamma1 if gamma1 is not None else (params.gamma1 if params else None)
    g2 = gamma2 if gamma2 is not None else (params.gamma2 if params else None)
    if g1 is None or g2 is None:
        raise ValueError("gamma1/gamma2 must be given explicitly when no "
                         "B-set is configured")
    return float(g1), float(g2), params


# ----------------------------------------------------------------------
# equivalence: both engines against the exact enumeration oracle
# ----------------------------------------------------------------------


def run_equivalence(b: BSpec, n_steps: int = 8, n_replicas: int = 10**6,
                    master_seed: int = 1, engines=("markov", "decomposed"),
                    tv_threshold: float = TV_THRESHOLD, threads: int = 1) -> ExperimentResult:
    res = ExperimentResult("equivalence", {
        "bspec": b.describe(), "n_steps": n_steps, "n_replicas": n_replicas,
        "master_seed": master_seed, "engines": list(engines),
        "tv_threshold": tv_threshold})
    oracle = analysis.exact_distribution(b, n_steps)
    rows = []
    for eng in engines:
        s = run_ensemble(b, n_steps, n_replicas, master_seed, engine=eng,
                         observables=("final_position",), **_ensemble_kwargs(threads))
        counts = empirical_counts(s.observables["x"], s.observables["y"])
        tv = tv_distance(oracle, counts)
        res.check(f"tv_{eng}", tv, tv_threshold)
        for (x, y), p in sorted(oracle.pmf.items()):
            rows.append((eng, x, y, float(p), counts.get((x, y), 0) / n_replicas))
    res.tables["equivalence"] = (["engine", "x", "y", "exact_prob", "empirical_freq"], rows)
    return res


# ----------------------------------------------------------------------
# density: the limit law of the vertical clock, walk and Brownian side
# ----------------------------------------------------------------------


def run_density(b: Optional[BSpec] = None, source: str = "both",
                n_steps: int = 10**5, n_replicas: int = 5000, dt: float = 1e-4,
                master_seed: int = 1, engine: str = "decomposed",
                gamma1: Optional[float] = None, gamma2: Optional[float] = None,
                ks_threshold: float = KS_THRESHOLD, threads: int = 1) -> ExperimentResult:
    g1, g2, params = resolve_gammas(b, gamma1, gamma2)
    if not g1 > g2:
        raise ValueError(f"density experiment needs gamma1 > gamma2, got "
                         f"({g1}, {g2}); pick an asymmetric B or override")
    res = ExperimentResult("density", {
        "bspec": b.describe() if b else None, "source": source,
        "n_steps": n_steps, "n_replicas": n_replicas, "dt": dt,
        "master_seed": master_seed, "engine": engine,
        "gamma1": g1, "gamma2": g2, "ks_threshold": ks_threshold})

    def ref(v):
        return timechange.vertical_clock_cdf(1.0, v, g1, g2)

    if source in ("walk", "both"):
        if b is None:
            raise ValueError("walk-side density needs a B-set")
        s = run_ensemble(b, n_steps, n_replicas, master_seed, engine=engine,
                         observables=("v_fraction",), **_ensemble_kwargs(threads))
        samples = s.observables["v_fraction"]
        ks = ks_against(samples, ref, reference="vertical clock CDF")
        res.check("ks_walk", ks.statistic, ks_threshold)
        xs, es = ecdf(samples)
        res.tables["density_walk"] = (["v", "ecdf", "cdf_ref"],
                                      list(zip(xs.tolist(), es.tolist(),
                                               np.asarray(ref(xs)).tolist())))
    if source in ("brownian", "both"):
        samples = timechange.sample_inverse_clock(1.0, g1, g2, n_replicas, dt,
                                                  master_seed + 1)
        ks = ks_against(samples, ref, reference="vertical clock CDF")
        res.check("ks_brownian", ks.statistic, ks_threshold)
        xs, es = ecdf(samples)
        res.tables["density_brownian"] = (["v", "ecdf", "cdf_ref"],
                                          list(zip(xs.tolist(), es.tolist(),
                                                   np.asarray(ref(xs)).tolist())))
    if source not in ("walk", "brownian", "both"):
        raise ValueError(f"unknown density source {source!r}")
    return res


# ----------------------------------------------------------------------
# exponent: median growth of the horizontal component across horizons
# ----------------------------------------------------------------------


def run_exponent(b: BSpec, n_grid=None, n_replicas: int = 2000,
                 master_seed: int = 1, engine: str = "decomposed",
                 slope_band: Optional[tuple] = None,
                 m2_slope_band: Optional[tuple] = None,
                 threads: int = 1) -> ExperimentResult:
    params = derive_params(b)
    if n_grid is None:
        n_grid = [2**k for k in range(12, 19)]
    n_grid = sorted(int(n) for n in n_grid)
    if slope_band is None:
        target = (1.0 + params.beta) / 4.0
        slope_band = (target - 0.075, target + 0.075)
    res = ExperimentResult("exponent", {
        "bspec": b.describe(), "n_grid": n_grid, "n_replicas": n_replicas,
        "master_seed": master_seed, "engine": engine, "beta": params.beta,
        "slope_band": list(slope_band),
        "m2_slope_band": list(m2_slope_band) if m2_slope_band else None})
    med_c1, med_m2, rows = {}, {}, []
    for i, n in enumerate(n_grid):
        s = run_ensemble(b, n, n_replicas, split_seed(master_seed, i),
                         engine=engine, observables=("final_position", "m2"),
                         **_ensemble_kwargs(threads))
        med_c1[n] = float(np.median(np.abs(s.observables["x"])))
        med_m2[n] = float(np.median(s.observables["m2"]))
        rows.append((n, med_c1[n], med_m2[n]))
    fit = analysis.fit_exponent(med_c1)
    res.extras["fit_c1"] = fit.to_dict()
    res.check("c1_slope_low", fit.slope, slope_band[0], comparator=">=")
    res.check("c1_slope_high", fit.slope, slope_band[1], comparator="<=")
    if m2_slope_band is not None:
        fit2 = analysis.fit_exponent(med_m2)
        res.extras["fit_m2"] = fit2.to_dict()
        res.check("m2_slope_low", fit2.slope, m2_slope_band[0], comparator=">=")
        res.check("m2_slope_high", fit2.slope, m2_slope_band[1], comparator="<=")
    res.tables["exponent"] = (["n", "median_abs_c1", "median_m2"], rows)
    return res


# ----------------------------------------------------------------------
# comb: the iterated-process law of the horizontal component, finite B
# ----------------------------------------------------------------------


def local_time_zero_proxy(walk_len: int, seed: int) -> float:
    """xi(0, n)/sqrt(n) of a fresh simple walk: a Brownian local time proxy."""
    zv = draws_at(stream_seed(seed, TAG_VSTEP), np.arange(walk_len, dtype=np.uint64))
    dy = (1 - 2 * (zv >> _U(63)).astype(np.int8)).astype(np.int8)
    s = np.cumsum(dy, dtype=np.int32)
    return float((s == 0).sum()) / math.sqrt(walk_len)


def iterated_reference_samples(n_samples: int, walk_len: int, b_size: int,
                               master_seed: int) -> np.ndarray:
    """Sample W(|B| * eta(0,1)) by an independent discretized construction.

    eta(0,1) comes from the walk-local-time proxy; conditionally on it the
    outer Wiener value is a centered Gaussian with that variance.
    """
    out = np.empty(n_samples)
    for i in range(n_samples):
        seed = split_seed(master_seed, i)
        ell = local_time_zero_proxy(walk_len, seed)
        z = float(gaussian_generator(seed).standard_normal(1)[0])
        out[i] = z * math.sqrt(b_size * ell)
    return out


def run_comb(b: BSpec, n_steps: int = 10**6, n_replicas: int = 3000,
             master_seed: int = 1, engine: str = "decomposed",
             ref_walk_len: Optional[int] = None,
             ks_threshold: float = KS_THRESHOLD, threads: int = 1) -> ExperimentResult:
    if not b.is_finite_kind():
        raise ValueError("comb experiment needs a finite B")
    size = b.count_window(10**6)
    if size == 0:
        raise ValueError("comb experiment needs a nonempty B")
    if ref_walk_len is None:
        ref_walk_len = n_steps
    res = ExperimentResult("comb", {
        "bspec": b.describe(), "n_steps": n_steps, "n_replicas": n_replicas,
        "master_seed": master_seed, "engine": engine, "b_size": size,
        "ref_walk_len": ref_walk_len, "ks_threshold": ks_threshold})
    s = run_ensemble(b, n_steps, n_replicas, master_seed, engine=engine,
                     observables=("final_position",), **_ensemble_kwargs(threads))
    rescaled = s.observables["x"] / n_steps**0.25
    reference = iterated_reference_samples(n_replicas, ref_walk_len, size,
                                           master_seed + 1)
    ks = ks_two_sample(rescaled, reference, reference="iterated-process sample")
    res.check("ks_comb", ks.statistic, ks_threshold)
    res.tables["comb"] = (["sample_c1_rescaled", "reference_sample"],
                          list(zip(np.sort(rescaled).tolist(),
                                   np.sort(reference).tolist())))
    return res


# ----------------------------------------------------------------------
# supcheck: the supremum tail series against Monte Carlo
# ----------------------------------------------------------------------


def run_supcheck(gamma1: float = 2.0, gamma2: float = 1.0, t: float = 1.0,
                 ys=(0.25, 0.5, 1.0), n_paths: int = 5000, dt: float = 1e-4,
                 master_seed: int = 1, k_max: int = 200,
                 tolerance: float = SUP_MC_TOLERANCE) -> ExperimentResult:
    res = ExperimentResult("supcheck", {
        "gamma1": gamma1, "gamma2": gamma2, "t": t, "ys": list(ys),
        "n_paths": n_paths, "dt": dt, "master_seed": master_seed,
        "k_max": k_max, "tolerance": tolerance})
    sups = timechange.sample_oscillating_sup(t, gamma1, gamma2, n_paths, dt,
                                             master_seed)
    rows = []
    for y in ys:
        emp = float(np.mean(sups > y))
        series = timechange.oscillating_sup_tail(y, t, gamma1, gamma2, k_max)
        res.check(f"sup_tail_y={y:g}", abs(emp - series.value), tolerance)
        rows.append((y, emp, series.value, series.truncation_error))
    res.tables["supcheck"] = (["y", "empirical_tail", "series_tail",
                               "truncation_error"], rows)
    return res


# ----------------------------------------------------------------------
# laws-table: tabulated closed forms
# ----------------------------------------------------------------------


def laws_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """count points from lo (inclusive) stepping (hi-lo)/count.

    The step divides the support into count+1 equal parts, which puts the
    analytic landmark points (thirds, quarters) exactly on the grid for
    round counts.
    """
    return np.linspace(lo, hi, count + 1)[:count]


def run_laws_table(gamma1: float = 2.0, gamma2: float = 1.0, t: float = 1.0,
                   v_count: int = 99, y_max: float = 3.0, y_count: int = 60,
                   k_max: int = 200) -> ExperimentResult:
    res = ExperimentResult("laws-table", {
        "gamma1": gamma1, "gamma2": gamma2, "t": t, "v_count": v_count,
        "y_max": y_max, "y_count": y_count, "k_max": k_max})
    lo, hi = t / gamma1, t / gamma2
    vs = laws_grid(lo, hi, v_count)
    cdf = timechange.vertical_clock_cdf(t, vs, gamma1, gamma2)
    pdf = timechange.vertical_clock_pdf(t, vs, gamma1, gamma2)
    hvs = laws_grid(t * (1 - 1 / gamma2), t * (1 - 1 / gamma1), v_count)
    hcdf = timechange.horizontal_clock_cdf(t, hvs, gamma1, gamma2)
    hpdf = timechange.horizontal_clock_pdf(t, hvs, gamma1, gamma2)
    res.tables["laws_cdf"] = (
        ["v", "cdf_vertical_clock", "pdf_vertical_clock",
         "v_horizontal", "cdf_horizontal_clock", "pdf_horizontal_clock"],
        list(zip(vs.tolist(), np.asarray(cdf).tolist(), np.asarray(pdf).tolist(),
                 hvs.tolist(), np.asarray(hcdf).tolist(), np.asarray(hpdf).tolist())))
    ys = np.linspace(0.0, y_max, y_count)
    tails = [timechange.oscillating_sup_tail(float(y), t, gamma1, gamma2, k_max)
             for y in ys]
    res.tables["laws_sup"] = (["y", "sup_tail", "truncation_error"],
                              [(float(y), s.value, s.truncation_error)
                               for y, s in zip(ys, tails)])
    return res


# ----------------------------------------------------------------------
# simulate: plain ensembles / single traces with artifact export
# ----------------------------------------------------------------------


def run_simulate(b: BSpec, n_steps: int = 1000, n_replicas: int = 1,
                 master_seed: int = 1, engine: str = "markov",
                 observables=("final_position", "v_fraction", "d2", "m1", "m2"),
                 threads: int = 1) -> ExperimentResult:
    res = ExperimentResult("simulate", {
        "bspec": b.describe(), "n_steps": n_steps, "n_replicas": n_replicas,
        "master_seed": master_seed, "engine": engine,
        "observables": list(observables)})
    summary = run_ensemble(b, n_steps, n_replicas, master_seed, engine=engine,
                           observables=observables, **_ensemble_kwargs(threads))
    res.extras["stats"] = summary.stats
    names = sorted(summary.observables)
    cols = ["replica"] + names
    data = [tuple([i] + [summary.observables[k][i].item() for k in names])
            for i in range(n_replicas)]
    res.tables["observables"] = (cols, data)
    if n_replicas == 1 and n_steps <= 10**5:
        from .engine import simulate_decomposed, simulate_markov

        sim = simulate_markov if engine == "markov" else simulate_decomposed
        tr = sim(b, n_steps, split_seed(master_seed, 0))
        diffs = np.diff(tr.positions, axis=0)
        h = np.concatenate([[0], np.cumsum(diffs[:, 0] != 0)])
        v = np.arange(n_steps + 1) - h
        d2col = _running_d2(b, tr.positions)
        res.tables["trace"] = (["step", "x", "y", "h_count", "v_count", "d2"],
                               [(k, int(tr.positions[k, 0]), int(tr.positions[k, 1]),
                                 int(h[k]), int(v[k]), int(d2col[k]))
                                for k in range(n_steps + 1)])
    return res


def _running_d2(b: BSpec, positions: np.ndarray) -> np.ndarray:
    vertical = np.concatenate([[True], np.diff(positions[:, 1]) != 0])
    hits = vertical & b.contains_array(positions[:, 1])
    return np.cumsum(hits)
