"""Artifact rendering: CSV tables, summary.json and figure files.

CSV files carry headers, UTF-8 and LF endings, floats in repr form, so a
rerun with the same config and seed is byte-identical.  Each experiment
also renders a small set of matplotlib figures next to the delimited
output; the figures are a convenience view of the same tables.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import ExperimentResult


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def versions() -> dict:
    import matplotlib as mpl
    import numpy
    import scipy

    from . import __version__

    return {"combwalk": __version__, "numpy": numpy.__version__,
            "scipy": scipy.__version__, "matplotlib": mpl.__version__,
            "python": sys.version.split()[0]}


def write_artifacts(result: ExperimentResult, outdir, render: bool = True) -> dict:
    """Write summary.json, one CSV per table and the figures; returns the summary."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, (columns, rows) in result.tables.items():
        write_csv(out / f"{name}.csv", columns, rows)
    summary = {
        "experiment": result.experiment,
        "config": result.params,
        "versions": versions(),
        "checks": [c.to_dict() for c in result.checks],
        "pass": result.passed,
        "extras": result.extras,
        "tables": sorted(result.tables),
    }
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if render:
        render_figures(result, out)
    return summary


def _cols(table, *names):
    columns, rows = table
    idx = [columns.index(n) for n in names]
    arr = np.asarray([[row[i] for i in idx] for row in rows], dtype=np.float64)
    return [arr[:, k] for k in range(len(names))]


def render_figures(result: ExperimentResult, outdir: Path) -> list:
    """One or two PNGs per experiment, drawn from the CSV tables."""
    made = []

    def save(fig, name):
        fig.tight_layout()
        fig.savefig(outdir / name, dpi=110)
        plt.close(fig)
        made.append(name)

    t = result.tables
    if "equivalence" in t:
        exact, emp = _cols(t["equivalence"], "exact_prob", "empirical_freq")
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.loglog(exact, np.maximum(emp, 1e-12), "o", ms=3, alpha=0.6)
        lim = [min(exact[exact > 0]) * 0.5, max(exact) * 2]
        ax.loglog(lim, lim, "k--", lw=1)
        ax.set_xlabel("exact probability")
        ax.set_ylabel("empirical frequency")
        ax.set_title("engine vs enumeration oracle")
        save(fig, "equivalence.png")
    for key in ("density_walk", "density_brownian"):
        if key in t:
            v, e, r = _cols(t[key], "v", "ecdf", "cdf_ref")
            fig, ax = plt.subplots(figsize=(6, 4))
            ax.plot(v, e, lw=1, label="empirical CDF")
            ax.plot(v, r, "k--", lw=1, label="closed form")
            ax.set_xlabel("v")
            ax.set_ylabel("CDF")
            ax.set_title(key.replace("_", " "))
            ax.legend()
            save(fig, f"{key}.png")
    if "exponent" in t:
        n, c1, m2 = _cols(t["exponent"], "n", "median_abs_c1", "median_m2")
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.loglog(n, c1, "o-", label="median |C1(N)|")
        ax.loglog(n, m2, "s-", label="median M2(N)")
        fit = result.extras.get("fit_c1")
        if fit:
            ax.loglog(n, np.exp(fit["intercept"]) * n ** fit["slope"], "k--",
                      lw=1, label=f"slope {fit['slope']:.3f}")
        ax.set_xlabel("N")
        ax.legend()
        ax.set_title("scaling exponents")
        save(fig, "exponent.png")
    if "comb" in t:
        a, b = _cols(t["comb"], "sample_c1_rescaled", "reference_sample")
        fig, ax = plt.subplots(figsize=(6, 4))
        grid = np.arange(1, a.size + 1) / a.size
        ax.plot(np.sort(a), grid, lw=1, label="walk, C1/N^(1/4)")
        ax.plot(np.sort(b), grid, "k--", lw=1, label="iterated-process sample")
        ax.set_xlabel("value")
        ax.set_ylabel("ECDF")
        ax.set_title("iterated-process law, finite B")
        ax.legend()
        save(fig, "comb.png")
    if "supcheck" in t:
        y, emp, ser = _cols(t["supcheck"], "y", "empirical_tail", "series_tail")
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(y, emp, "o", label="Monte Carlo")
        ax.plot(y, ser, "k--", label="series")
        ax.set_xlabel("y")
        ax.set_ylabel("P(sup > y)")
        ax.set_title("supremum tail of the oscillating motion")
        ax.legend()
        save(fig, "supcheck.png")
    if "laws_cdf" in t:
        v, c, p = _cols(t["laws_cdf"], "v", "cdf_vertical_clock", "pdf_vertical_clock")
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
        ax1.plot(v, c, lw=1.2)
        ax1.set_xlabel("v")
        ax1.set_title("CDF of the inverse clock")
        ax2.plot(v, p, lw=1.2)
        ax2.set_xlabel("v")
        ax2.set_title("density")
        save(fig, "laws_cdf.png")
    if "trace" in t:
        x, y = _cols(t["trace"], "x", "y")
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.plot(x, y, lw=0.5)
        ax.plot([0], [0], "ko", ms=4)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title("trajectory")
        ax.set_aspect("equal", adjustable="datalim")
        save(fig, "trace.png")
    elif "observables" in t and "v_fraction" in t["observables"][0]:
        (v,) = _cols(t["observables"], "v_fraction")
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.hist(v, bins=min(60, max(10, v.size // 20)), density=True)
        ax.set_xlabel("V_N / N")
        ax.set_title("vertical step fraction")
        save(fig, "v_fraction.png")
    return made
