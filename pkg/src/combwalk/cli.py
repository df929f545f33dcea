"""Experiment CLI.

Usage:  combwalk <experiment> --config <file> [--seed N] [--out DIR]
                 [--threads K] [--no-figures]

The config is flat key = value text (INI sections), one experiment per
file.  The [experiment] section carries the run parameters, [bspec] the
retained-level set as a tagged record, and an optional section named
after the experiment carries its specific knobs.  Thread count comes from
--threads, else the config, else COMBWALK_THREADS, else 1.

Exit codes: 0 all checks passed, 1 usage/config error, 2 a statistical
check failed.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import bset, experiments
from .bset import BSpec

EXPERIMENTS = ("simulate", "equivalence", "density", "exponent", "comb",
               "supcheck", "laws-table")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"usage: {message}")


@dataclass
class ExperimentConfig:
    """Validated contents of one experiment config file."""

    experiment: str
    bspec: Optional[BSpec]
    engine: str = "markov"
    n_steps: Optional[int] = None
    n_replicas: Optional[int] = None
    master_seed: int = 1
    dt: float = 1e-4
    threads: int = 1
    output_dir: str = "out"
    options: dict = field(default_factory=dict)   # experiment-specific section


def _need(section, key, parse, raw):
    try:
        return parse(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None


def _get(cp, section, key, parse, default=None):
    if not cp.has_option(section, key):
        return default
    return _need(section, key, parse, cp.get(section, key))


def _parse_levels(raw: str) -> list:
    body = raw.strip().strip("[]")
    if not body:
        return []
    return [int(tok) for tok in body.replace(",", " ").split()]


def parse_bspec(cp: configparser.ConfigParser, section: str = "bspec") -> BSpec:
    if not cp.has_section(section):
        raise ConfigError(f"missing [{section}] section")
    kind = _get(cp, section, "kind", str)
    if kind is None:
        raise ConfigError(f"[{section}] needs a kind")
    if kind == "finite":
        raw = cp.get(section, "levels", fallback="")
        return bset.finite(_need(section, "levels", _parse_levels, raw))
    if kind == "periodic":
        L = _get(cp, section, "l", int)
        K = _get(cp, section, "k", int)
        if L is None or K is None:
            raise ConfigError(f"[{section}] periodic needs L and K")
        return bset.periodic(L, K)
    if kind == "power_gap":
        ap = _get(cp, section, "alpha_pos", float)
        an = _get(cp, section, "alpha_neg", float, default=ap)
        if ap is None:
            raise ConfigError(f"[{section}] power_gap needs alpha_pos")
        return bset.power_gap(ap, an)
    if kind == "halfplane":
        return bset.halfplane()
    if kind == "all_levels":
        return bset.all_levels()
    if kind in ("union", "difference"):
        left = _get(cp, section, "left", str)
        right = _get(cp, section, "right", str)
        if not left or not right:
            raise ConfigError(f"[{section}] {kind} needs left/right section names")
        ctor = bset.union if kind == "union" else bset.difference
        return ctor(parse_bspec(cp, left), parse_bspec(cp, right))
    raise ConfigError(f"[{section}] unknown kind {kind!r}")


def _resolve_threads(cli_value, cfg_value) -> int:
    def norm(v):
        if v is None:
            return None
        if isinstance(v, str) and v.strip().lower() == "auto":
            return os.cpu_count() or 1
        n = int(v)
        if n < 1:
            raise ConfigError(f"thread count must be positive, got {n}")
        return n

    for candidate in (cli_value, cfg_value, os.environ.get("COMBWALK_THREADS")):
        n = norm(candidate)
        if n is not None:
            return n
    return 1


def load_config(path: str, experiment: str, *, seed=None, out=None,
                threads=None) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    sec = "experiment"
    if cp.has_section(sec):
        declared = _get(cp, sec, "name", str)
        if declared is not None and declared != experiment:
            raise ConfigError(f"[experiment] name = {declared!r} does not match "
                              f"the requested experiment {experiment!r}")
    needs_bspec = experiment in ("simulate", "equivalence", "exponent", "comb")
    b = None
    if cp.has_section("bspec"):
        b = parse_bspec(cp)
    elif needs_bspec:
        raise ConfigError(f"experiment {experiment!r} needs a [bspec] section")
    opt_section = experiment if cp.has_section(experiment) else None
    options = dict(cp.items(opt_section)) if opt_section else {}
    cfg = ExperimentConfig(
        experiment=experiment,
        bspec=b,
        engine=_get(cp, sec, "engine", str, default="markov") if cp.has_section(sec) else "markov",
        n_steps=_get(cp, sec, "n_steps", int) if cp.has_section(sec) else None,
        n_replicas=_get(cp, sec, "n_replicas", int) if cp.has_section(sec) else None,
        master_seed=(_get(cp, sec, "master_seed", int, default=1)
                     if cp.has_section(sec) else 1),
        dt=_get(cp, sec, "dt", float, default=1e-4) if cp.has_section(sec) else 1e-4,
        threads=_resolve_threads(threads, _get(cp, sec, "threads", str)
                                 if cp.has_section(sec) else None),
        output_dir=(_get(cp, sec, "output_dir", str, default="out")
                    if cp.has_section(sec) else "out"),
        options=options,
    )
    if seed is not None:
        cfg.master_seed = int(seed)
    if out is not None:
        cfg.output_dir = str(out)
    for name, value in (("n_steps", cfg.n_steps), ("n_replicas", cfg.n_replicas)):
        if value is not None and value < 1:
            raise ConfigError(f"[experiment] {name} must be positive, got {value}")
    if cfg.dt <= 0:
        raise ConfigError(f"[experiment] dt must be positive, got {cfg.dt}")
    if cfg.engine not in ("markov", "decomposed", "both"):
        raise ConfigError(f"[experiment] unknown engine {cfg.engine!r}")
    return cfg


def _opt(cfg: ExperimentConfig, key: str, parse, default=None):
    if key not in cfg.options:
        return default
    return _need(cfg.experiment, key, parse, cfg.options[key])


def _floats(raw: str) -> list:
    return [float(tok) for tok in raw.replace(",", " ").split()]


def _ints(raw: str) -> list:
    return [int(tok) for tok in raw.replace(",", " ").split()]


def dispatch(cfg: ExperimentConfig) -> experiments.ExperimentResult:
    e = cfg.experiment
    if e == "equivalence":
        engines = ("markov", "decomposed") if cfg.engine == "both" else (cfg.engine,)
        return experiments.run_equivalence(
            cfg.bspec, n_steps=cfg.n_steps or 8,
            n_replicas=cfg.n_replicas or 10**6, master_seed=cfg.master_seed,
            engines=engines,
            tv_threshold=_opt(cfg, "tv_threshold", float, experiments.TV_THRESHOLD),
            threads=cfg.threads)
    if e == "density":
        engine = "decomposed" if cfg.engine == "both" else cfg.engine
        return experiments.run_density(
            cfg.bspec, source=_opt(cfg, "source", str, "both" if cfg.bspec else "brownian"),
            n_steps=cfg.n_steps or 10**5, n_replicas=cfg.n_replicas or 5000,
            dt=cfg.dt, master_seed=cfg.master_seed, engine=engine,
            gamma1=_opt(cfg, "gamma1", float), gamma2=_opt(cfg, "gamma2", float),
            ks_threshold=_opt(cfg, "ks_threshold", float, experiments.KS_THRESHOLD),
            threads=cfg.threads)
    if e == "exponent":
        band = None
        if "slope_min" in cfg.options or "slope_max" in cfg.options:
            band = (_opt(cfg, "slope_min", float), _opt(cfg, "slope_max", float))
            if None in band:
                raise ConfigError("[exponent] slope_min and slope_max go together")
        m2band = None
        if "m2_slope_min" in cfg.options or "m2_slope_max" in cfg.options:
            m2band = (_opt(cfg, "m2_slope_min", float), _opt(cfg, "m2_slope_max", float))
            if None in m2band:
                raise ConfigError("[exponent] m2_slope_min and m2_slope_max go together")
        engine = "decomposed" if cfg.engine == "both" else cfg.engine
        return experiments.run_exponent(
            cfg.bspec, n_grid=_opt(cfg, "n_grid", _ints),
            n_replicas=cfg.n_replicas or 2000, master_seed=cfg.master_seed,
            engine=engine, slope_band=band, m2_slope_band=m2band,
            threads=cfg.threads)
    if e == "comb":
        engine = "decomposed" if cfg.engine == "both" else cfg.engine
        return experiments.run_comb(
            cfg.bspec, n_steps=cfg.n_steps or 10**6,
            n_replicas=cfg.n_replicas or 3000, master_seed=cfg.master_seed,
            engine=engine, ref_walk_len=_opt(cfg, "ref_walk_len", int),
            ks_threshold=_opt(cfg, "ks_threshold", float, experiments.KS_THRESHOLD),
            threads=cfg.threads)
    if e == "supcheck":
        g1, g2, _ = experiments.resolve_gammas(
            cfg.bspec, _opt(cfg, "gamma1", float), _opt(cfg, "gamma2", float))
        return experiments.run_supcheck(
            gamma1=g1, gamma2=g2, t=_opt(cfg, "t", float, 1.0),
            ys=_opt(cfg, "ys", _floats, [0.25, 0.5, 1.0]),
            n_paths=cfg.n_replicas or 5000, dt=cfg.dt,
            master_seed=cfg.master_seed, k_max=_opt(cfg, "k_max", int, 200),
            tolerance=_opt(cfg, "tolerance", float, experiments.SUP_MC_TOLERANCE))
    if e == "laws-table":
        g1, g2, _ = experiments.resolve_gammas(
            cfg.bspec, _opt(cfg, "gamma1", float), _opt(cfg, "gamma2", float))
        return experiments.run_laws_table(
            gamma1=g1, gamma2=g2, t=_opt(cfg, "t", float, 1.0),
            v_count=_opt(cfg, "v_count", int, 99),
            y_max=_opt(cfg, "y_max", float, 3.0),
            y_count=_opt(cfg, "y_count", int, 60),
            k_max=_opt(cfg, "k_max", int, 200))
    if e == "simulate":
        obs = _opt(cfg, "observables",
                   lambda raw: tuple(tok.strip() for tok in raw.split(",") if tok.strip()),
                   ("final_position", "v_fraction", "d2", "m1", "m2"))
        engine = "markov" if cfg.engine == "both" else cfg.engine
        return experiments.run_simulate(
            cfg.bspec, n_steps=cfg.n_steps or 1000,
            n_replicas=cfg.n_replicas or 1, master_seed=cfg.master_seed,
            engine=engine, observables=obs, threads=cfg.threads)
    raise ConfigError(f"unknown experiment {e!r}")


def main(argv=None) -> int:
    parser = _Parser(prog="combwalk",
                     description="comb-type lattice walk experiments")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="INI experiment config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the master seed")
    parser.add_argument("--out", default=None, help="override the output dir")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--no-figures", action="store_true",
                        help="write CSV/JSON only")
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config, args.experiment, seed=args.seed,
                          out=args.out, threads=args.threads)
        result = dispatch(cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"combwalk: error: {exc}", file=sys.stderr)
        return 1
    result.params.setdefault("threads", cfg.threads)
    result.params.setdefault("output_dir", cfg.output_dir)

    from . import report

    summary = report.write_artifacts(result, cfg.output_dir,
                                     render=not args.no_figures)
    for check in result.checks:
        state = "PASS" if check.passed else "FAIL"
        print(f"{state} {check.name}: {check.value:.6g} "
              f"{check.comparator} {check.threshold:g}")
    print(f"{'PASS' if result.passed else 'FAIL'} {result.experiment}: "
          f"artifacts in {cfg.output_dir}")
    return 0 if result.passed else 2


if __name__ == "__main__":
    sys.exit(main())
