import json
from pathlib import Path

import numpy as np
import pytest

from combwalk import cli


def run_cli(*args):
    return cli.main(list(args))


def write(path: Path, text: str) -> str:
    path.write_text(text)
    return str(path)


def test_laws_table_has_exact_landmark_row(tmp_path):
    cfg = write(tmp_path / "laws.ini", """
[experiment]
master_seed = 5
output_dir = {out}

[laws-table]
gamma1 = 2
gamma2 = 1
t = 1
v_count = 99
""".format(out=tmp_path / "out"))
    assert run_cli("laws-table", "--config", cfg) == 0
    rows = (tmp_path / "out" / "laws_cdf.csv").read_text().splitlines()
    header = rows[0].split(",")
    vi, ci = header.index("v"), header.index("cdf_vertical_clock")
    cells = [r.split(",") for r in rows[1:]]
    assert len(cells) == 99
    target = min(cells, key=lambda c: abs(float(c[vi]) - 2.0 / 3.0))
    assert float(target[vi]) == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert float(target[ci]) == pytest.approx(0.5, abs=1e-9)
    assert (tmp_path / "out" / "summary.json").exists()
    assert (tmp_path / "out" / "laws_cdf.png").exists()


def test_simulate_single_trace_csv_and_determinism(tmp_path):
    body = """
[experiment]
engine = markov
n_steps = 500
n_replicas = 1
master_seed = 99
output_dir = {out}

[bspec]
kind = finite
levels = [0]
"""
    cfg1 = write(tmp_path / "a.ini", body.format(out=tmp_path / "out1"))
    cfg2 = write(tmp_path / "b.ini", body.format(out=tmp_path / "out2"))
    assert run_cli("simulate", "--config", cfg1) == 0
    assert run_cli("simulate", "--config", cfg2) == 0
    a = (tmp_path / "out1" / "trace.csv").read_bytes()
    b = (tmp_path / "out2" / "trace.csv").read_bytes()
    assert a == b
    lines = a.decode().splitlines()
    assert lines[0] == "step,x,y,h_count,v_count,d2"
    first = lines[1].split(",")
    assert first == ["0", "0", "0", "0", "0", "1"]     # origin level is retained
    step5 = lines[6].split(",")
    assert int(step5[3]) + int(step5[4]) == 5


def test_equivalence_small_run_exit_codes(tmp_path):
    cfg = write(tmp_path / "eq.ini", """
[experiment]
engine = both
n_steps = 4
n_replicas = 30000
master_seed = 11
output_dir = {out}

[bspec]
kind = periodic
L = 2
K = 2

[equivalence]
tv_threshold = 0.05
""".format(out=tmp_path / "eq_out"))
    assert run_cli("equivalence", "--config", cfg) == 0
    summary = json.loads((tmp_path / "eq_out" / "summary.json").read_text())
    assert summary["pass"] is True
    assert {c["name"] for c in summary["checks"]} == {"tv_markov", "tv_decomposed"}
    assert summary["config"]["bspec"] == {"kind": "periodic", "L": 2, "K": 2}
    # unreasonably tight threshold fails with exit 2
    cfg2 = write(tmp_path / "eq2.ini", """
[experiment]
engine = markov
n_steps = 4
n_replicas = 2000
master_seed = 11
output_dir = {out}

[bspec]
kind = finite
levels = 0

[equivalence]
tv_threshold = 0.0001
""".format(out=tmp_path / "eq2_out"))
    assert run_cli("equivalence", "--config", cfg2) == 2


def test_config_errors_exit_one(tmp_path):
    assert run_cli("simulate", "--config", str(tmp_path / "missing.ini")) == 1
    bad = write(tmp_path / "bad.ini", "[experiment]\nn_steps = -5\n\n[bspec]\nkind = halfplane\n")
    assert run_cli("simulate", "--config", bad) == 1
    nob = write(tmp_path / "nob.ini", "[experiment]\nn_steps = 5\n")
    assert run_cli("equivalence", "--config", nob) == 1
    mismatch = write(tmp_path / "mm.ini",
                     "[experiment]\nname = density\n\n[bspec]\nkind = halfplane\n")
    assert run_cli("simulate", "--config", mismatch) == 1
    badkind = write(tmp_path / "bk.ini", "[experiment]\n\n[bspec]\nkind = banana\n")
    assert run_cli("simulate", "--config", badkind) == 1
    # usage error: unknown experiment name
    assert run_cli("frobnicate", "--config", bad) == 1


def test_union_bspec_sections(tmp_path):
    cfg = write(tmp_path / "u.ini", """
[experiment]
n_steps = 64
n_replicas = 8
master_seed = 3
engine = decomposed
output_dir = {out}

[bspec]
kind = union
left = axis
right = evens

[axis]
kind = finite
levels = 0

[evens]
kind = periodic
L = 2
K = 2
""".format(out=tmp_path / "u_out"))
    assert run_cli("simulate", "--config", cfg, "--no-figures") == 0
    summary = json.loads((tmp_path / "u_out" / "summary.json").read_text())
    assert summary["config"]["bspec"]["kind"] == "union"


def test_cli_seed_and_out_overrides(tmp_path):
    body = """
[experiment]
n_steps = 100
n_replicas = 5
master_seed = 1
engine = decomposed
output_dir = {out}

[bspec]
kind = halfplane
"""
    cfg = write(tmp_path / "s.ini", body.format(out=tmp_path / "ignored"))
    out = tmp_path / "forced"
    assert run_cli("simulate", "--config", cfg, "--seed", "42", "--out",
                   str(out), "--no-figures") == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["master_seed"] == 42


def test_density_brownian_only_without_bspec(tmp_path):
    cfg = write(tmp_path / "d.ini", """
[experiment]
n_replicas = 400
dt = 0.002
master_seed = 6
output_dir = {out}

[density]
source = brownian
gamma1 = 2
gamma2 = 1
ks_threshold = 0.2
""".format(out=tmp_path / "d_out"))
    assert run_cli("density", "--config", cfg) == 0
    csv = (tmp_path / "d_out" / "density_brownian.csv").read_text().splitlines()
    assert csv[0] == "v,ecdf,cdf_ref"
    assert len(csv) == 401
    assert (tmp_path / "d_out" / "density_brownian.png").exists()


def test_supcheck_quick(tmp_path):
    cfg = write(tmp_path / "sc.ini", """
[experiment]
n_replicas = 300
dt = 0.002
master_seed = 9
output_dir = {out}

[supcheck]
gamma1 = 2
gamma2 = 1
ys = 0.5, 1.0
tolerance = 0.2
""".format(out=tmp_path / "sc_out"))
    assert run_cli("supcheck", "--config", cfg) == 0
    csv = (tmp_path / "sc_out" / "supcheck.csv").read_text().splitlines()
    assert csv[0] == "y,empirical_tail,series_tail,truncation_error"
    assert len(csv) == 3


def test_exponent_quick(tmp_path):
    cfg = write(tmp_path / "ex.ini", """
[experiment]
engine = decomposed
n_replicas = 200
master_seed = 12
output_dir = {out}

[bspec]
kind = finite
levels = 0

[exponent]
n_grid = 256, 512, 1024, 2048, 4096, 8192
slope_min = 0.1
slope_max = 0.4
""".format(out=tmp_path / "ex_out"))
    assert run_cli("exponent", "--config", cfg) == 0
    summary = json.loads((tmp_path / "ex_out" / "summary.json").read_text())
    assert 0.1 <= summary["extras"]["fit_c1"]["slope"] <= 0.4
    assert (tmp_path / "ex_out" / "exponent.png").exists()
