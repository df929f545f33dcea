"""Walk engines on comb-type lattices.

Two engines realize the same law:

* the direct Markov engine steps to a uniformly chosen lattice neighbor
  (4 neighbors on a retained level, 2 otherwise);
* the decomposition engine builds the walk from two independent simple
  walks, one supplying all horizontal steps and one all vertical steps,
  with a geometric number (mean 1) of horizontal steps consumed each time
  the vertical walk sits on a retained level.

Bookkeeping convention: the vertical local-time table counts the start
site (vertical time 0) as a visit.  With that convention the occupation
count d2 advances exactly once per geometric run drawn, which makes the
coupling identity  h_plus - d2 = sum(G_i - 1)  hold exactly at every
step, including when the start level is retained.

Every variate is a pure function of (trace seed, stream tag, draw index),
so the scalar engines and the vectorized ensemble kernels are
bit-for-bit interchangeable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng
from .bset import BSpec, ModelParams, derive_params
from .rng import (
    RngStream,
    TAG_GRUN,
    TAG_HSIGN,
    TAG_MARKOV,
    TAG_VSTEP,
    split_seed,
    split_seeds,
    stream_seed,
    stream_seeds,
)

_U = np.uint64

PATH_STORAGE_CAP = 100_000     # full position storage allowed up to here
_MATRIX_N_CAP = 4096           # decomposed ensembles: matrix layout below, per-replica above
_ALL_OBSERVABLES = (
    "final_position",
    "v_fraction",
    "d2",
    "m1",
    "m2",
    "rescaled_c1",
    "rescaled_c2",
    "envelope_ratios",
)


class MemoryBudgetError(RuntimeError):
    """Full path storage was requested for a walk above the storage cap."""


def dyadic_checkpoints(n_steps: int) -> list[int]:
    """Powers of two below n_steps, plus n_steps itself."""
    cps = [1 << j for j in range(n_steps.bit_length()) if (1 << j) < n_steps]
    cps.append(n_steps)
    return cps


@dataclass
class WalkTrace:
    """One realized walk with its running trackers.

    positions is an (n+1, 2) int array when stored, else None (for long
    walks only the trackers and dyadic checkpoint snapshots are kept).
    local_time2 maps vertical level -> number of visits of the vertical
    component at vertical times 0..v_count (start site included).
    h_plus (decomposition engine only) counts horizontal steps with the
    final geometric run untruncated; g_values are the drawn run lengths.
    """

    n_steps: int
    seed: int
    engine: str
    x: int = 0
    y: int = 0
    h_count: int = 0
    v_count: int = 0
    m1: int = 0
    m2: int = 0
    d2: int = 0
    h_plus: Optional[int] = None
    gap_max: Optional[int] = None
    local_time2: dict = field(default_factory=dict)
    positions: Optional[np.ndarray] = None
    checkpoints: list = field(default_factory=list)
    g_values: Optional[list] = None

    def checkpoint_row(self, step: int) -> dict:
        row = {"step": step, "x": self.x, "y": self.y,
               "h_count": self.h_count, "v_count": self.v_count,
               "d2": self.d2, "m1": self.m1, "m2": self.m2}
        if self.h_plus is not None:
            row["h_plus"] = self.h_plus
        return row


class _LevelTable:
    """Dense membership lookup for the window of levels a walk can reach."""

    def __init__(self, b: BSpec, cap: int = 1 << 16):
        self.b = b
        self._build(cap)

    def _build(self, cap: int):
        self.cap = cap
        self.table = self.b.contains_array(np.arange(-cap, cap + 1, dtype=np.int64))

    def lookup(self, y: np.ndarray) -> np.ndarray:
        if y.size:
            m = int(np.abs(y).max())
            while m > self.cap:
                self._build(2 * self.cap)
        return self.table[y + self.cap]


# ----------------------------------------------------------------------
# scalar engines
# ----------------------------------------------------------------------


def markov_step(b: BSpec, pos: tuple, stream: RngStream) -> tuple:
    """One transition of the direct engine: uniform over lattice neighbors.

    On a retained level all four neighbors have probability 1/4; off the
    retained levels only the two vertical neighbors, 1/2 each.  The split
    uses the top two bits of one 64-bit draw, so the probabilities are
    exact.
    """
    x, y = pos
    code = stream.next_u64() >> 62
    if b.contains(y):
        if code == 0:
            return (x + 1, y)
        if code == 1:
            return (x - 1, y)
        return (x, y + 1) if code == 2 else (x, y - 1)
    return (x, y + 1) if code < 2 else (x, y - 1)


def _resolve_store(store_path, n_steps, path_cap):
    if store_path == "auto":
        return n_steps <= path_cap
    if store_path and n_steps > path_cap:
        raise MemoryBudgetError(
            f"full path storage for n_steps={n_steps} exceeds cap {path_cap}; "
            "run in trackers-only mode")
    return bool(store_path)


def simulate_markov(b: BSpec, n_steps: int, seed: int, *,
                    store_path="auto", path_cap: int = PATH_STORAGE_CAP) -> WalkTrace:
    """Direct Markov engine: n_steps transitions from the origin."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    store = _resolve_store(store_path, n_steps, path_cap)
    tr = WalkTrace(n_steps=n_steps, seed=seed, engine="markov")
    stream = RngStream(stream_seed(seed, TAG_MARKOV))
    cps = set(dyadic_checkpoints(n_steps))
    if store:
        pos = np.zeros((n_steps + 1, 2), dtype=np.int64)
    x = y = 0
    tr.local_time2[0] = 1
    in_b = b.contains(0)
    tr.d2 = 1 if in_b else 0
    for k in range(n_steps):
        code = stream.next_u64() >> 62
        if in_b:
            if code < 2:
                x += 1 if code == 0 else -1
                tr.h_count += 1
            else:
                y += 1 if code == 2 else -1
                tr.v_count += 1
                tr.local_time2[y] = tr.local_time2.get(y, 0) + 1
                in_b = b.contains(y)
                if in_b:
                    tr.d2 += 1
        else:
            y += 1 if code < 2 else -1
            tr.v_count += 1
            tr.local_time2[y] = tr.local_time2.get(y, 0) + 1
            in_b = b.contains(y)
            if in_b:
                tr.d2 += 1
        if x > tr.m1 or -x > tr.m1:
            tr.m1 = abs(x)
        if y > tr.m2 or -y > tr.m2:
            tr.m2 = abs(y)
        if store:
            pos[k + 1, 0] = x
            pos[k + 1, 1] = y
        tr.x, tr.y = x, y
        if k + 1 in cps:
            tr.checkpoints.append(tr.checkpoint_row(k + 1))
    if store:
        tr.positions = pos
    return tr


def simulate_decomposed(b: BSpec, n_steps: int, seed: int, *,
                        store_path="auto", path_cap: int = PATH_STORAGE_CAP) -> WalkTrace:
    """Decomposition engine: horizontal and vertical steps from two
    independent simple walks, run lengths on retained levels geometric
    with mean one (a run of length zero has probability 1/2).

    If the step budget ends inside a run, h_count holds only the executed
    steps while h_plus counts the full run.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    store = _resolve_store(store_path, n_steps, path_cap)
    tr = WalkTrace(n_steps=n_steps, seed=seed, engine="decomposed",
                   h_plus=0, gap_max=0, g_values=[])
    sv = RngStream(stream_seed(seed, TAG_VSTEP))
    sh = RngStream(stream_seed(seed, TAG_HSIGN))
    sg = RngStream(stream_seed(seed, TAG_GRUN))
    cps = set(dyadic_checkpoints(n_steps))
    if store:
        pos = np.zeros((n_steps + 1, 2), dtype=np.int64)
    x = y = 0
    pending = 0
    tr.local_time2[0] = 1

    def draw_run():
        g = rng.leading_zeros_scalar(sg.next_u64())
        tr.g_values.append(g)
        tr.d2 += 1
        tr.h_plus += g
        gap = abs(tr.h_plus - tr.d2)
        if gap > tr.gap_max:
            tr.gap_max = gap
        return g

    if b.contains(0):
        pending = draw_run()
    for k in range(n_steps):
        if pending > 0:
            x += 1 if (sh.next_u64() >> 63) == 0 else -1
            tr.h_count += 1
            pending -= 1
            if abs(x) > tr.m1:
                tr.m1 = abs(x)
        else:
            y += 1 if (sv.next_u64() >> 63) == 0 else -1
            tr.v_count += 1
            tr.local_time2[y] = tr.local_time2.get(y, 0) + 1
            if abs(y) > tr.m2:
                tr.m2 = abs(y)
            if b.contains(y):
                pending = draw_run()
        if store:
            pos[k + 1, 0] = x
            pos[k + 1, 1] = y
        tr.x, tr.y = x, y
        if k + 1 in cps:
            tr.checkpoints.append(tr.checkpoint_row(k + 1))
    if store:
        tr.positions = pos
    return tr


# ----------------------------------------------------------------------
# vectorized ensemble kernels
# ----------------------------------------------------------------------


def _markov_kernel(b: BSpec, n_steps: int, seeds: np.ndarray,
                   checkpoint_steps=()) -> dict:
    """All replicas advance one step per iteration, lockstep draws.

    Matches simulate_markov bit for bit: replica r at step k consumes
    draw k of its markov sub-stream.
    """
    R = seeds.size
    table = _LevelTable(b)
    base = stream_seeds(seeds, TAG_MARKOV)
    x = np.zeros(R, np.int64)
    y = np.zeros(R, np.int64)
    h = np.zeros(R, np.int64)
    m1 = np.zeros(R, np.int64)
    m2 = np.zeros(R, np.int64)
    in_b = table.lookup(y)
    d2 = in_b.astype(np.int64)
    cps = sorted(set(checkpoint_steps))
    cp_rows = {}
    chunk = max(1, min(2048, (1 << 21) // max(R, 1)))
    k0 = 0
    while k0 < n_steps:
        kc = min(chunk, n_steps - k0)
        idx = np.arange(k0, k0 + kc, dtype=np.uint64)
        z = rng.mix64_array(base[:, None] + ((idx + _U(1)) * _U(rng.GOLDEN))[None, :])
        codes = (z >> _U(62)).astype(np.int8)
        for j in range(kc):
            c = codes[:, j]
            s = (1 - 2 * (c & 1)).astype(np.int64)
            horiz = in_b & (c < 2)
            np.add(x, s, out=x, where=horiz)
            vert = ~horiz
            dy = np.where(in_b, s, (1 - 2 * (c >> 1)).astype(np.int64))
            np.add(y, dy, out=y, where=vert)
            h += horiz
            in_b = table.lookup(y)
            d2 += vert & in_b
            np.maximum(m1, np.abs(x), out=m1)
            np.maximum(m2, np.abs(y), out=m2)
            step = k0 + j + 1
            if cps and step == cps[0]:
                cps.pop(0)
                v = np.full(R, step, np.int64) - h
                cp_rows[step] = {"x": x.copy(), "y": y.copy(), "h_count": h.copy(),
                                 "v_count": v, "d2": d2.copy(),
                                 "m1": m1.copy(), "m2": m2.copy()}
        k0 += kc
    v = n_steps - h
    out = {"x": x, "y": y, "h_count": h, "v_count": v, "d2": d2, "m1": m1, "m2": m2}
    if cp_rows:
        out["checkpoints"] = cp_rows
    return out


def _decomposed_streams_matrix(b: BSpec, n_steps: int, seeds: np.ndarray):
    """Materialize the three sub-streams for all replicas at once (rows)."""
    n = n_steps
    idx = (np.arange(n, dtype=np.uint64) + _U(1)) * _U(rng.GOLDEN)
    zv = rng.mix64_array(stream_seeds(seeds, TAG_VSTEP)[:, None] + idx[None, :])
    dy = (1 - 2 * (zv >> _U(63)).astype(np.int8)).astype(np.int8)
    del zv
    zh = rng.mix64_array(stream_seeds(seeds, TAG_HSIGN)[:, None] + idx[None, :])
    dx = (1 - 2 * (zh >> _U(63)).astype(np.int8)).astype(np.int8)
    del zh
    gidx = (np.arange(n + 1, dtype=np.uint64) + _U(1)) * _U(rng.GOLDEN)
    zg = rng.mix64_array(stream_seeds(seeds, TAG_GRUN)[:, None] + gidx[None, :])
    G = rng.leading_zeros(zg)
    return dy, dx, G


def _decomposed_matrix_kernel(b: BSpec, n_steps: int, seeds: np.ndarray,
                              checkpoint_steps=()) -> dict:
    """Decomposition engine for short walks, vectorized across replicas.

    Builds the full vertical path, locates the retained-level arrivals,
    attaches the geometric runs and reads every tracker off cumulative
    sums; no per-step loop.
    """
    R = seeds.size
    n = n_steps
    table = _LevelTable(b)
    o = 1 if b.contains(0) else 0
    dy, dx, G = _decomposed_streams_matrix(b, n, seeds)

    S2 = np.zeros((R, n + 1), np.int32)
    np.cumsum(dy, axis=1, out=S2[:, 1:])
    arrivals = table.lookup(S2[:, 1:])
    A = np.zeros((R, n + 1), np.int64)
    np.cumsum(arrivals, axis=1, out=A[:, 1:])          # A[:, k] = arrivals among vsteps 1..k

    cumG = np.zeros((R, n + 2), np.int64)
    np.cumsum(G, axis=1, out=cumG[:, 1:])
    runs = A + o                                        # runs triggered up to vstep k
    Z = np.take_along_axis(cumG, runs, axis=1)          # run steps attached up to vstep k
    # steps consumed once vstep k and its run are done; vstep k+1 happens
    # at step P[:, k] + 1, so V = #{k >= 1 : P[:, k-1] <= n-1}
    P = Z + np.arange(n + 1, dtype=np.int64)[None, :]
    V = (P[:, :n] <= n - 1).sum(axis=1).astype(np.int64)
    H = n - V

    d2 = np.take_along_axis(runs, V[:, None], axis=1)[:, 0]
    h_plus = np.take_along_axis(cumG, d2[:, None], axis=1)[:, 0]
    y_fin = np.take_along_axis(S2, V[:, None], axis=1)[:, 0].astype(np.int64)
    m2 = np.take_along_axis(np.maximum.accumulate(np.abs(S2), axis=1),
                            V[:, None], axis=1)[:, 0].astype(np.int64)
    gap = np.abs(cumG[:, :n + 2] - np.arange(n + 2, dtype=np.int64)[None, :])
    gap_max = np.take_along_axis(np.maximum.accumulate(gap, axis=1),
                                 d2[:, None], axis=1)[:, 0]

    S1 = np.zeros((R, n + 1), np.int32)
    np.cumsum(dx, axis=1, out=S1[:, 1:])
    x_fin = np.take_along_axis(S1, H[:, None], axis=1)[:, 0].astype(np.int64)
    m1 = np.take_along_axis(np.maximum.accumulate(np.abs(S1), axis=1),
                            H[:, None], axis=1)[:, 0].astype(np.int64)

    out = {"x": x_fin, "y": y_fin, "h_count": H, "v_count": V, "d2": d2,
           "m1": m1, "m2": m2, "h_plus": h_plus, "gap_max": gap_max}
    cps = sorted(set(checkpoint_steps))
    if cps:
        rows = {}
        absS1 = np.maximum.accumulate(np.abs(S1), axis=1)
        absS2 = np.maximum.accumulate(np.abs(S2), axis=1)
        for t in cps:
            Vt = (P[:, :t] <= t - 1).sum(axis=1).astype(np.int64)
            Ht = t - Vt
            d2t = np.take_along_axis(runs, Vt[:, None], axis=1)[:, 0]
            rows[t] = {
                "x": np.take_along_axis(S1, Ht[:, None], axis=1)[:, 0].astype(np.int64),
                "y": np.take_along_axis(S2, Vt[:, None], axis=1)[:, 0].astype(np.int64),
                "h_count": Ht, "v_count": Vt, "d2": d2t,
                "m1": np.take_along_axis(absS1, Ht[:, None], axis=1)[:, 0].astype(np.int64),
                "m2": np.take_along_axis(absS2, Vt[:, None], axis=1)[:, 0].astype(np.int64),
                "h_plus": np.take_along_axis(cumG, d2t[:, None], axis=1)[:, 0],
            }
        out["checkpoints"] = rows
    return out


def _decomposed_longrun_one(b: BSpec, table: _LevelTable, n: int, seed: int,
                            checkpoint_steps=()) -> dict:
    """One long replica of the decomposition engine, flat arrays."""
    sv = stream_seed(seed, TAG_VSTEP)
    idx = np.arange(n, dtype=np.uint64)
    zv = rng.draws_at(sv, idx)
    dy = (1 - 2 * (zv >> _U(63)).astype(np.int8)).astype(np.int8)
    del zv
    S2 = np.zeros(n + 1, np.int32)
    np.cumsum(dy, out=S2[1:])
    arrivals = table.lookup(S2[1:])
    o = 1 if b.contains(0) else 0
    A = np.zeros(n + 1, np.int64)
    np.cumsum(arrivals, out=A[1:])
    total_runs = int(A[-1]) + o
    zg = rng.draws_at(stream_seed(seed, TAG_GRUN),
                      np.arange(total_runs, dtype=np.uint64))
    G = rng.leading_zeros(zg)
    cumG = np.zeros(total_runs + 1, np.int64)
    np.cumsum(G, out=cumG[1:])

    def steps_done(k):      # steps consumed when vstep k and its run are done
        return k + int(cumG[o + int(A[k])])

    def v_at(t):            # vertical steps within the first t walk steps
        lo, hi = 0, min(t, n)
        # largest k with steps_done(k-1) <= t-1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if steps_done(mid - 1) <= t - 1:
                lo = mid
            else:
                hi = mid - 1
        return lo

    V = v_at(n)
    H = n - V
    d2 = o + int(A[V])
    h_plus = int(cumG[d2])
    gap_max = int(np.abs(cumG[:d2 + 1] - np.arange(d2 + 1)).max())

    zh = rng.draws_at(stream_seed(seed, TAG_HSIGN), np.arange(H, dtype=np.uint64))
    dx = (1 - 2 * (zh >> _U(63)).astype(np.int8)).astype(np.int8)
    del zh
    S1 = np.zeros(H + 1, np.int32)
    np.cumsum(dx, out=S1[1:])

    out = {"x": int(S1[H]), "y": int(S2[V]),
           "h_count": H, "v_count": V, "d2": d2, "h_plus": h_plus,
           "m1": int(np.abs(S1).max()), "m2": int(np.abs(S2[:V + 1]).max()),
           "gap_max": gap_max}
    cps = sorted(set(checkpoint_steps))
    if cps:
        absS1 = np.maximum.accumulate(np.abs(S1))
        absS2 = np.maximum.accumulate(np.abs(S2))
        rows = {}
        for t in cps:
            Vt = v_at(t)
            Ht = t - Vt
            d2t = o + int(A[Vt])
            rows[t] = {"x": int(S1[Ht]), "y": int(S2[Vt]),
                       "h_count": Ht, "v_count": Vt, "d2": d2t,
                       "m1": int(absS1[Ht]), "m2": int(absS2[Vt]),
                       "h_plus": int(cumG[d2t])}
        out["checkpoints"] = rows
    return out


def _decomposed_kernel(b: BSpec, n_steps: int, seeds: np.ndarray,
                       checkpoint_steps=()) -> dict:
    if n_steps <= _MATRIX_N_CAP:
        return _decomposed_matrix_kernel(b, n_steps, seeds, checkpoint_steps)
    table = _LevelTable(b)
    rows = [_decomposed_longrun_one(b, table, n_steps, int(s), checkpoint_steps)
            for s in seeds]
    scalar_keys = [k for k in rows[0] if k != "checkpoints"]
    out = {k: np.array([r[k] for r in rows], dtype=np.int64) for k in scalar_keys}
    if checkpoint_steps:
        cp = {}
        for t in sorted(set(checkpoint_steps)):
            cp[t] = {k: np.array([r["checkpoints"][t][k] for r in rows], dtype=np.int64)
                     for k in rows[0]["checkpoints"][t]}
        out["checkpoints"] = cp
    return out


# ----------------------------------------------------------------------
# ensembles
# ----------------------------------------------------------------------


@dataclass
class EnsembleSummary:
    """Aggregate of an ensemble run: per-replica observables and stats.

    Deterministic per (bspec, engine, n_steps, n_replicas, master_seed):
    identical inputs give identical serialized bytes.
    """

    bspec: dict
    engine: str
    n_steps: int
    n_replicas: int
    master_seed: int
    observables: dict
    checkpoints: Optional[dict] = None
    stats: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "bspec": self.bspec,
            "engine": self.engine,
            "n_steps": self.n_steps,
            "n_replicas": self.n_replicas,
            "master_seed": self.master_seed,
            "observables": sorted(self.observables),
            "stats": self.stats,
        }

    def serialize_bytes(self) -> bytes:
        import json

        payload = self.to_json_dict()
        payload["data"] = {k: np.asarray(v).tolist() for k, v in sorted(self.observables.items())}
        return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def _compute_stats(observables: dict) -> dict:
    stats = {}
    for name, arr in sorted(observables.items()):
        a = np.asarray(arr, dtype=np.float64)
        stats[name] = {
            "mean": float(a.mean()),
            "median": float(np.median(a)),
            "min": float(a.min()),
            "max": float(a.max()),
        }
    return stats


def run_ensemble(b: BSpec, n_steps: int, n_replicas: int, master_seed: int,
                 engine: str = "markov", observables=("final_position",),
                 params: Optional[ModelParams] = None,
                 checkpoint_steps=None, threads: int = 1) -> EnsembleSummary:
    """Run n_replicas independent traces and aggregate observables.

    Replica i is driven by split_seed(master_seed, i) alone, so the result
    is independent of execution order, thread count and n_replicas.
    """
    if n_replicas < 1:
        raise ValueError("n_replicas must be >= 1")
    observables = tuple(observables)
    if not observables:
        raise ValueError("observable set must not be empty")
    unknown = set(observables) - set(_ALL_OBSERVABLES)
    if unknown:
        raise ValueError(f"unknown observables: {sorted(unknown)}")
    if engine not in ("markov", "decomposed"):
        raise ValueError(f"unknown engine {engine!r}")

    want_envelope = "envelope_ratios" in observables
    cps = list(checkpoint_steps) if checkpoint_steps else (
        dyadic_checkpoints(n_steps) if want_envelope else [])

    raw = _run_kernel(b, n_steps, n_replicas, master_seed, engine, cps, threads)

    need_beta = any(o == "rescaled_c1" for o in observables)
    if need_beta and params is None:
        params = derive_params(b)

    obs = {}
    for name in observables:
        if name == "final_position":
            obs["x"] = raw["x"]
            obs["y"] = raw["y"]
        elif name == "v_fraction":
            obs["v_fraction"] = raw["v_count"] / float(n_steps)
        elif name == "rescaled_c1":
            obs["rescaled_c1"] = raw["x"] / float(n_steps) ** ((1.0 + params.beta) / 4.0)
        elif name == "rescaled_c2":
            obs["rescaled_c2"] = raw["y"] / math.sqrt(n_steps)
        elif name == "envelope_ratios":
            for k in ("x", "y", "m1", "m2", "h_count", "v_count", "d2"):
                obs.setdefault(k, raw[k])
        else:
            obs[name] = raw[name]
    for extra in ("h_plus", "gap_max"):
        if extra in raw:
            obs[extra] = raw[extra]
    obs.setdefault("h_count", raw["h_count"])
    obs.setdefault("v_count", raw["v_count"])

    return EnsembleSummary(
        bspec=b.describe(), engine=engine, n_steps=n_steps,
        n_replicas=n_replicas, master_seed=master_seed,
        observables=obs, checkpoints=raw.get("checkpoints"),
        stats=_compute_stats(obs))


def _run_chunk(args):
    b, n_steps, master_seed, engine, start, count, cps = args
    seeds = split_seeds(master_seed, count, start=start)
    kern = _markov_kernel if engine == "markov" else _decomposed_kernel
    return kern(b, n_steps, seeds, cps)


def _merge_chunks(parts: list[dict]) -> dict:
    out = {}
    for key in parts[0]:
        if key == "checkpoints":
            out[key] = {t: {k: np.concatenate([p[key][t][k] for p in parts])
                            for k in parts[0][key][t]}
                        for t in parts[0][key]}
        else:
            out[key] = np.concatenate([p[key] for p in parts])
    return out


def _run_kernel(b, n_steps, n_replicas, master_seed, engine, cps, threads):
    if threads is None or threads < 1:
        threads = 1
    if threads == 1 or n_replicas < 2 * threads:
        return _run_chunk((b, n_steps, master_seed, engine, 0, n_replicas, cps))
    bounds = np.linspace(0, n_replicas, threads + 1).astype(int)
    jobs = [(b, n_steps, master_seed, engine, int(lo), int(hi - lo), cps)
            for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(_run_chunk, jobs))
    return _merge_chunks(parts)
