"""Experiment harness: synthetic sweeps, rank-gap study, timing, file factorization.

Every trial is an independent work item whose randomness is derived from
``(base seed, experiment, cell, trial)``.  Records are sorted by
``(cell, trial, method)`` before they are returned, so the worker count never
changes the output.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .baselines import nmf_solve
from .booleanize import DEFAULT_NPOINT, booleanize
from .matrix import as_bool, bool_mat_mul, hamming_error, read_csv, write_csv
from .oracle import DEFAULT_BUDGET, exhaustive_bmf
from .solver import SolverConfig, solve
from .synth import (
    SynthSpec,
    derive_seed,
    generate_planted,
    generate_rank_gap_suite,
)

log = logging.getLogger(__name__)

METHODS = ("banmf", "banmf-reg", "nmf", "nmf-reg", "oracle")
DEFAULT_METHODS = ("banmf", "banmf-reg", "nmf", "nmf-reg")
EXPERIMENTS = ("density", "noise", "rankgap", "time")
DEFAULT_LAMBDA = 0.1


@dataclass
class TrialRecord:
    experiment: str
    method: str
    N: int
    M: int
    k: int
    density: float
    noise: float
    gap: Optional[int]
    seed: int
    hamming: Optional[int]
    relative_error: Optional[float]
    objective_final: Optional[float]
    wall_time_ms: int
    iterations: int
    cell: int
    trial: int
    clean_hamming: Optional[int]
    clean_relative_error: Optional[float]
    booleanize_time_ms: int
    lam: float
    status: str = "ok"

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class ExperimentConfig:
    experiment: str
    trials: int = 20
    sizes: list[int] = field(default_factory=lambda: [30])
    ranks: list[int] = field(default_factory=lambda: [5])
    densities: list[float] = field(default_factory=lambda: [0.2, 0.5, 0.8])
    noise_levels: list[float] = field(default_factory=lambda: [0.0])
    methods: list[str] = field(default_factory=lambda: list(DEFAULT_METHODS))
    iters: int = 1000
    lam: float = DEFAULT_LAMBDA
    npoint: int = DEFAULT_NPOINT
    seed: int = 0
    workers: int = 1
    timing: bool = False
    early_stop_tol: Optional[float] = None
    trace_every: int = 0
    n_range: list[int] = field(default_factory=lambda: list(range(10, 21)))
    m_range: list[int] = field(default_factory=lambda: list(range(10, 21)))
    per_cell: int = 3
    oracle_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for name in ("sizes", "ranks", "densities", "noise_levels", "methods", "n_range", "m_range"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown method(s) {bad}; choose from {METHODS}")
        if self.npoint < 2:
            raise ValueError("npoint must be >= 2")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        # canonical order keeps CSV rows stable regardless of how methods were listed
        self.methods = sorted(set(self.methods), key=METHODS.index)


def defaults_for(experiment: str) -> dict:
    """Desk-scale defaults per experiment (paper grids shrunk: 100 -> 20 trials, 50 -> 30)."""
    if experiment == "density":
        return dict(trials=20, sizes=[30], ranks=[5], densities=[0.2, 0.5, 0.8], noise_levels=[0.0])
    if experiment == "noise":
        return dict(trials=20, sizes=[30], ranks=[5], densities=[0.5], noise_levels=[0.0, 0.01, 0.05])
    if experiment == "rankgap":
        return dict(ranks=[2, 3, 4], densities=[0.25, 0.5, 0.75], per_cell=3)
    if experiment == "time":
        return dict(trials=5, sizes=[50, 100, 200, 350, 500], ranks=[10], densities=[0.5],
                    iters=1000, timing=True, workers=1)
    raise ValueError(f"unknown experiment {experiment!r}")


# -- single method run -----------------------------------------------------

def run_method(x, method: str, rank: int, iters: int, lam: float, npoint: int, seed: int,
               early_stop_tol=None, oracle_budget: int = DEFAULT_BUDGET, callback=None) -> dict:
    """Factorize ``x`` with one method and Booleanize the result.

    Returns a dict with the Boolean factors, Hamming error, objective trace,
    iteration count and the loop / Booleanization times in seconds.
    """
    x = as_bool(x)
    if method == "oracle":
        t0 = time.perf_counter()
        w_hat, h_hat, ham = exhaustive_bmf(x, rank, oracle_budget)
        return dict(w_hat=w_hat, h_hat=h_hat, hamming=ham, objective_trace=[], y=None,
                    iterations=0, loop_seconds=time.perf_counter() - t0, bool_seconds=0.0,
                    lam=0.0, delta_w=None, delta_h=None)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    reg = method.endswith("-reg")
    cfg = SolverConfig(rank=rank, max_iters=iters, lam=lam if reg else 0.0, seed=seed,
                       early_stop_tol=early_stop_tol)
    if method.startswith("banmf"):
        state = solve(x, cfg, callback=callback)
    else:
        state = nmf_solve(x, cfg, callback=callback)
    t0 = time.perf_counter()
    choice = booleanize(x, state.w, state.h, npoint)
    bool_seconds = time.perf_counter() - t0
    return dict(w_hat=choice.w_hat, h_hat=choice.h_hat, hamming=choice.hamming,
                objective_trace=state.objective_trace,
                y=state.y if method.startswith("banmf") else None,
                iterations=state.iterations_run, loop_seconds=state.loop_seconds,
                bool_seconds=bool_seconds, lam=cfg.lam,
                delta_w=choice.delta_w, delta_h=choice.delta_h)


def _ms(seconds: float, timing: bool) -> int:
    return int(round(seconds * 1000)) if timing else 0


@dataclass
class _Task:
    experiment: str
    cell: int
    trial: int
    spec: SynthSpec
    gap: Optional[int] = None
    # pre-built instance for the rank-gap study
    x: Optional[np.ndarray] = None
    x_clean: Optional[np.ndarray] = None


def _run_task(task: _Task, cfg: ExperimentConfig) -> tuple[list[TrialRecord], list]:
    spec = task.spec
    base = dict(experiment=task.experiment, N=spec.rows, M=spec.cols, k=spec.rank,
                density=spec.density, noise=spec.noise, gap=task.gap, seed=spec.seed,
                cell=task.cell, trial=task.trial)
    try:
        if task.x is None:
            inst = generate_planted(spec)
            x, x_clean = inst.x, inst.x_clean
        else:
            x, x_clean = task.x, task.x_clean
    except Exception as exc:  # noqa: BLE001 - recorded, never dropped
        log.warning("instance generation failed for cell %d trial %d: %s", task.cell, task.trial, exc)
        return [_failed(base, m, cfg, exc) for m in cfg.methods], []

    solver_seed = derive_seed(spec.seed, "init")
    records, traces = [], []
    for method in cfg.methods:
        bool_trace = []
        callback = None
        if cfg.trace_every > 0 and method != "oracle":
            callback = _boolean_tracer(x, cfg, bool_trace)
        try:
            out = run_method(x, method, spec.rank, cfg.iters, cfg.lam, cfg.npoint, solver_seed,
                             cfg.early_stop_tol, cfg.oracle_budget, callback)
        except Exception as exc:  # noqa: BLE001
            log.warning("%s failed on cell %d trial %d: %s", method, task.cell, task.trial, exc)
            records.append(_failed(base, method, cfg, exc))
            continue
        recon = bool_mat_mul(out["w_hat"], out["h_hat"])
        clean_ham = hamming_error(x_clean, recon)
        trace = out["objective_trace"]
        records.append(TrialRecord(
            method=method, hamming=out["hamming"], relative_error=out["hamming"] / x.size,
            objective_final=trace[-1] if trace else None,
            wall_time_ms=_ms(out["loop_seconds"], cfg.timing), iterations=out["iterations"],
            clean_hamming=clean_ham, clean_relative_error=clean_ham / x.size,
            booleanize_time_ms=_ms(out["bool_seconds"], cfg.timing), lam=out["lam"], **base,
        ))
        if cfg.trace_every > 0:
            traces.append(dict(cell=task.cell, trial=task.trial, method=method, N=spec.rows,
                               M=spec.cols, objective_trace=trace, boolean_error_trace=bool_trace))
    return records, traces


def _boolean_tracer(x, cfg: ExperimentConfig, acc: list):
    def callback(it, y, w, h):
        if it % cfg.trace_every == 0:
            acc.append([it, booleanize(x, w, h, cfg.npoint).hamming / x.size])
    return callback


def _failed(base: dict, method: str, cfg: ExperimentConfig, exc: Exception) -> TrialRecord:
    return TrialRecord(method=method, hamming=None, relative_error=None, objective_final=None,
                       wall_time_ms=0, iterations=0, clean_hamming=None, clean_relative_error=None,
                       booleanize_time_ms=0, lam=cfg.lam if method.endswith("-reg") else 0.0,
                       status=f"failed: {exc}", **base)


def _execute(tasks: list[_Task], cfg: ExperimentConfig) -> tuple[list[TrialRecord], list]:
    if cfg.workers > 1 and cfg.experiment != "time":
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_task, tasks, [cfg] * len(tasks)))
    else:
        results = [_run_task(t, cfg) for t in tasks]
    records = [r for recs, _ in results for r in recs]
    traces = [t for _, trs in results for t in trs]
    records.sort(key=lambda r: (r.cell, r.trial, METHODS.index(r.method)))
    traces.sort(key=lambda t: (t["cell"], t["trial"], METHODS.index(t["method"])))
    return records, traces


# -- experiments -----------------------------------------------------------

def _grid_tasks(cfg: ExperimentConfig) -> list[_Task]:
    tasks = []
    cells = product(cfg.sizes, cfg.ranks, cfg.densities, cfg.noise_levels)
    for c, (n, k, d, p_e) in enumerate(cells):
        for t in range(cfg.trials):
            if cfg.experiment == "noise":
                # one clean matrix per trial, corrupted at every noise level
                seed = derive_seed(cfg.seed, cfg.experiment, n, k, d, t)
            else:
                seed = derive_seed(cfg.seed, cfg.experiment, c, t)
            tasks.append(_Task(cfg.experiment, c, t, SynthSpec(n, n, k, d, p_e, seed)))
    return tasks


def run_density_sweep(cfg: ExperimentConfig) -> list[TrialRecord]:
    return _execute(_grid_tasks(cfg), cfg)[0]


def run_noise_sweep(cfg: ExperimentConfig) -> list[TrialRecord]:
    """Noise sweep; errors are measured against the corrupted input."""
    return _execute(_grid_tasks(cfg), cfg)[0]


def rank_gap_tasks(cfg: ExperimentConfig) -> list[_Task]:
    suite = generate_rank_gap_suite(cfg.n_range, cfg.m_range, cfg.ranks, cfg.densities,
                                    cfg.per_cell, cfg.seed)
    tasks, cell_ids, counts = [], {}, {}
    for inst in suite:
        s = inst.spec
        key = (s.rows, s.cols, s.rank, s.density)
        c = cell_ids.setdefault(key, len(cell_ids))
        t = counts[key] = counts.get(key, -1) + 1
        tasks.append(_Task(cfg.experiment, c, t, s, inst.rank_lower_bound_gap, inst.x, inst.x_clean))
    return tasks


def run_rank_gap_study(cfg: ExperimentConfig) -> list[TrialRecord]:
    return _execute(rank_gap_tasks(cfg), cfg)[0]


def run_timing_study(cfg: ExperimentConfig) -> tuple[list[TrialRecord], list]:
    """Fixed-iteration timing runs, sequential; returns records and traces."""
    cfg.timing = True
    cfg.early_stop_tol = None
    cfg.workers = 1
    tasks = []
    for c, (n, k, d) in enumerate(product(cfg.sizes, cfg.ranks, cfg.densities)):
        for t in range(cfg.trials):
            tasks.append(_Task(cfg.experiment, c, t,
                               SynthSpec(n, n, k, d, 0.0, derive_seed(cfg.seed, "time", c, t))))
    return _execute(tasks, cfg)


def run_experiment(cfg: ExperimentConfig) -> tuple[list[TrialRecord], list]:
    if cfg.experiment == "time":
        return run_timing_study(cfg)
    if cfg.experiment == "rankgap":
        return _execute(rank_gap_tasks(cfg), cfg)
    return _execute(_grid_tasks(cfg), cfg)


# -- summaries and output --------------------------------------------------

SUMMARY_KEYS = {
    "density": ("N", "M", "k", "density"),
    "noise": ("N", "M", "k", "density", "noise"),
    "rankgap": ("gap",),
    "time": ("N", "M", "k"),
}


def summarize(records: Sequence[TrialRecord], keys: Sequence[str]) -> list[dict]:
    """Mean/std of relative error and median wall time per group and method."""
    groups: dict = {}
    for r in records:
        gk = tuple(getattr(r, k) for k in keys) + (r.method,)
        groups.setdefault(gk, []).append(r)
    rows = []
    for gk in sorted(groups, key=lambda g: (g[:-1], METHODS.index(g[-1]))):
        recs = groups[gk]
        ok = [r for r in recs if r.status == "ok"]
        errs = [r.relative_error for r in ok]
        row = dict(zip(keys, gk[:-1]))
        row.update(
            method=gk[-1], n=len(ok), n_failed=len(recs) - len(ok),
            mean_relative_error=statistics.fmean(errs) if errs else None,
            std_relative_error=statistics.stdev(errs) if len(errs) > 1 else (0.0 if errs else None),
            median_wall_time_ms=float(statistics.median(r.wall_time_ms for r in ok)) if ok else None,
        )
        rows.append(row)
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def records_to_csv(records: Sequence[TrialRecord]) -> str:
    return rows_to_csv([asdict(r) for r in records], TrialRecord.columns())


def summary_to_csv(summary: Sequence[dict]) -> str:
    if not summary:
        return ""
    return rows_to_csv(summary, list(summary[0].keys()))


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- file factorization ----------------------------------------------------

def output_paths(prefix: str) -> dict[str, str]:
    if prefix.endswith(os.sep) or os.path.isdir(prefix):
        os.makedirs(prefix, exist_ok=True)
        join = lambda name: os.path.join(prefix, name)  # noqa: E731
    else:
        parent = os.path.dirname(prefix)
        if parent:
            os.makedirs(parent, exist_ok=True)
        join = lambda name: prefix + name  # noqa: E731
    return {name: join(name) for name in ("W.csv", "H.csv", "Y.csv", "metrics.json")}


def factorize_file(input_path: str, method: str, rank: int, iters: int = 1000,
                   lam: float = DEFAULT_LAMBDA, npoint: int = DEFAULT_NPOINT, seed: int = 0,
                   out: str = ".", header: bool = False, timing: bool = False,
                   early_stop_tol=None, oracle_budget: int = DEFAULT_BUDGET) -> dict:
    """Factorize a 0/1 CSV file and write Boolean factors plus metrics.

    Writes ``W.csv`` and ``H.csv`` (Boolean), ``Y.csv`` (final auxiliary
    matrix, BANMF methods only) and ``metrics.json`` under the ``out``
    prefix.  Returns the metrics dict.
    """
    x = read_csv(input_path, binary=True, header=header)
    res = run_method(x, method, rank, iters, lam, npoint, seed, early_stop_tol, oracle_budget)
    paths = output_paths(out)
    write_csv(paths["W.csv"], res["w_hat"])
    write_csv(paths["H.csv"], res["h_hat"])
    if res["y"] is not None:
        write_csv(paths["Y.csv"], res["y"])
    trace = res["objective_trace"]
    metrics = dict(
        input=os.path.basename(input_path), shape=list(x.shape), method=method,
        hamming=res["hamming"], relative_error=res["hamming"] / x.size,
        objective_final=trace[-1] if trace else None, objective_trace=trace,
        iterations=res["iterations"], delta_w=res["delta_w"], delta_h=res["delta_h"],
        wall_time_ms=_ms(res["loop_seconds"], timing),
        booleanize_time_ms=_ms(res["bool_seconds"], timing),
        config=dict(rank=rank, iters=iters, lam=res["lam"], npoint=npoint, seed=seed,
                    early_stop_tol=early_stop_tol, header=header),
    )
    with open(paths["metrics.json"], "w") as fh:
        fh.write(dump_json(metrics))
    return metrics
