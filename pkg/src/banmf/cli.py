"""Command-line entry point: ``banmf factorize | synth | oracle | bench``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 budget exhausted.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from typing import Optional, Sequence

from . import harness
from .harness import ExperimentConfig
from .matrix import MatrixParseError, ShapeError, format_csv, read_csv, write_csv
from .oracle import DEFAULT_BUDGET, BudgetExceededError, exhaustive_bmf
from .solver import TrivialInputError
from .synth import GenerationError, SynthSpec, exact_rank, generate_planted

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BUDGET = 0, 1, 2, 3

log = logging.getLogger("banmf")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- value parsing shared by flags and config files ------------------------

def _int_list(text: str) -> list[int]:
    """``"10,20"`` or inclusive ranges ``"10:20"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = part.split(":")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(p) for p in str(text).split(",") if p.strip()]


def _str_list(text: str) -> list[str]:
    return [p.strip() for p in str(text).split(",") if p.strip()]


def _bool(text: str) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# config key -> (ExperimentConfig field, parser)
BENCH_KEYS = {
    "trials": ("trials", int),
    "sizes": ("sizes", _int_list),
    "rank": ("ranks", _int_list),
    "ranks": ("ranks", _int_list),
    "densities": ("densities", _float_list),
    "density": ("densities", _float_list),
    "noise": ("noise_levels", _float_list),
    "noise_levels": ("noise_levels", _float_list),
    "method": ("methods", _str_list),
    "methods": ("methods", _str_list),
    "iters": ("iters", int),
    "lambda": ("lam", float),
    "npoint": ("npoint", int),
    "seed": ("seed", int),
    "workers": ("workers", int),
    "timing": ("timing", _bool),
    "early_stop": ("early_stop_tol", float),
    "trace_every": ("trace_every", int),
    "n_range": ("n_range", _int_list),
    "m_range": ("m_range", _int_list),
    "per_cell": ("per_cell", int),
    "budget": ("oracle_budget", int),
}


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def build_experiment_config(experiment: str, file_values: dict[str, str],
                            flag_values: dict[str, str]) -> ExperimentConfig:
    settings = harness.defaults_for(experiment)
    for source in (file_values, flag_values):
        for key, raw in source.items():
            if raw is None:
                continue
            if key not in BENCH_KEYS:
                raise UsageError(f"unknown setting {key!r}")
            name, conv = BENCH_KEYS[key]
            try:
                settings[name] = conv(raw)
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {exc}") from None
    try:
        return ExperimentConfig(experiment=experiment, **settings)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


# -- commands ---------------------------------------------------------------

def cmd_factorize(args) -> int:
    metrics = harness.factorize_file(
        args.input, args.method, args.rank, iters=args.iters, lam=args.lam,
        npoint=args.npoint, seed=args.seed, out=args.out, header=args.header,
        timing=args.timing, early_stop_tol=args.early_stop, oracle_budget=args.budget,
    )
    print(f"hamming={metrics['hamming']} relative_error={metrics['relative_error']!r}")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        spec = SynthSpec(args.rows, args.cols, args.rank, args.density, args.noise, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    inst = generate_planted(spec, reject_empty=args.reject_empty)
    r = exact_rank(inst.x_clean)
    inst.real_rank, inst.rank_lower_bound_gap = r, r - spec.rank
    os.makedirs(args.out, exist_ok=True)
    write_csv(os.path.join(args.out, "x.csv"), inst.x)
    write_csv(os.path.join(args.out, "x_clean.csv"), inst.x_clean)
    write_csv(os.path.join(args.out, "w_true.csv"), inst.w_true)
    write_csv(os.path.join(args.out, "h_true.csv"), inst.h_true)
    with open(os.path.join(args.out, "meta.json"), "w") as fh:
        fh.write(harness.dump_json(inst.meta()))
    print(f"wrote {spec.rows}x{spec.cols} instance to {args.out} (real rank {r})")
    return EXIT_OK


def cmd_oracle(args) -> int:
    x = read_csv(args.input, binary=True, header=args.header)
    w, h, best = exhaustive_bmf(x, args.rank, args.budget)
    print(f"min_hamming={best}")
    print("# W")
    sys.stdout.write(format_csv(w))
    print("# H")
    sys.stdout.write(format_csv(h))
    if args.out:
        paths = harness.output_paths(args.out)
        write_csv(paths["W.csv"], w)
        write_csv(paths["H.csv"], h)
        with open(paths["metrics.json"], "w") as fh:
            fh.write(harness.dump_json(dict(min_hamming=best, rank=args.rank,
                                            shape=list(x.shape))))
    return EXIT_OK


def _summary_path(out: str) -> str:
    root, ext = os.path.splitext(out)
    return f"{root}_summary{ext or '.csv'}"


def cmd_bench(args) -> int:
    file_values = read_config(args.config) if args.config else {}
    flags = {
        "trials": args.trials, "sizes": args.sizes, "rank": args.rank,
        "densities": args.densities, "noise": args.noise, "method": args.method,
        "iters": args.iters, "lambda": args.lam, "npoint": args.npoint, "seed": args.seed,
        "workers": args.workers, "timing": "1" if args.timing else None,
        "early_stop": args.early_stop, "trace_every": args.trace_every,
        "n_range": args.n_range, "m_range": args.m_range, "per_cell": args.per_cell,
        "budget": args.budget,
    }
    cfg = build_experiment_config(args.experiment, file_values, flags)
    records, traces = harness.run_experiment(cfg)
    summary = harness.summarize(records, harness.SUMMARY_KEYS[cfg.experiment])
    results_csv = harness.records_to_csv(records)
    summary_csv = harness.summary_to_csv(summary)
    if args.out:
        parent = os.path.dirname(args.out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(args.out, "w") as fh:
            fh.write(results_csv)
        with open(_summary_path(args.out), "w") as fh:
            fh.write(summary_csv)
        if traces:
            root, _ = os.path.splitext(args.out)
            with open(f"{root}_traces.json", "w") as fh:
                fh.write(harness.dump_json(traces))
        with open(os.path.splitext(args.out)[0] + "_config.json", "w") as fh:
            fh.write(harness.dump_json(dataclasses.asdict(cfg)))
        sys.stdout.write(summary_csv)
    else:
        sys.stdout.write(results_csv)
    failed = sum(r.status != "ok" for r in records)
    if failed:
        log.warning("%d of %d records failed; see the status column", failed, len(records))
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _add_solver_flags(p, bench: bool = False):
    if bench:
        p.add_argument("--rank", help="rank(s), comma list or lo:hi")
        p.add_argument("--method", help="comma list of methods")
        p.add_argument("--iters")
        p.add_argument("--lambda", dest="lam", help="regularization weight for *-reg methods")
        p.add_argument("--npoint")
        p.add_argument("--seed")
        p.add_argument("--early-stop", dest="early_stop")
        p.add_argument("--budget", help="oracle search budget")
    else:
        p.add_argument("--rank", type=int, required=True)
        p.add_argument("--method", choices=harness.METHODS, default="banmf")
        p.add_argument("--iters", type=int, default=1000)
        p.add_argument("--lambda", dest="lam", type=float, default=harness.DEFAULT_LAMBDA)
        p.add_argument("--npoint", type=int, default=harness.DEFAULT_NPOINT)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--early-stop", dest="early_stop", type=float, default=None)
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="banmf", description="Boolean matrix factorization via auxiliary NMF.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("factorize", help="factorize a 0/1 CSV matrix")
    p.add_argument("input")
    _add_solver_flags(p)
    p.add_argument("--out", default=".", help="output directory or file prefix")
    p.add_argument("--header", action="store_true", help="skip one header line")
    p.add_argument("--timing", action="store_true", help="record wall times (non-deterministic)")
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("synth", help="generate a planted Boolean instance")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reject-empty", action="store_true",
                   help="redraw instances with an all-zero row or column")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("oracle", help="exhaustive optimum for tiny matrices")
    p.add_argument("input")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--header", action="store_true")
    p.add_argument("--out", default=None, help="optional output directory or prefix")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="run a synthetic experiment")
    p.add_argument("experiment", choices=harness.EXPERIMENTS)
    _add_solver_flags(p, bench=True)
    p.add_argument("--config", help="key = value settings file; flags override it")
    p.add_argument("--trials")
    p.add_argument("--sizes", help="square sizes, comma list")
    p.add_argument("--densities")
    p.add_argument("--noise", help="noise levels, comma list")
    p.add_argument("--workers")
    p.add_argument("--timing", action="store_true", help="record wall times (non-deterministic)")
    p.add_argument("--trace-every", dest="trace_every")
    p.add_argument("--n-range", dest="n_range", help="rank-gap rows, e.g. 10:20")
    p.add_argument("--m-range", dest="m_range", help="rank-gap columns, e.g. 10:20")
    p.add_argument("--per-cell", dest="per_cell")
    p.add_argument("--out", help="results CSV path (summary written alongside)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                         format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"banmf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceededError, GenerationError) as exc:
        print(f"banmf: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (MatrixParseError, ShapeError, TrivialInputError, OSError, ValueError) as exc:
        print(f"banmf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
