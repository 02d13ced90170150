"""Command line: ``run``, ``rank``, ``mass`` and ``bench-list``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

from .benchmarks import FUNCTIONS
from .harness import (
    RANDOM_SEARCH,
    ExperimentPlan,
    average_rank,
    mass_csv,
    rank_csv,
    run_plan,
    top_quantile_mass,
)
from .presets import PRESETS
from .results import dumps_jsonl, read_jsonl

# sampler parameters exposed as flags; dest names match TPESampler arguments
_VALUE_FLAGS = {
    "gamma": dict(choices=["linear", "sqrt"]),
    "beta": dict(type=float),
    "better-group-cap": dict(type=int),
    "weights": dict(choices=["uniform", "old_decay", "old_drop", "ei", "bohb_uniform"]),
    "t-old": dict(type=int),
    "prior-weight": dict(type=float),
    "bandwidth": dict(choices=["hyperopt", "scott", "optuna"]),
    "magic-rule": dict(choices=["power", "legacy"]),
    "alpha": dict(type=float, help="magic-clip exponent; 'inf' disables the floor"),
    "delta": dict(type=float),
    "categorical-bandwidth": dict(help="'optuna', 'scott' or a number in [0, 1]"),
    "epsilon": dict(type=float),
    "n-startup-trials": dict(type=int),
    "n-ei-candidates": dict(type=int),
    "subspace-fallback": dict(choices=["random", "prior"]),
}
_BOOL_FLAGS = ("multivariate", "consider-prior", "consider-magic-clip", "consider-endpoints", "group")


def _add_sampler_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("sampler overrides")
    for flag, kw in _VALUE_FLAGS.items():
        g.add_argument(f"--{flag}", default=None, **kw)
    for flag in _BOOL_FLAGS:
        g.add_argument(f"--{flag}", action=argparse.BooleanOptionalAction, default=None)


def _sampler_overrides(args) -> dict:
    out = {}
    for flag in list(_VALUE_FLAGS) + list(_BOOL_FLAGS):
        dest = flag.replace("-", "_")
        v = getattr(args, dest)
        if v is not None:
            out[dest] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpekit", description="TPE experiments on analytic benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a plan (or a single preset) and write results as JSON lines")
    run.add_argument("--plan", help="plan JSON file")
    run.add_argument("--benchmark", action="append", help="e.g. sphere-5d; repeatable")
    run.add_argument("--preset", default="recommended",
                     choices=sorted(PRESETS) + [RANDOM_SEARCH])
    run.add_argument("--name", help="method name in the output (default: preset name)")
    run.add_argument("--seeds", help="e.g. 0..9 or 1,2,3")
    run.add_argument("--seed", type=int, help="single seed")
    run.add_argument("--n-trials", type=int, default=200)
    run.add_argument("--noise-std", type=float, default=0.0)
    run.add_argument("--n-jobs", type=int, default=None)
    run.add_argument("--out", help="output path (default: stdout)")
    run.add_argument("--omit-timing", action="store_true", help="drop wall-clock fields")
    _add_sampler_flags(run)

    rank = sub.add_parser("rank", help="average rank of median performance, as CSV")
    rank.add_argument("results", nargs="+", help="JSON-lines result files")
    rank.add_argument("--steps", default="200", help="comma-separated steps, e.g. 50,100,200")
    rank.add_argument("--out")

    mass = sub.add_parser("mass", help="top-quantile probability mass of a control parameter, as CSV")
    mass.add_argument("results", nargs="+")
    mass.add_argument("--param", required=True, help="sampler parameter name, e.g. weights")
    mass.add_argument("--quantile", "--alpha", dest="quantile", type=float, default=0.1, help="top fraction of configs kept")
    mass.add_argument("--step", type=int, default=200)
    mass.add_argument("--kind", choices=["auto", "categorical", "numeric"], default="auto")
    mass.add_argument("--out")

    sub.add_parser("bench-list", help="list benchmark functions and their bounds")
    return parser


def _plan_from_args(args) -> ExperimentPlan:
    if args.plan:
        if args.benchmark:
            raise ValueError("--plan and --benchmark are mutually exclusive")
        plan = ExperimentPlan.load(args.plan)
        if args.n_jobs is not None:
            plan.n_jobs = args.n_jobs
        return plan
    if not args.benchmark:
        raise ValueError("give --plan or at least one --benchmark")
    if args.seeds is not None and args.seed is not None:
        raise ValueError("--seeds and --seed are mutually exclusive")
    seeds = args.seeds if args.seeds is not None else [0 if args.seed is None else args.seed]
    spec = {"preset": args.preset, **_sampler_overrides(args)}
    if args.preset == RANDOM_SEARCH and len(spec) > 1:
        raise ValueError("random_search takes no sampler flags")
    return ExperimentPlan(
        benchmarks=args.benchmark,
        configs={args.name or args.preset: spec},
        seeds=seeds,
        n_trials=args.n_trials,
        noise_std=args.noise_std,
        n_jobs=args.n_jobs or 1,
    )


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _load_results(paths: List[str]):
    out = []
    for p in paths:
        out.extend(read_jsonl(p))
    return out


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            results = run_plan(_plan_from_args(args))
            _emit(dumps_jsonl(results, timing=not args.omit_timing), args.out)
            failed = [r for r in results if r.error]
            if failed:
                print(f"{len(failed)} run(s) failed", file=sys.stderr)
        elif args.command == "rank":
            steps = [int(s) for s in args.steps.split(",")]
            _emit(rank_csv(average_rank(_load_results(args.results), steps)), args.out)
        elif args.command == "mass":
            mass = top_quantile_mass(_load_results(args.results), args.quantile, args.step,
                                     args.param, args.kind)
            _emit(mass_csv(mass), args.out)
        elif args.command == "bench-list":
            for name, entry in FUNCTIONS.items():
                print(f"{name}\t|x_d| <= {entry.bound:g}")
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
