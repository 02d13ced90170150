"""Batch runs over (config, benchmark, seed) and the analyses on their results."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import rankdata

from .bandwidth import bw_scott
from .benchmarks import get_benchmark, random_search
from .presets import sampler_from_dict
from .results import StudyResult
from .sampler import Study
from .utils import parse_seeds

logger = logging.getLogger(__name__)

RANDOM_SEARCH = "random_search"
RANK_COLUMNS = ("step", "method", "average_rank")
MASS_COLUMNS = ("value", "mass")


@dataclass
class ExperimentPlan:
    """Named sampler configurations crossed with benchmarks and seeds.

    ``configs`` maps a method name to ``{"preset": ..., <config keys>...}``;
    the preset ``"random_search"`` selects the uniform baseline.
    """

    benchmarks: List[str]
    configs: Dict[str, Dict[str, Any]]
    seeds: List[int]
    n_trials: int = 200
    noise_std: float = 0.0
    n_jobs: int = 1

    def __post_init__(self):
        if not self.benchmarks or not self.configs or not self.seeds:
            raise ValueError("plan needs non-empty benchmarks, configs and seeds")
        self.seeds = parse_seeds(self.seeds)
        for key in self.benchmarks:
            get_benchmark(key)
        for name, spec in self.configs.items():
            if spec.get("preset") == RANDOM_SEARCH:
                continue
            n_init = sampler_from_dict(spec).config.n_startup_trials
            if self.n_trials < n_init:
                raise ValueError(f"{name}: n_trials {self.n_trials} < n_startup_trials {n_init}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentPlan":
        unknown = set(data) - {"benchmarks", "configs", "seeds", "n_trials", "noise_std", "n_jobs"}
        if unknown:
            raise ValueError(f"unknown plan keys: {sorted(unknown)}")
        configs = data["configs"]
        if isinstance(configs, list):
            configs = {c["name"]: {k: v for k, v in c.items() if k != "name"} for c in configs}
        return cls(
            benchmarks=list(data["benchmarks"]),
            configs={str(k): dict(v) for k, v in configs.items()},
            seeds=data["seeds"],
            n_trials=int(data.get("n_trials", 200)),
            noise_std=float(data.get("noise_std", 0.0)),
            n_jobs=int(data.get("n_jobs", 1)),
        )

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def cells(self) -> List[Tuple[str, str, int]]:
        return [(c, b, s) for c in self.configs for b in self.benchmarks for s in self.seeds]


def run_one(config_name: str, spec: Mapping[str, Any], benchmark: str, seed: int,
            n_trials: int, noise_std: float = 0.0) -> StudyResult:
    """One study; failures come back as a result carrying ``error``."""
    try:
        bench = get_benchmark(benchmark, noise_std)
        if spec.get("preset") == RANDOM_SEARCH:
            res = random_search(bench, n_trials, seed, config_name)
            res.config_params = dict(spec)
            return res
        study = Study(bench.space(), sampler_from_dict(spec), seed=seed)
        return study.optimize(bench.objective(study.noise_rng), n_trials, config_name, bench.key)
    except Exception as exc:  # noqa: BLE001 - the batch must go on
        logger.error("run %s/%s/%s failed: %s", config_name, benchmark, seed, exc)
        return StudyResult(config_name, benchmark, seed, [], config_params=dict(spec),
                           error=f"{type(exc).__name__}: {exc}")


def run_plan(plan: ExperimentPlan) -> List[StudyResult]:
    """One result per (config, benchmark, seed), in plan order."""
    jobs = (delayed(run_one)(c, plan.configs[c], b, s, plan.n_trials, plan.noise_std)
            for c, b, s in plan.cells())
    if plan.n_jobs == 1:
        return [fn(*a, **kw) for fn, a, kw in jobs]
    return list(Parallel(n_jobs=plan.n_jobs)(jobs))


# ---------------------------------------------------------------------------
# analyses


def _median_table(results: Iterable[StudyResult], step: int) -> Dict[str, Dict[str, float]]:
    """benchmark -> method -> median over seeds of the best value after ``step`` trials."""
    cells: Dict[str, Dict[str, Dict[int, float]]] = defaultdict(lambda: defaultdict(dict))
    for r in results:
        if r.error is not None or r.n_trials < step:
            raise ValueError(f"{r.config_name}/{r.benchmark}/seed {r.seed} has no value at step {step}")
        cells[r.benchmark][r.config_name][r.seed] = r.best_at(step)
    methods = sorted({m for per in cells.values() for m in per})
    out = {}
    for bench, per in cells.items():
        seeds = set().union(*(set(v) for v in per.values()))
        for m in methods:
            missing = seeds - set(per.get(m, {}))
            if missing:
                raise ValueError(f"missing results for {m} on {bench}, seeds {sorted(missing)}")
        out[bench] = {m: float(np.median(list(per[m].values()))) for m in methods}
    return out


def rank_table(results: Sequence[StudyResult], step: int) -> Dict[str, Dict[str, float]]:
    """benchmark -> method -> rank of the median (1 = best, ties averaged)."""
    table = _median_table(results, step)
    out = {}
    for bench, medians in table.items():
        methods = list(medians)
        ranks = rankdata([medians[m] for m in methods], method="average")
        out[bench] = dict(zip(methods, map(float, ranks)))
    return out


def average_rank(results: Sequence[StudyResult], at_steps: Sequence[int]) -> List[Tuple[int, str, float]]:
    """Rows ``(step, method, average rank over benchmarks)``."""
    results = list(results)
    if len({r.config_name for r in results}) < 2:
        raise ValueError("ranking needs at least two methods")
    rows = []
    for step in at_steps:
        table = rank_table(results, step)
        methods = sorted({m for per in table.values() for m in per})
        for m in methods:
            rows.append((int(step), m, float(np.mean([per[m] for per in table.values()]))))
    return rows


def _is_numeric(values) -> bool:
    return all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in values)


def top_quantile_mass(results: Sequence[StudyResult], alpha: float, at_step: int, param: str,
                      kind: str = "auto") -> Dict[Any, float]:
    """Distribution of a control parameter among the best-performing configs.

    Per benchmark, configs are sorted by their median best value at
    ``at_step``; the top ``ceil(alpha * K)`` survive. Their values of
    ``param`` become a pmf (categorical: counting; numeric: Gaussian kernel
    with Scott bandwidth, evaluated at the grid choices), and the pmfs are
    averaged over benchmarks with equal weight.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if kind not in ("auto", "categorical", "numeric"):
        raise ValueError("kind must be 'auto', 'categorical' or 'numeric'")
    results = list(results)
    value_of: Dict[str, Any] = {}
    for r in results:
        if param not in r.config_params:
            raise ValueError(f"{r.config_name} does not record {param!r}")
        v = r.config_params[param]
        if value_of.setdefault(r.config_name, v) != v:
            raise ValueError(f"{r.config_name} has inconsistent values of {param!r}")
    table = _median_table(results, at_step)
    grids = {frozenset(per) for per in table.values()}
    if len(grids) != 1:
        raise ValueError("every benchmark must be run with the same config grid")
    choices = sorted(set(value_of.values()), key=lambda v: (str(type(v)), v))
    numeric = _is_numeric(choices) if kind == "auto" else kind == "numeric"

    pmfs = []
    for medians in table.values():
        k = len(medians)
        n_keep = math.ceil(alpha * k)
        if n_keep < 1:
            raise ValueError("no survivors")
        order = sorted(medians, key=lambda m: (medians[m], m))
        survivors = [value_of[m] for m in order[:n_keep]]
        if numeric:
            pmfs.append(_kde_pmf(np.asarray(survivors, float), np.asarray(choices, float)))
        else:
            pmfs.append(np.array([survivors.count(c) for c in choices], float) / len(survivors))
    mass = np.mean(pmfs, axis=0)
    return dict(zip(choices, map(float, mass / mass.sum())))


def _kde_pmf(points: np.ndarray, grid: np.ndarray) -> np.ndarray:
    b = bw_scott(points)
    if b <= 0:
        # identical survivors: all mass at their value
        p = np.isclose(grid[:, None], points[None, :]).sum(axis=1).astype(float)
    else:
        p = np.exp(-0.5 * ((grid[:, None] - points[None, :]) / b) ** 2).sum(axis=1)
    return p / p.sum()


# ---------------------------------------------------------------------------
# CSV


def rank_csv(rows: Sequence[Tuple[int, str, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RANK_COLUMNS)
    for step, method, rank in rows:
        w.writerow((step, method, repr(rank)))
    return buf.getvalue()


def mass_csv(mass: Mapping[Any, float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MASS_COLUMNS)
    for value, m in mass.items():
        w.writerow((value, repr(m)))
    return buf.getvalue()
