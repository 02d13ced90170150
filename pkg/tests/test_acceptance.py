"""Acceptance criteria 1-11, each at its stated tolerance and time budget."""

import json
import math
import statistics
import time

import numpy as np
import pytest
from scipy import stats

from tpekit.bandwidth import (
    BandwidthConfig,
    bw_hyperopt,
    bw_optuna_categorical,
    bw_optuna_numerical,
    bw_scott,
    magic_clip,
)
from tpekit.benchmarks import FUNCTIONS, BenchmarkSpec, get_benchmark, random_search
from tpekit.cli import main
from tpekit.kde import ParzenEstimator, build_kde
from tpekit.presets import make_sampler
from tpekit.sampler import Study, TPESampler
from tpekit.space import Categorical, Continuous, DiscreteGrid, SearchSpace, enumerate_subspaces, random_sample
from tpekit.splitting import SplitConfig, split
from tpekit.weighting import WeightConfig, group_weights, weights_bohb_uniform

from test_bandwidth import gaps_by_brute_force, scott_by_hand
from test_space import _cfg, nn_space

WEIGHT_RULES = ("uniform", "old_decay", "old_drop", "ei", "bohb_uniform")


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


@pytest.mark.criterion(1, "weights sum to one for every rule (1e-12, < 5 s)")
def test_weight_normalization():
    rng = np.random.default_rng(2024)
    worst = 0.0
    with Timer() as t:
        for rule in WEIGHT_RULES:
            for _ in range(1000):
                n = int(rng.integers(1, 120))
                y = rng.normal(size=n) * rng.choice([1e-3, 1.0, 1e3])
                orders = rng.permutation(n) + 1
                sr = split(y, SplitConfig(rng.choice(["linear", "sqrt"]), float(rng.uniform(0.05, 1.0))))
                prior = bool(rng.integers(2))
                cfg = WeightConfig(rule, t_old=int(rng.integers(1, 50)), prior_weight=float(rng.uniform(0.2, 5)))
                for which, idx in (("better", sr.better), ("worse", sr.worse)):
                    if idx.size == 0 and not prior:
                        continue
                    if rule == "bohb_uniform":
                        x = rng.random(idx.size)
                        wv = weights_bohb_uniform(x, rng.uniform(1e-3, 2, idx.size), 0.0, 1.0, prior)
                    else:
                        wv = group_weights(cfg, which, y[idx], orders[idx], sr.y_gamma, prior)
                    worst = max(worst, abs(wv.as_array().sum() - 1.0))
    print(f"max |sum - 1| = {worst:.2e}, {t.seconds:.2f} s")
    assert worst <= 1e-12
    assert t.seconds < 5


def _integrate_1d(est, dom):
    if isinstance(dom, Categorical):
        return float(np.exp(est.score_samples(np.arange(dom.n_choices)[:, None])).sum())
    if isinstance(dom, DiscreteGrid):
        return float(np.exp(est.score_samples(dom.grid[:, None])).sum())
    lo, hi = dom.bounds
    # dense near every basis so narrow kernels are resolved
    pts = [np.linspace(lo, hi, 20001)]
    for mu, b in zip(est.kernels_[0].centers, est.bandwidths_[0]):
        pts.append(np.clip(mu + b * np.linspace(-10, 10, 801), lo, hi))
    xs = np.unique(np.concatenate(pts))
    return float(np.trapezoid(np.exp(est.score_samples(xs[:, None])), xs))


@pytest.mark.criterion(2, "1D KDEs integrate to one (1e-3, < 30 s)")
def test_kde_normalization():
    rng = np.random.default_rng(7)
    kernels = ("continuous", "discrete", "categorical")
    heuristics = ("hyperopt", "scott", "optuna")
    combos = [(k, h, w) for k in kernels for h in heuristics for w in WEIGHT_RULES]
    errors = []
    with Timer() as t:
        for m in range(200):
            kind, heur, rule = combos[m % len(combos)]
            if kind == "continuous":
                lo = rng.uniform(-5, 5)
                dom = Continuous(lo, lo + rng.uniform(0.1, 10))
                X = rng.uniform(*dom.bounds, size=int(rng.integers(0, 40)))
            elif kind == "discrete":
                dom = DiscreteGrid(rng.uniform(-3, 3), rng.uniform(0.1, 2), int(rng.integers(1, 30)))
                X = dom.grid[rng.integers(0, dom.count, size=int(rng.integers(0, 40)))]
            else:
                dom = Categorical(int(rng.integers(1, 8)))
                X = rng.integers(0, dom.n_choices, size=int(rng.integers(0, 40))).astype(float)
            cat_options = ["optuna", "scott", 0.0, 0.5, 1.0]
            categorical = cat_options[int(rng.integers(len(cat_options)))]
            if dom.bounds[1] - dom.bounds[0] == 0 or (isinstance(dom, Categorical) and dom.n_choices == 1):
                categorical = "optuna"
            bw = BandwidthConfig(
                heuristic=heur,
                consider_magic_clip=bool(rng.integers(2)),
                alpha=float(rng.choice([0.25, 0.5, 1, 2, 4, math.inf])),
                delta=float(rng.choice([0.0, 0.01, 0.03, 0.1, 0.3])),
                consider_endpoints=bool(rng.integers(2)),
                categorical=categorical,
                magic_rule=str(rng.choice(["power", "legacy"])),
            )
            prior = bool(rng.integers(2)) or X.size == 0
            y = rng.normal(size=X.size)
            sr = split(y, SplitConfig()) if X.size else None
            which = str(rng.choice(["better", "worse"]))
            idx = (sr.better if which == "better" else sr.worse) if sr else np.array([], int)
            if idx.size == 0 and not prior:
                prior = True
            est = build_kde(X[idx, None], y[idx], np.arange(1, X.size + 1)[idx], sr.y_gamma if sr else 0.0,
                            [dom], which, weights=WeightConfig(rule), bandwidth=bw,
                            multivariate=bool(rng.integers(2)), consider_prior=prior)
            errors.append(abs(_integrate_1d(est, dom) - 1.0))
    print(f"max |integral - 1| = {max(errors):.2e} over {len(errors)} models, {t.seconds:.2f} s")
    assert max(errors) <= 1e-3
    assert t.seconds < 30


@pytest.mark.criterion(3, "log ratio and PI order a 201-point grid identically (< 10 s)")
def test_acquisition_pi_rank_equivalence():
    rng = np.random.default_rng(11)
    dom = Continuous(-3.0, 3.0)
    space = SearchSpace([("x", dom)])
    grid = np.linspace(-3, 3, 201)
    configs = [(float(g),) for g in grid]
    with Timer() as t:
        for _ in range(50):
            n = int(rng.integers(5, 60))
            X = [(float(v),) for v in rng.uniform(-3, 3, n)]
            shift = rng.uniform(-2, 2)
            y = [(x[0] - shift) ** 2 + rng.normal(scale=0.3) for x in X]
            s = TPESampler(
                gamma=rng.choice(["linear", "sqrt"]), beta=float(rng.uniform(0.1, 1.0)),
                weights=rng.choice(["uniform", "ei", "old_decay"]),
                bandwidth=rng.choice(["hyperopt", "scott", "optuna"]),
                multivariate=bool(rng.integers(2)),
            ).fit(X, y, space=space)
            ratio = s.score_samples(configs)
            pl = np.exp(s.kde_better_.score_samples(grid[:, None]))
            pg = np.exp(s.kde_worse_.score_samples(grid[:, None]))
            g = s.gamma_
            pi = g * pl / (g * pl + (1 - g) * pg)
            assert np.array_equal(stats.rankdata(ratio), stats.rankdata(pi))
            assert stats.spearmanr(ratio, pi).statistic == pytest.approx(1.0, abs=1e-12)
            assert np.argmax(ratio) == np.argmax(pi)
    print(f"50 instances, {t.seconds:.2f} s")
    assert t.seconds < 10


@pytest.mark.criterion(4, "bandwidth rules match independent oracles")
def test_bandwidth_oracles():
    rng = np.random.default_rng(5)
    for _ in range(100):
        pts = np.sort(rng.uniform(0, 1, int(rng.integers(1, 40))))
        endpoints = bool(rng.integers(2))
        np.testing.assert_allclose(bw_hyperopt(pts, 0.0, 1.0, endpoints),
                                   gaps_by_brute_force(list(pts), 0.0, 1.0, endpoints), atol=1e-15)
    for _ in range(100):
        xs = rng.normal(size=int(rng.integers(2, 60))) * rng.uniform(0.01, 100)
        assert abs(bw_scott(xs) - scott_by_hand(xs)) <= 1e-9
        n, d = int(rng.integers(1, 1000)), int(rng.integers(1, 50))
        lo, w = rng.uniform(-10, 10), rng.uniform(0.01, 100)
        assert abs(bw_optuna_numerical(n, d, lo, lo + w) - w / 5 * n ** (-1 / (d + 4))) <= 1e-9
        c = int(rng.integers(1, 20))
        assert abs(bw_optuna_categorical(n, c) - (1 + 1 / n) / (1 + c / n)) <= 1e-9
    for _ in range(2000):
        lo, w = rng.uniform(-10, 10), rng.uniform(0.01, 100)
        n = int(rng.integers(1, 500))
        alpha = float(rng.choice([0.25, 0.5, 1, 2, 4, math.inf]))
        delta = float(rng.choice([0.0, 0.01, 0.03, 0.1, 0.3]))
        raw = rng.uniform(0, w)
        power = BandwidthConfig(alpha=alpha, delta=delta)
        floor = max(delta * w, 0.0 if math.isinf(alpha) else w / n**alpha)
        assert magic_clip(raw, lo, lo + w, n, power) == pytest.approx(max(raw, floor), rel=1e-12)
        legacy = BandwidthConfig(magic_rule="legacy", delta=delta)
        floor = max(delta * w, w / min(100, n))
        assert magic_clip(raw, lo, lo + w, n, legacy) == pytest.approx(max(raw, floor), rel=1e-12)


@pytest.mark.criterion(5, "only the multivariate kernel sees the diagonal interaction")
def test_interaction_check():
    unit = Continuous(0.0, 1.0)
    tight = BandwidthConfig(heuristic="scott", consider_magic_clip=False, delta=0.0)
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    pts = np.array([[0.0, 0.0], [0.0, 1.0]])
    uni = ParzenEstimator(domains=[unit, unit], multivariate=False, consider_prior=False, bandwidth=tight).fit(X)
    multi = ParzenEstimator(domains=[unit, unit], multivariate=True, consider_prior=False, bandwidth=tight).fit(X)
    du, dm = np.exp(uni.score_samples(pts)), np.exp(multi.score_samples(pts))
    print(f"univariate {du}, multivariate {dm}, ratio {dm[0] / dm[1]:.1f}")
    assert abs(du[0] - du[1]) <= 1e-12
    assert dm[0] > 10 * dm[1]


@pytest.mark.criterion(6, "subspaces of the two-layer network example")
def test_group_enumeration():
    configs = [_cfg(1, 0, None), _cfg(1, 1, 0.5), _cfg(2, 0, None, 0), _cfg(2, 0, None, 1, 0.5),
               _cfg(2, 1, 0.5, 0), _cfg(2, 1, 0.5, 1, 0.5)]
    got = [tuple(d + 1 for d in dims) for dims, _ in enumerate_subspaces(nn_space(), configs)]
    assert sorted(got) == sorted([(1, 2, 3, 4), (1, 2, 5), (1, 2, 3, 4, 6, 7, 8),
                                  (1, 2, 3, 4, 6, 9), (1, 2, 5, 6, 7, 8), (1, 2, 5, 6, 9)])


@pytest.mark.criterion(7, "benchmark minima (1e-8; Styblinski oracle 1e-2)")
def test_benchmark_minima():
    for name in FUNCTIONS:
        for d in (1, 2, 5, 10, 30):
            b = BenchmarkSpec(name, d)
            assert abs(b.true_value(b.minimizer) - b.minimum) <= 1e-8, (name, d)
    from scipy.optimize import minimize_scalar

    one = minimize_scalar(lambda x: 0.5 * (x**4 - 16 * x**2 + 5 * x), bounds=(-5, 0), method="bounded",
                          options={"xatol": 1e-10})
    val = get_benchmark("styblinski-5d").true_value(np.full(5, -2.903534))
    assert abs(val - 5 * one.fun) <= 1e-2
    assert abs(val - (-195.83)) <= 1e-2


@pytest.mark.criterion(8, "TPE beats random search on sphere-5d and styblinski-5d (< 3 min)")
def test_optimization_behavior():
    summary = {}
    with Timer() as t:
        for key in ("sphere-5d", "styblinski-5d"):
            bench = get_benchmark(key)
            tpe, rs = [], []
            for seed in range(10):
                study = Study(bench.space(), make_sampler("recommended"), seed=seed)
                tpe.append(study.optimize(bench.objective(study.noise_rng), 200).cumulative_min[-1])
                rs.append(random_search(bench, 200, seed).cumulative_min[-1])
            summary[key] = (float(np.median(tpe)), float(np.median(rs)))
    print(f"median final best (tpe, random): {summary}, {t.seconds:.1f} s")
    for tpe_med, rs_med in summary.values():
        assert tpe_med < rs_med
    assert summary["sphere-5d"][0] <= 0.1 * summary["sphere-5d"][1]
    assert t.seconds < 180


@pytest.mark.criterion(9, "same plan file gives byte-identical logs")
def test_determinism(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({
        "benchmarks": ["sphere-3d", "levy-2d"],
        "configs": {"rec": {"preset": "recommended"}, "tpe2013": {"preset": "tpe2013"},
                    "bohb": {"preset": "bohb"}, "rs": {"preset": "random_search"}},
        "seeds": "0..2", "n_trials": 40,
    }))
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}.jsonl"
        assert main(["run", "--plan", str(plan), "--omit-timing", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] and len(outs[0]) > 0


@pytest.mark.criterion(10, "epsilon = 1 reproduces random search")
def test_epsilon_degeneracy():
    for key in ("sphere-5d", "schwefel-3d", "griewank-2d"):
        bench = get_benchmark(key)
        for seed in range(5):
            study = Study(bench.space(), make_sampler("random"), seed=seed)
            res = study.optimize(bench.objective(), 60)
            ref = random_search(bench, 60, seed)
            assert res.values == ref.values and res.params == ref.params


@pytest.mark.criterion(11, "historical presets use their documented components")
def test_preset_fidelity():
    expected = {
        "tpe2011": ("linear", 0.15, "uniform", "hyperopt", False, True),
        "tpe2013": ("sqrt", 0.25, "old_decay", "hyperopt", False, True),
        "bohb": ("linear", 0.15, "bohb_uniform", "scott", True, False),
        "optuna": ("linear", 0.10, "old_decay", "optuna", True, True),
    }
    for name, (rule, beta, weights, heuristic, multivariate, clip) in expected.items():
        cfg = make_sampler(name).config
        got = (cfg.split.rule, cfg.split.beta, cfg.weights.rule, cfg.bandwidth.heuristic,
               cfg.multivariate, cfg.bandwidth.consider_magic_clip)
        assert got == (rule, beta, weights, heuristic, multivariate, clip), name
    assert make_sampler("tpe2011").config.bandwidth.categorical == 0.0
    assert make_sampler("bohb").config.bandwidth.categorical == "scott"
    assert make_sampler("optuna").config.bandwidth.categorical == "optuna"
