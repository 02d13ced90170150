"""The TPE sampler and the ask/tell study loop."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bandwidth import BandwidthConfig
from .kde import ParzenEstimator, UniformDensity, build_kde
from .results import StudyResult
from .space import NULL, Categorical, Configuration, SearchSpace, enumerate_subspaces, random_sample
from .splitting import SplitConfig, split
from .utils import PENALTY, check_finite_value, spawn_streams
from .weighting import WeightConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TPEConfig:
    """The full control-parameter vector, grouped by component."""

    n_startup_trials: int = 10
    n_ei_candidates: int = 24
    split: SplitConfig = field(default_factory=SplitConfig)
    weights: WeightConfig = field(default_factory=lambda: WeightConfig(rule="ei"))
    bandwidth: BandwidthConfig = field(default_factory=BandwidthConfig)
    multivariate: bool = True
    consider_prior: bool = True
    group: bool = False
    epsilon: float = 0.0
    subspace_fallback: str = "random"

    def __post_init__(self):
        if self.n_startup_trials < 1:
            raise ValueError("n_startup_trials must be >= 1")
        if self.n_ei_candidates < 1:
            raise ValueError("n_ei_candidates must be >= 1")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.subspace_fallback not in ("random", "prior"):
            raise ValueError("subspace_fallback must be 'random' or 'prior'")


class TPESampler(BaseEstimator):
    """Tree-structured Parzen estimator.

    Every control parameter is a constructor argument, so ``get_params`` /
    ``set_params`` / ``clone`` behave as for any scikit-learn estimator.
    :meth:`fit` builds the better/worse densities from evaluated
    configurations; :meth:`score_samples` is the log density ratio used as
    acquisition and :meth:`suggest` returns its argmax over candidates drawn
    from the better density.

    Parameters
    ----------
    n_startup_trials : int
        Random configurations before the model is used.
    n_ei_candidates : int
        Candidates drawn from the better density per suggestion.
    gamma : {"linear", "sqrt"}
    beta : float
        ``gamma = beta`` (linear) or ``beta / sqrt(N)`` (sqrt).
    better_group_cap : int or None
    weights : {"uniform", "old_decay", "old_drop", "ei", "bohb_uniform"}
    t_old : int
    prior_weight : float
    bandwidth : {"hyperopt", "scott", "optuna"}
    consider_magic_clip : bool
    magic_rule : {"power", "legacy"}
    alpha : float
        Exponent of the magic floor ``(R - L) / N**alpha``; ``math.inf`` disables it.
    delta : float
        Minimum bandwidth as a fraction of ``R - L``.
    consider_endpoints : bool
    categorical_bandwidth : float or {"optuna", "scott"}
    multivariate : bool
    consider_prior : bool
    group : bool
        Model each subspace of a conditional space separately.
    epsilon : float
        Probability of returning a uniformly random configuration.
    subspace_fallback : {"random", "prior"}
        What group mode does when no subspace has two observations.
    """

    def __init__(
        self,
        n_startup_trials=10,
        n_ei_candidates=24,
        gamma="linear",
        beta=0.15,
        better_group_cap=None,
        weights="ei",
        t_old=25,
        prior_weight=1.0,
        bandwidth="hyperopt",
        consider_magic_clip=True,
        magic_rule="power",
        alpha=2.0,
        delta=0.03,
        consider_endpoints=False,
        categorical_bandwidth="optuna",
        multivariate=True,
        consider_prior=True,
        group=False,
        epsilon=0.0,
        subspace_fallback="random",
    ):
        self.n_startup_trials = n_startup_trials
        self.n_ei_candidates = n_ei_candidates
        self.gamma = gamma
        self.beta = beta
        self.better_group_cap = better_group_cap
        self.weights = weights
        self.t_old = t_old
        self.prior_weight = prior_weight
        self.bandwidth = bandwidth
        self.consider_magic_clip = consider_magic_clip
        self.magic_rule = magic_rule
        self.alpha = alpha
        self.delta = delta
        self.consider_endpoints = consider_endpoints
        self.categorical_bandwidth = categorical_bandwidth
        self.multivariate = multivariate
        self.consider_prior = consider_prior
        self.group = group
        self.epsilon = epsilon
        self.subspace_fallback = subspace_fallback

    @property
    def config(self) -> TPEConfig:
        """Validated, component-grouped view of the parameters."""
        return TPEConfig(
            n_startup_trials=int(self.n_startup_trials),
            n_ei_candidates=int(self.n_ei_candidates),
            split=SplitConfig(self.gamma, float(self.beta), self.better_group_cap),
            weights=WeightConfig(self.weights, int(self.t_old), float(self.prior_weight)),
            bandwidth=BandwidthConfig(
                heuristic=self.bandwidth,
                consider_magic_clip=bool(self.consider_magic_clip),
                alpha=float(self.alpha),
                delta=float(self.delta),
                consider_endpoints=bool(self.consider_endpoints),
                categorical=self.categorical_bandwidth,
                magic_rule=self.magic_rule,
            ),
            multivariate=bool(self.multivariate),
            consider_prior=bool(self.consider_prior),
            group=bool(self.group),
            epsilon=float(self.epsilon),
            subspace_fallback=self.subspace_fallback,
        )

    # ------------------------------------------------------------------
    def fit(self, X: Sequence[Configuration], y, *, space: SearchSpace, query_orders=None):
        """Build the better/worse densities.

        Parameters
        ----------
        X : sequence of configurations (transformed space, NULL for inactive)
        y : objective values, finite
        space : SearchSpace
        query_orders : evaluation order of each observation, default ``1..N``
        """
        cfg = self.config
        X = [space.validate(x) for x in X]
        y = np.asarray(y, dtype=float)
        if len(X) != y.size or y.size == 0:
            raise ValueError("X and y must be non-empty and of equal length")
        if not np.all(np.isfinite(y)):
            raise ValueError("objective values must be finite")
        orders = np.arange(1, y.size + 1) if query_orders is None else np.asarray(query_orders)
        self.space_ = space
        self.config_ = cfg
        self.fallback_ = False

        if space.is_conditional and not cfg.group:
            if cfg.multivariate:
                raise ValueError("a multivariate model of a conditional space needs group=True")
            self._fit_per_dim(X, y, orders, cfg)
            return self

        if space.is_conditional:
            groups = enumerate_subspaces(space, X)
            dims, members = max(groups, key=lambda g: len(g[1]))
            if len(members) < 2:
                self.fallback_ = True
                members = []
        else:
            dims, members = tuple(range(len(space))), list(range(len(X)))
        self.mode_ = "joint"
        self.subspace_ = tuple(dims)
        domains = [space.domains[i] for i in dims]
        Xs = np.array([[X[n][i] for i in dims] for n in members], dtype=float).reshape(-1, len(dims))
        ys, os_ = y[members], orders[members]
        if len(members) == 0:
            self.gamma_, self.y_gamma_ = 1.0, math.inf
            prior_only = cfg.consider_prior and cfg.subspace_fallback == "prior"
            self.fallback_ = not prior_only
            kde = self._make_kde(Xs, ys, os_, 0.0, domains, "better", cfg, len(space)) if prior_only else None
            self.kde_better_ = self.kde_worse_ = kde
            return self
        sr = split(ys, cfg.split)
        self.gamma_, self.y_gamma_, self.split_ = sr.gamma, sr.y_gamma, sr
        self.kde_better_ = self._make_kde(Xs[sr.better], ys[sr.better], os_[sr.better], sr.y_gamma,
                                          domains, "better", cfg, len(space))
        self.kde_worse_ = self._make_kde(Xs[sr.worse], ys[sr.worse], os_[sr.worse], sr.y_gamma,
                                         domains, "worse", cfg, len(space))
        return self

    @staticmethod
    def _make_kde(X, y, orders, y_gamma, domains, which, cfg: TPEConfig, n_dims):
        return build_kde(
            X, y, orders, y_gamma, domains, which,
            weights=cfg.weights, bandwidth=cfg.bandwidth,
            multivariate=cfg.multivariate, consider_prior=cfg.consider_prior, n_dims=n_dims,
        )

    def _fit_per_dim(self, X, y, orders, cfg: TPEConfig):
        space = self.space_
        sr = split(y, cfg.split)
        self.mode_ = "per_dim"
        self.subspace_ = tuple(range(len(space)))
        self.gamma_, self.y_gamma_, self.split_ = sr.gamma, sr.y_gamma, sr
        self.kde_better_, self.kde_worse_ = [], []
        for i, dom in enumerate(space.domains):
            for which, idx, store in (("better", sr.better, self.kde_better_), ("worse", sr.worse, self.kde_worse_)):
                idx = [n for n in idx if X[n][i] is not NULL]
                col = np.array([X[n][i] for n in idx], dtype=float).reshape(-1, 1)
                store.append(self._make_kde(col, y[idx], orders[idx], sr.y_gamma, [dom], which, cfg, len(space)))

    # ------------------------------------------------------------------
    def _check_fitted(self):
        check_is_fitted(self, "mode_")
        if self.kde_better_ is None:
            raise RuntimeError("no model: group mode fell back to random sampling")

    def _joint_scores(self, Xs: np.ndarray) -> np.ndarray:
        return self.kde_better_.score_samples(Xs) - self.kde_worse_.score_samples(Xs)

    def score_samples(self, X: Sequence[Configuration]) -> np.ndarray:
        """Acquisition ``log p(x | better) - log p(x | worse)``."""
        self._check_fitted()
        if self.mode_ == "joint":
            try:
                Xs = np.array([[x[i] for i in self.subspace_] for x in X], dtype=float)
            except TypeError:
                raise ValueError("configurations must define every dimension of the modelled subspace")
            return self._joint_scores(Xs.reshape(-1, len(self.subspace_)))
        out = np.zeros(len(X))
        for i in range(len(self.space_)):
            col = np.array([x[i] if x[i] is not NULL else np.nan for x in X], dtype=float)
            act = ~np.isnan(col)
            if act.any():
                out[act] += (self.kde_better_[i].score_samples(col[act, None])
                             - self.kde_worse_[i].score_samples(col[act, None]))
        return out

    def per_dim_scores(self, X: Sequence[Configuration]) -> np.ndarray:
        """Per-dimension log ratios, shape ``(len(X), D)``; only for univariate models."""
        self._check_fitted()
        if self.multivariate:
            raise ValueError("per-dimension ratios exist only for univariate models")
        dims = self.subspace_
        out = np.zeros((len(X), len(dims)))
        for j, i in enumerate(dims):
            col = np.array([[x[i]] for x in X], dtype=float)
            if self.mode_ == "per_dim":
                lb, lg = self.kde_better_[i], self.kde_worse_[i]
                out[:, j] = lb.score_samples(col) - lg.score_samples(col)
            else:
                out[:, j] = _marginal_log_ratio(self.kde_better_, self.kde_worse_, j, col)
        return out

    def pi(self, X: Sequence[Configuration]) -> np.ndarray:
        """``gamma p_l / (gamma p_l + (1 - gamma) p_g)``, a monotone map of the ratio."""
        r = self.score_samples(X)
        g = self.gamma_
        if g >= 1:
            return np.ones_like(r)
        return expit(r + math.log(g / (1 - g)))

    def suggest(self, random_state=None) -> Configuration:
        """Best of ``n_ei_candidates`` draws from the better density."""
        check_is_fitted(self, "mode_")
        rng = random_state if isinstance(random_state, np.random.Generator) else np.random.default_rng(random_state)
        space, cfg = self.space_, self.config_
        if self.kde_better_ is None:
            return random_sample(space, rng)
        n_s = cfg.n_ei_candidates
        if self.mode_ == "joint":
            cand = self.kde_better_.sample(n_s, rng)
            scores = self._joint_scores(cand)
            proposals = []
            for row in cand:
                p: List[Any] = [None] * len(space)
                for j, i in enumerate(self.subspace_):
                    p[i] = _as_value(space.domains[i], row[j])
                proposals.append(p)
            if space.is_conditional:
                # a draw may flip a parent and leave the modelled subspace
                inside = np.array([self._stays_in_subspace(p) for p in proposals])
                if inside.any():
                    scores = np.where(inside, scores, -np.inf)
            return space.resolve(proposals[int(np.argmax(scores))], rng)
        draws = np.column_stack([k.sample(n_s, rng)[:, 0] for k in self.kde_better_])
        cands = [space.resolve([_as_value(d, v) for d, v in zip(space.domains, row)], rng) for row in draws]
        best = int(np.argmax(self.score_samples(cands)))
        return cands[best]


    def _stays_in_subspace(self, proposal) -> bool:
        values = [NULL if v is None else v for v in proposal]
        active = {i for i in range(len(self.space_)) if self.space_.is_active(i, values)}
        return active == set(self.subspace_)


def _as_value(dom, v):
    return int(round(v)) if isinstance(dom, Categorical) else float(v)


def _marginal_log_ratio(kl, kg, j, col):
    def marginal(k):
        if isinstance(k, UniformDensity):
            return UniformDensity([k.domains[j]]).score_samples(col)
        from scipy.special import logsumexp

        m = k.kernels_[j].log_pdf(k._kernel_input(j, col[:, 0]))
        return logsumexp(k.log_weights_[j][None, :] + m, axis=1)

    return marginal(kl) - marginal(kg)


@dataclass(frozen=True)
class Observation:
    config: Configuration
    value: float
    order: int
    elapsed: float = 0.0
    true_value: Optional[float] = None


class Study:
    """Single-writer ask/tell loop around a :class:`TPESampler`.

    ``seed`` fixes three independent random streams (candidate sampling,
    epsilon coin, objective noise).
    """

    def __init__(self, space: SearchSpace, sampler: Optional[TPESampler] = None, seed=None,
                 penalty: float = PENALTY):
        self.space = space
        self.sampler = sampler if sampler is not None else TPESampler()
        self.seed = seed
        self.penalty = penalty
        self.trials: List[Observation] = []
        self._sample_rng, self._eps_rng, self.noise_rng = spawn_streams(seed)
        self._fitted_at = -1

    def __len__(self):
        return len(self.trials)

    @property
    def values(self) -> np.ndarray:
        return np.array([t.value for t in self.trials])

    def _refit(self):
        if self._fitted_at != len(self.trials):
            self.sampler.fit([t.config for t in self.trials], self.values, space=self.space,
                             query_orders=[t.order for t in self.trials])
            self._fitted_at = len(self.trials)

    def ask(self) -> Configuration:
        cfg = self.sampler.config
        if len(self.trials) < cfg.n_startup_trials:
            return random_sample(self.space, self._sample_rng)
        if self._eps_rng.random() < cfg.epsilon:
            return random_sample(self.space, self._sample_rng)
        self._refit()
        return self.sampler.suggest(self._sample_rng)

    def tell(self, config: Configuration, value, elapsed: float = 0.0, true_value=None) -> Observation:
        config = self.space.validate(config)
        y = check_finite_value(value, self.penalty)
        obs = Observation(config, y, len(self.trials) + 1, float(elapsed),
                          None if true_value is None else float(true_value))
        self.trials.append(obs)
        return obs

    def acquisition(self, configs: Sequence[Configuration]) -> np.ndarray:
        """Log density ratio under the model built from the current trials."""
        self._refit()
        return self.sampler.score_samples(configs)

    def pi(self, configs: Sequence[Configuration]) -> np.ndarray:
        self._refit()
        return self.sampler.pi(configs)

    def optimize(self, objective: Callable[[Dict[str, Any]], Any], n_trials: int,
                 config_name: str = "tpe", benchmark: str = "") -> StudyResult:
        """Run ``n_trials`` ask/evaluate/tell rounds.

        ``objective`` receives raw parameter values by name and returns the
        observed value, or ``(observed, noiseless)``. Exceptions and non-finite
        values are recorded as the penalty value.
        """
        for _ in range(n_trials):
            t0 = time.perf_counter()
            config = self.ask()
            params = self.space.to_params(config)
            true_value = None
            try:
                out = objective(params)
                if isinstance(out, tuple):
                    out, true_value = out
            except Exception as exc:  # noqa: BLE001 - any evaluator failure is a penalty
                logger.warning("objective failed at trial %d: %s", len(self.trials) + 1, exc)
                out = self.penalty
            self.tell(config, out, time.perf_counter() - t0, true_value)
        return self.result(config_name, benchmark)

    def result(self, config_name: str = "tpe", benchmark: str = "") -> StudyResult:
        true = [t.true_value for t in self.trials]
        return StudyResult(
            config_name=config_name,
            benchmark=benchmark,
            seed=self.seed,
            values=[t.value for t in self.trials],
            params=[self.space.to_params(t.config) for t in self.trials],
            elapsed=[t.elapsed for t in self.trials],
            true_values=None if all(v is None for v in true) else true,
            config_params=self.sampler.get_params(),
        )

    # -- trial log -------------------------------------------------------
    def trial_records(self, timing: bool = True) -> List[Dict[str, Any]]:
        recs = []
        for t in self.trials:
            rec = {"order": t.order, "params": self.space.to_params(t.config), "value": t.value}
            if timing:
                rec["elapsed"] = t.elapsed
            recs.append(rec)
        return recs

    def dumps_trials(self, timing: bool = True) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.trial_records(timing))

    def save_trials(self, path, timing: bool = True) -> None:
        with open(path, "w") as f:
            f.write(self.dumps_trials(timing))

    def load_trials(self, path) -> None:
        """Append trials from a JSON-lines log written by :meth:`save_trials`."""
        with open(path) as f:
            for line in f:
                if line.strip():
                    rec = json.loads(line)
                    self.tell(self.space.from_params(rec["params"]), rec["value"], rec.get("elapsed", 0.0))
