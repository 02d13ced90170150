"""Weighted Parzen estimators over mixed numerical/categorical dimensions."""

from __future__ import annotations

import math
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bandwidth import (
    BandwidthConfig,
    bw_hyperopt,
    bw_optuna_categorical,
    bw_optuna_numerical,
    bw_scott,
    magic_clip,
)
from .kernels import (
    AitchisonAitkenKernels,
    DiscreteGaussianKernels,
    TruncatedGaussianKernels,
)
from .space import Categorical, DiscreteGrid, DomainError, ParamDomain
from .weighting import WeightConfig, WeightVector, group_weights, truncation_mass, weights_uniform

# floor keeping bandwidths strictly positive when every heuristic returns 0
_BW_EPS = 1e-12


def _check_rng(random_state) -> np.random.Generator:
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def _width(dom: ParamDomain) -> float:
    lo, hi = dom.bounds
    if hi > lo:
        return hi - lo
    return dom.step if isinstance(dom, DiscreteGrid) else 1.0


class ParzenEstimator(BaseEstimator):
    """Mixture of per-observation kernels plus an optional non-informative prior.

    Parameters
    ----------
    domains : list of ParamDomain
        One domain per column of the data passed to :meth:`fit`.
    multivariate : bool
        Joint product kernels (``sum_n prod_d``) when True, independent
        per-dimension mixtures (``prod_d sum_n``) otherwise.
    consider_prior : bool
        Add the prior basis: a Gaussian at the domain midpoint with bandwidth
        ``R - L`` (truncated/discretised like the other bases) for numerical
        dimensions and the uniform pmf for categorical ones.
    bandwidth : BandwidthConfig
    n_dims : int, optional
        Search-space dimensionality used by the ``optuna`` bandwidth rule.
        Defaults to ``len(domains)``.
    truncation_weights : bool
        Weight numerical bases by their in-domain mass instead of using the
        weights passed to :meth:`fit`.

    Attributes
    ----------
    weights_ : ndarray of shape (n_dims, n_bases)
        Mixture weights; the prior, if any, is the last basis. Rows coincide
        unless ``truncation_weights`` is set.
    bandwidths_ : list of ndarray
    kernels_ : list
    """

    def __init__(self, domains=None, multivariate=True, consider_prior=True,
                 bandwidth: Optional[BandwidthConfig] = None, n_dims=None,
                 truncation_weights=False):
        self.domains = domains
        self.multivariate = multivariate
        self.consider_prior = consider_prior
        self.bandwidth = bandwidth
        self.n_dims = n_dims
        self.truncation_weights = truncation_weights

    def _validate_data(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, len(self.domains))
        if X.ndim != 2 or X.shape[1] != len(self.domains):
            raise ValueError(f"expected shape (n, {len(self.domains)}), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("data contains non-finite values")
        return X

    def fit(self, X, weights: Optional[WeightVector] = None):
        """Build the mixture from observations ``X`` (transformed space)."""
        if not self.domains:
            raise ValueError("domains must be a non-empty list")
        X = self._validate_data(X) if len(X) else np.empty((0, len(self.domains)))
        n = X.shape[0]
        prior = bool(self.consider_prior)
        if n == 0 and not prior:
            raise ValueError("an empty group needs the prior")
        if weights is None:
            weights = weights_uniform(n, prior)
        w = weights.as_array()
        if w.size != n + prior or (weights.prior is None) == prior:
            raise ValueError("weight vector does not match the data and prior setting")
        cfg = self.bandwidth or BandwidthConfig()
        n_eff = n + prior
        n_dims = self.n_dims or len(self.domains)

        self.kernels_, self.bandwidths_ = [], []
        log_z = np.zeros((len(self.domains), w.size))
        for d, dom in enumerate(self.domains):
            col = X[:, d]
            if isinstance(dom, Categorical):
                kern, bw = self._fit_categorical(dom, col, cfg, n_eff)
            else:
                kern, bw = self._fit_numerical(dom, col, cfg, n_eff, n_dims)
                if self.truncation_weights:
                    lo, hi = dom.bounds
                    mu = kern.centers
                    log_z[d] = np.log(truncation_mass(mu, bw, lo, hi))
            self.kernels_.append(kern)
            self.bandwidths_.append(bw)
        with np.errstate(divide="ignore"):
            log_w = np.log(w)
        if self.multivariate:
            # joint bases: in-domain mass of the product kernel
            log_rows = np.tile(log_w + log_z.sum(axis=0), (len(self.domains), 1))
        else:
            log_rows = log_w[None, :] + log_z
        self.weights_ = np.exp(log_rows - logsumexp(log_rows, axis=1, keepdims=True))
        with np.errstate(divide="ignore"):
            self.log_weights_ = np.log(self.weights_)
        self.n_observations_ = n
        return self

    def _fit_numerical(self, dom, col, cfg: BandwidthConfig, n_eff, n_dims):
        lo, hi = dom.bounds
        width = _width(dom)
        centers = col.copy()
        if self.consider_prior:
            centers = np.append(centers, 0.5 * (lo + hi))
        if cfg.heuristic == "hyperopt":
            order = np.argsort(centers, kind="stable")
            bw = np.empty_like(centers)
            bw[order] = bw_hyperopt(centers[order], lo, hi, cfg.consider_endpoints)
        elif cfg.heuristic == "scott":
            bw = np.full(centers.size, bw_scott(centers))
        else:
            bw = np.full(centers.size, bw_optuna_numerical(n_eff, n_dims, lo, hi))
        if hi > lo:
            bw = magic_clip(bw, lo, hi, n_eff, cfg)
        bw = np.maximum(np.atleast_1d(bw), _BW_EPS * width)
        if self.consider_prior:
            bw[-1] = width
        if isinstance(dom, DiscreteGrid):
            return DiscreteGaussianKernels(centers, bw, dom.low, dom.step, dom.count), bw
        return TruncatedGaussianKernels(centers, bw, lo, hi), bw

    def _fit_categorical(self, dom: Categorical, col, cfg: BandwidthConfig, n_eff):
        c = dom.n_choices
        centers = col.astype(int)
        if c == 1:
            b = 0.0
        elif cfg.categorical == "optuna":
            b = bw_optuna_categorical(n_eff, c)
        elif cfg.categorical == "scott":
            b = bw_scott(centers) if centers.size else 0.0
            b = min(b, (c - 1) / c)
        else:
            b = float(cfg.categorical)
        bw = np.full(centers.size, b)
        if self.consider_prior:
            centers = np.append(centers, 0)
            bw = np.append(bw, (c - 1) / c)  # uniform pmf
        return AitchisonAitkenKernels(centers, bw, c), bw

    # ------------------------------------------------------------------
    def _kernel_input(self, d: int, col: np.ndarray):
        dom = self.domains[d]
        if isinstance(dom, DiscreteGrid):
            return dom.index_of(col)
        if isinstance(dom, Categorical):
            if np.any(col != np.round(col)):
                raise DomainError("categorical values must be integer indices")
            return col.astype(int)
        return col

    def _log_kernel_matrix(self, X) -> List[np.ndarray]:
        return [k.log_pdf(self._kernel_input(d, X[:, d])) for d, k in enumerate(self.kernels_)]

    def score_samples(self, X) -> np.ndarray:
        """Log density at each row of ``X``."""
        check_is_fitted(self, "kernels_")
        X = self._validate_data(X)
        mats = self._log_kernel_matrix(X)
        if self.multivariate:
            return logsumexp(self.log_weights_[0][None, :] + sum(mats), axis=1)
        return sum(logsumexp(lw[None, :] + m, axis=1) for lw, m in zip(self.log_weights_, mats))

    def score(self, X, y=None) -> float:
        """Total log-likelihood of ``X``."""
        return float(np.sum(self.score_samples(X)))

    def sample(self, n_samples=1, random_state=None) -> np.ndarray:
        """Draw rows in transformed space; the basis index is shared across
        dimensions for the joint mixture and drawn per dimension otherwise."""
        check_is_fitted(self, "kernels_")
        rng = _check_rng(random_state)
        n_bases = self.weights_.shape[1]
        out = np.empty((n_samples, len(self.domains)))
        shared = rng.choice(n_bases, size=n_samples, p=self.weights_[0]) if self.multivariate else None
        for d, (dom, kern) in enumerate(zip(self.domains, self.kernels_)):
            idx = shared if shared is not None else rng.choice(n_bases, size=n_samples, p=self.weights_[d])
            draw = kern.sample(idx, rng)
            if isinstance(dom, DiscreteGrid):
                draw = dom.low + dom.step * draw
            out[:, d] = draw
        return out


class UniformDensity:
    """Uniform density over the given domains; stands in for an empty mixture."""

    def __init__(self, domains: Sequence[ParamDomain]):
        self.domains = list(domains)
        self._log_density = -sum(
            math.log(d.n_choices) if isinstance(d, Categorical)
            else math.log(d.count) if isinstance(d, DiscreteGrid)
            else math.log(_width(d))
            for d in self.domains
        )

    def score_samples(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, len(self.domains))
        return np.full(X.shape[0], self._log_density)

    def sample(self, n_samples=1, random_state=None) -> np.ndarray:
        rng = _check_rng(random_state)
        out = np.empty((n_samples, len(self.domains)))
        for d, dom in enumerate(self.domains):
            out[:, d] = [dom.sample(rng) for _ in range(n_samples)]
        return out


def build_kde(
    X,
    y,
    query_orders,
    y_gamma: float,
    domains: Sequence[ParamDomain],
    which: str,
    *,
    weights: WeightConfig,
    bandwidth: BandwidthConfig,
    multivariate: bool = True,
    consider_prior: bool = True,
    n_dims: Optional[int] = None,
):
    """Weighted KDE for the better (``which="better"``) or worse group.

    Observations whose weight is exactly zero are dropped before bandwidth
    selection. An empty group without prior yields :class:`UniformDensity`.
    """
    X = np.asarray(X, dtype=float).reshape(-1, len(domains))
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0 and not consider_prior:
        return UniformDensity(domains)
    wv = group_weights(weights, which, y, query_orders, y_gamma, consider_prior)
    keep = wv.obs > 0
    if not np.all(keep):
        X = X[keep]
        wv = WeightVector(wv.prior, wv.obs[keep])
    est = ParzenEstimator(
        domains=list(domains),
        multivariate=multivariate,
        consider_prior=consider_prior,
        bandwidth=bandwidth,
        n_dims=n_dims,
        truncation_weights=weights.rule == "bohb_uniform",
    )
    return est.fit(X, wv)
