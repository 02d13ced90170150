"""Mixture weights for the better and worse KDEs, prior included."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .kernels import log_normal_mass

WeightRule = Literal["uniform", "old_decay", "old_drop", "ei", "bohb_uniform"]


@dataclass(frozen=True)
class WeightConfig:
    rule: WeightRule = "uniform"
    t_old: int = 25
    prior_weight: float = 1.0

    def __post_init__(self):
        if self.rule not in ("uniform", "old_decay", "old_drop", "ei", "bohb_uniform"):
            raise ValueError(f"unknown weighting rule {self.rule!r}")
        if self.t_old < 1:
            raise ValueError("t_old must be >= 1")
        if not self.prior_weight > 0:
            raise ValueError("prior_weight must be > 0")


@dataclass(frozen=True)
class WeightVector:
    """``prior`` is ``None`` when the mixture has no prior basis."""

    prior: Optional[float]
    obs: np.ndarray

    @property
    def total(self) -> float:
        return float((self.prior or 0.0) + self.obs.sum())

    def as_array(self) -> np.ndarray:
        """Observation weights followed by the prior weight (if any)."""
        if self.prior is None:
            return self.obs.copy()
        return np.append(self.obs, self.prior)


def _normalize(raw_obs: np.ndarray, raw_prior: Optional[float]) -> WeightVector:
    total = raw_obs.sum() + (raw_prior or 0.0)
    if not total > 0:
        raise ValueError("weights sum to zero")
    return WeightVector(None if raw_prior is None else raw_prior / total, raw_obs / total)


def weights_uniform(n: int, include_prior: bool = True) -> WeightVector:
    if n < 0:
        raise ValueError("group size must be >= 0")
    if n == 0 and not include_prior:
        raise ValueError("empty group without prior has no mixture")
    m = n + int(include_prior)
    return WeightVector(1.0 / m if include_prior else None, np.full(n, 1.0 / m))


def _query_ranks(query_orders: Sequence[int]) -> np.ndarray:
    """Rank (1 = oldest) of each observation within its group."""
    q = np.asarray(query_orders)
    ranks = np.empty(q.size, dtype=int)
    ranks[np.argsort(q, kind="stable")] = np.arange(1, q.size + 1)
    return ranks


def weights_old_decay(query_orders: Sequence[int], t_old: int = 25, include_prior: bool = True) -> WeightVector:
    """Linear ramp on older observations, flat on the newest ``t_old`` entries.

    The prior counts as the oldest entry (query rank 1).
    """
    n = len(query_orders)
    if n + 1 <= t_old:
        return weights_uniform(n, include_prior)
    t = _query_ranks(query_orders) + 1  # prior holds t = 1
    # when n == t_old every observation is in the flat part and tau is unused
    tau = (t - 1) / max(n - t_old, 1)
    raw = np.where(t > n + 1 - t_old, 1.0, tau + (1.0 - tau) / (n + 1))
    raw_prior = 1.0 / (n + 1) if include_prior else None  # tau(1) = 0
    return _normalize(raw.astype(float), raw_prior)


def weights_old_drop(query_orders: Sequence[int], t_old: int = 25, include_prior: bool = True) -> WeightVector:
    """Uniform over the newest ``t_old`` observations (plus prior), zero elsewhere."""
    n = len(query_orders)
    if n <= t_old:
        return weights_uniform(n, include_prior)
    keep = _query_ranks(query_orders) > n - t_old
    return _normalize(keep.astype(float), 1.0 if include_prior else None)


def weights_ei(better_y: Sequence[float], y_gamma: float, include_prior: bool = True) -> WeightVector:
    """Weights proportional to the improvement ``y_gamma - y``.

    The prior receives the mean improvement. Falls back to uniform when no
    observation improves on ``y_gamma``.
    """
    y = np.asarray(better_y, dtype=float)
    if not np.all(np.isfinite(y)) or not np.isfinite(y_gamma):
        raise ValueError("objective values must be finite")
    if y.size == 0:
        return weights_uniform(0, include_prior)
    imp = y_gamma - y
    if np.any(imp < 0):
        raise ValueError("every better-group value must be <= y_gamma")
    s = imp.sum()
    if not s > 0:
        return weights_uniform(y.size, include_prior)
    n = y.size
    denom = (1.0 + 1.0 / n) * s
    if not include_prior:
        return WeightVector(None, imp / s)
    return WeightVector(float(s / n / denom), imp / denom)


def truncation_mass(centers, bandwidths, low: float, high: float) -> np.ndarray:
    """``z_n``: mass of the untruncated Gaussian basis inside ``[low, high]``."""
    c = np.asarray(centers, dtype=float)
    b = np.asarray(bandwidths, dtype=float)
    return np.exp(log_normal_mass((low - c) / b, (high - c) / b))


def weights_bohb_uniform(centers, bandwidths, low: float, high: float, include_prior: bool = True,
                         prior_bandwidth: Optional[float] = None) -> WeightVector:
    """Weights proportional to each basis' in-domain mass ``z_n``.

    ``centers``/``bandwidths`` cover the observations; the prior basis sits at
    the midpoint with ``prior_bandwidth`` (default ``high - low``).
    """
    z = truncation_mass(centers, bandwidths, low, high)
    z_prior = None
    if include_prior:
        pb = high - low if prior_bandwidth is None else prior_bandwidth
        z_prior = float(truncation_mass([(low + high) / 2], [pb], low, high)[0])
    return _normalize(z, z_prior)


def apply_prior_weight(wv: WeightVector, prior_weight: float) -> WeightVector:
    if wv.prior is None:
        raise ValueError("the weight vector has no prior")
    if not prior_weight > 0:
        raise ValueError("prior_weight must be > 0")
    if prior_weight == 1.0:
        return wv
    return _normalize(wv.obs.copy(), wv.prior * prior_weight)


def group_weights(
    cfg: WeightConfig,
    which: Literal["better", "worse"],
    y: Sequence[float],
    query_orders: Sequence[int],
    y_gamma: float,
    include_prior: bool,
) -> WeightVector:
    """Weights for one group under ``cfg.rule``.

    The decay/drop and EI rules touch only the group named in their
    definition; the other group is uniform. ``bohb_uniform`` needs the
    bandwidths and is resolved by the KDE, so here it returns uniform.
    """
    n = len(y)
    if cfg.rule == "ei" and which == "better":
        wv = weights_ei(y, y_gamma, include_prior)
    elif cfg.rule == "old_decay" and which == "worse":
        wv = weights_old_decay(query_orders, cfg.t_old, include_prior)
    elif cfg.rule == "old_drop" and which == "worse":
        wv = weights_old_drop(query_orders, cfg.t_old, include_prior)
    else:
        wv = weights_uniform(n, include_prior)
    if include_prior and cfg.prior_weight != 1.0:
        wv = apply_prior_weight(wv, cfg.prior_weight)
    return wv
