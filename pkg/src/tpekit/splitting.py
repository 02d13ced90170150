"""Quantile rules and the better/worse partition of observations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np


@dataclass(frozen=True)
class SplitConfig:
    rule: Literal["linear", "sqrt"] = "linear"
    beta: float = 0.15
    better_group_cap: Optional[int] = None

    def __post_init__(self):
        if self.rule not in ("linear", "sqrt"):
            raise ValueError(f"unknown splitting rule {self.rule!r}")
        if self.rule == "linear" and not 0 < self.beta <= 1:
            raise ValueError("linear beta must lie in (0, 1]")
        if self.rule == "sqrt" and not self.beta > 0:
            raise ValueError("sqrt beta must be > 0")
        if self.better_group_cap is not None and self.better_group_cap < 1:
            raise ValueError("better_group_cap must be >= 1")


def compute_gamma(cfg: SplitConfig, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    if cfg.rule == "linear":
        return float(cfg.beta)
    return min(cfg.beta / math.sqrt(n), 1.0)


def n_better(cfg: SplitConfig, n: int) -> int:
    # round() absorbs float noise such as 0.1 * 30 = 3.0000000000000004
    n_l = max(1, math.ceil(round(compute_gamma(cfg, n) * n, 9)))
    if cfg.better_group_cap is not None:
        n_l = min(n_l, cfg.better_group_cap)
    return min(n_l, n)


@dataclass(frozen=True)
class SplitResult:
    gamma: float
    n_better: int
    better: np.ndarray  # indices into the original observations, best first
    worse: np.ndarray
    y_gamma: float


def split(y, cfg: SplitConfig) -> SplitResult:
    """Stable sort by objective; the first ``n_better`` form the better group.

    ``y_gamma`` is the largest objective inside the better group.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    order = np.argsort(y, kind="stable")
    n_l = n_better(cfg, n)
    better, worse = order[:n_l], order[n_l:]
    return SplitResult(compute_gamma(cfg, n), n_l, better, worse, float(y[better[-1]]))
