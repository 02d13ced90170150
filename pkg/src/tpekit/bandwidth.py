"""Bandwidth heuristics and the (generalised) magic clipping floor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np

Heuristic = Literal["hyperopt", "scott", "optuna"]


@dataclass(frozen=True)
class BandwidthConfig:
    """Numerical and categorical bandwidth selection.

    ``magic_rule="power"`` floors bandwidths at ``max(delta*(R-L), (R-L)/N**alpha)``;
    ``magic_rule="legacy"`` uses ``(R-L)/min(100, N)`` for the magic term.
    ``categorical`` is a fixed Aitchison-Aitken bandwidth, ``"optuna"`` or ``"scott"``.
    """

    heuristic: Heuristic = "hyperopt"
    consider_magic_clip: bool = True
    alpha: float = 2.0
    delta: float = 0.03
    consider_endpoints: bool = False
    categorical: Union[float, str] = "optuna"
    magic_rule: Literal["power", "legacy"] = "power"

    def __post_init__(self):
        if self.heuristic not in ("hyperopt", "scott", "optuna"):
            raise ValueError(f"unknown bandwidth heuristic {self.heuristic!r}")
        if not 0 <= self.delta < 1:
            raise ValueError("delta must lie in [0, 1)")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0 (math.inf disables the magic term)")
        if self.magic_rule not in ("power", "legacy"):
            raise ValueError(f"unknown magic_rule {self.magic_rule!r}")
        if isinstance(self.categorical, str):
            if self.categorical not in ("optuna", "scott"):
                raise ValueError(f"unknown categorical bandwidth rule {self.categorical!r}")
        elif not 0 <= float(self.categorical) <= 1:
            raise ValueError("a fixed categorical bandwidth must lie in [0, 1]")


def bw_hyperopt(sorted_centers, low: float, high: float, consider_endpoints: bool = False) -> np.ndarray:
    """Per-basis bandwidth = the larger of the two neighbour gaps."""
    x = np.asarray(sorted_centers, dtype=float)
    if x.size == 0:
        raise ValueError("need at least one center")
    if np.any(np.diff(x) < 0):
        raise ValueError("centers must be sorted ascending")
    if consider_endpoints:
        x = np.concatenate([[low], x, [high]])
    gaps = np.diff(x)
    if gaps.size == 0:
        # a lone center without endpoints has no neighbour
        return np.zeros(1)
    left = np.concatenate([[-np.inf], gaps])
    right = np.concatenate([gaps, [-np.inf]])
    b = np.maximum(left, right)
    return b[1:-1] if consider_endpoints else b


def _iqr(x: np.ndarray) -> float:
    q75, q25 = np.percentile(x, [75, 25])  # linear interpolation
    return float(q75 - q25)


def bw_scott(centers) -> float:
    """``1.059 * N**(-1/5) * min(sigma, IQR / 1.34)``.

    sigma uses ``ddof=1``; a single center has zero spread.
    """
    x = np.asarray(centers, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("need at least one center")
    if n == 1:
        return 0.0
    sigma = float(np.std(x, ddof=1))
    return 1.059 * n ** (-0.2) * min(sigma, _iqr(x) / 1.34)


def bw_optuna_numerical(n: int, dim: int, low: float, high: float) -> float:
    if n < 1 or dim < 1:
        raise ValueError("n and dim must be >= 1")
    return (high - low) / 5.0 * n ** (-1.0 / (dim + 4))


def bw_optuna_categorical(n: int, n_choices: int) -> float:
    if n < 1 or n_choices < 1:
        raise ValueError("n and n_choices must be >= 1")
    return (1.0 + 1.0 / n) / (1.0 + n_choices / n)


def min_bandwidth(low: float, high: float, n_effective: int, cfg: BandwidthConfig) -> float:
    width = high - low
    if not cfg.consider_magic_clip or math.isinf(cfg.alpha):
        magic = 0.0
    elif cfg.magic_rule == "legacy":
        magic = width / min(100, max(n_effective, 1))
    else:
        magic = width / max(n_effective, 1) ** cfg.alpha
    return max(cfg.delta * width, magic)


def magic_clip(raw_b, low: float, high: float, n_effective: int, cfg: BandwidthConfig):
    """``max(raw_b, b_min)``, elementwise for arrays."""
    if n_effective < 1:
        raise ValueError("n_effective must be >= 1")
    floor = min_bandwidth(low, high, n_effective, cfg)
    out = np.maximum(raw_b, floor)
    return float(out) if np.ndim(out) == 0 else out
