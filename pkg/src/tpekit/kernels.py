"""Kernel families: truncated Gaussian, discretized Gaussian, Aitchison-Aitken.

Each family comes in two flavours: scalar helpers (``gauss_trunc_pdf`` and
friends) operating on one basis, and vectorised ``*Kernels`` classes holding
many bases of one dimension, used by the KDE. Densities are handled in log
space throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtri_exp

from .space import DomainError

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def log_normal_mass(a, b):
    """``log(Phi(b) - Phi(a))`` for ``a <= b``, accurate in both tails."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    # Phi(b) - Phi(a) == Phi(-a) - Phi(-b); keep the upper limit on the left tail
    flip = a > 0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    log_hi = log_ndtr(hi)
    log_lo = log_ndtr(lo)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = log_hi + np.log1p(-np.exp(log_lo - log_hi))
    return out


def _log_gauss(x, mu, b):
    z = (x - mu) / b
    return -0.5 * z * z - np.log(b) - _LOG_SQRT_2PI


def _sample_trunc_std(a, b, u):
    """Inverse-CDF draw from N(0, 1) truncated to [a, b] given uniforms ``u``."""
    flip = a > 0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    log_lo, log_hi = log_ndtr(lo), log_ndtr(hi)
    with np.errstate(divide="ignore"):
        log_p = np.logaddexp(log_lo + np.log1p(-u), log_hi + np.log(u))
    z = ndtri_exp(np.minimum(log_p, 0.0))
    z = np.clip(z, lo, hi)
    return np.where(flip, -z, z)


def _check_bandwidth(bw):
    bw = np.asarray(bw, dtype=float)
    if np.any(~(bw > 0)) or np.any(~np.isfinite(bw)):
        raise ValueError("bandwidths must be finite and > 0")
    return bw


# ---------------------------------------------------------------------------
# single-basis value objects (used by the scalar helpers and in tests)


@dataclass(frozen=True)
class NumericalKernelBasis:
    center: float
    bandwidth: float
    low: float
    high: float

    def __post_init__(self):
        if not self.low <= self.center <= self.high:
            raise DomainError("center outside [low, high]")
        _check_bandwidth(self.bandwidth)


@dataclass(frozen=True)
class DiscreteKernelBasis:
    center: int
    bandwidth: float
    low: float
    step: float
    count: int

    def __post_init__(self):
        if not 0 <= self.center < self.count:
            raise DomainError("center index out of range")
        _check_bandwidth(self.bandwidth)


@dataclass(frozen=True)
class CategoricalKernelBasis:
    center: int
    bandwidth: float
    n_choices: int

    def __post_init__(self):
        if not 0 <= self.center < self.n_choices:
            raise DomainError("center category out of range")
        _check_categorical_bandwidth(self.bandwidth, self.n_choices)


def _check_categorical_bandwidth(b, n_choices):
    if not 0 <= b <= 1:
        raise ValueError(f"categorical bandwidth must lie in [0, 1], got {b}")
    if n_choices == 1 and b > 0:
        raise ValueError("a single-choice categorical needs bandwidth 0")


def gauss_trunc_pdf(basis: NumericalKernelBasis, x: float) -> float:
    if not basis.low <= x <= basis.high:
        raise DomainError(f"{x} outside [{basis.low}, {basis.high}]")
    k = TruncatedGaussianKernels([basis.center], [basis.bandwidth], basis.low, basis.high)
    return float(np.exp(k.log_pdf(np.array([x]))[0, 0]))


def discrete_pdf(basis: DiscreteKernelBasis, index: int) -> float:
    if not 0 <= index < basis.count:
        raise DomainError(f"index {index} outside [0, {basis.count})")
    k = DiscreteGaussianKernels([basis.low + basis.step * basis.center], [basis.bandwidth],
                                basis.low, basis.step, basis.count)
    return float(np.exp(k.log_pdf(np.array([index]))[0, 0]))


def aitchison_aitken_pmf(basis: CategoricalKernelBasis, category: int) -> float:
    if not 0 <= category < basis.n_choices:
        raise DomainError(f"category {category} outside [0, {basis.n_choices})")
    if category == basis.center:
        return 1.0 - basis.bandwidth
    return basis.bandwidth / (basis.n_choices - 1)


def kernel_sample(basis, rng: np.random.Generator):
    """One draw from a single kernel basis."""
    if isinstance(basis, NumericalKernelBasis):
        k = TruncatedGaussianKernels([basis.center], [basis.bandwidth], basis.low, basis.high)
        return float(k.sample(np.zeros(1, dtype=int), rng)[0])
    if isinstance(basis, DiscreteKernelBasis):
        k = DiscreteGaussianKernels([basis.low + basis.step * basis.center], [basis.bandwidth],
                                    basis.low, basis.step, basis.count)
        return int(k.sample(np.zeros(1, dtype=int), rng)[0])
    if isinstance(basis, CategoricalKernelBasis):
        k = AitchisonAitkenKernels([basis.center], [basis.bandwidth], basis.n_choices)
        return int(k.sample(np.zeros(1, dtype=int), rng)[0])
    raise TypeError(f"unknown basis type {type(basis).__name__}")


# ---------------------------------------------------------------------------
# vectorised kernels: one object per dimension, many bases


class TruncatedGaussianKernels:
    """Gaussian bases ``g(x | mu_n, b_n)`` renormalised on ``[low, high]``."""

    def __init__(self, centers, bandwidths, low, high):
        self.centers = np.asarray(centers, dtype=float)
        self.bandwidths = _check_bandwidth(np.broadcast_to(np.asarray(bandwidths, dtype=float), self.centers.shape))
        self.low, self.high = float(low), float(high)
        self.log_z = log_normal_mass(
            (self.low - self.centers) / self.bandwidths, (self.high - self.centers) / self.bandwidths
        )

    def log_pdf(self, x) -> np.ndarray:
        """Matrix of log densities, shape ``(len(x), n_bases)``."""
        x = np.asarray(x, dtype=float)
        if np.any(x < self.low) or np.any(x > self.high):
            raise DomainError(f"points outside [{self.low}, {self.high}]")
        return _log_gauss(x[:, None], self.centers[None, :], self.bandwidths[None, :]) - self.log_z[None, :]

    def sample(self, basis_idx, rng: np.random.Generator) -> np.ndarray:
        basis_idx = np.asarray(basis_idx, dtype=int)
        mu, b = self.centers[basis_idx], self.bandwidths[basis_idx]
        u = rng.random(basis_idx.shape)
        z = _sample_trunc_std((self.low - mu) / b, (self.high - mu) / b, u)
        return np.clip(mu + b * z, self.low, self.high)


class DiscreteGaussianKernels:
    """Gaussian mass over cells ``[x - step/2, x + step/2]`` of a grid.

    Centers are real values on the grid axis (the prior sits at the midpoint,
    which need not be a grid point); query points are grid *indices*.
    """

    def __init__(self, centers, bandwidths, low, step, count):
        self.centers = np.asarray(centers, dtype=float)
        self.low, self.step, self.count = float(low), float(step), int(count)
        self.bandwidths = _check_bandwidth(np.broadcast_to(np.asarray(bandwidths, dtype=float), self.centers.shape))
        mu = self.centers
        lo = self.low - self.step / 2
        hi = self.low + (self.count - 1) * self.step + self.step / 2
        self._mu = mu
        self.log_z = log_normal_mass((lo - mu) / self.bandwidths, (hi - mu) / self.bandwidths)

    def log_pdf(self, index) -> np.ndarray:
        index = np.asarray(index)
        if np.any(index < 0) or np.any(index >= self.count):
            raise DomainError(f"grid index outside [0, {self.count})")
        x = self.low + self.step * index.astype(float)
        b = self.bandwidths[None, :]
        a = (x[:, None] - self.step / 2 - self._mu[None, :]) / b
        c = (x[:, None] + self.step / 2 - self._mu[None, :]) / b
        return log_normal_mass(a, c) - self.log_z[None, :]

    def sample(self, basis_idx, rng: np.random.Generator) -> np.ndarray:
        # a truncated Gaussian on the padded interval, rounded to its cell,
        # has exactly the cell masses above
        basis_idx = np.asarray(basis_idx, dtype=int)
        mu, b = self._mu[basis_idx], self.bandwidths[basis_idx]
        lo = self.low - self.step / 2
        hi = self.low + (self.count - 1) * self.step + self.step / 2
        u = rng.random(basis_idx.shape)
        x = mu + b * _sample_trunc_std((lo - mu) / b, (hi - mu) / b, u)
        return np.clip(np.floor((x - lo) / self.step), 0, self.count - 1).astype(int)


class AitchisonAitkenKernels:
    """``1 - b`` on the center category, ``b / (C - 1)`` elsewhere."""

    def __init__(self, centers, bandwidths, n_choices):
        self.centers = np.asarray(centers, dtype=int)
        self.n_choices = int(n_choices)
        self.bandwidths = np.broadcast_to(np.asarray(bandwidths, dtype=float), self.centers.shape).copy()
        for b in np.unique(self.bandwidths):
            _check_categorical_bandwidth(b, self.n_choices)

    def probabilities(self) -> np.ndarray:
        """Table of shape ``(n_bases, n_choices)``."""
        n, c = len(self.centers), self.n_choices
        if c == 1:
            return np.ones((n, 1))
        table = np.repeat((self.bandwidths / (c - 1))[:, None], c, axis=1)
        table[np.arange(n), self.centers] = 1.0 - self.bandwidths
        return table

    def log_pdf(self, category) -> np.ndarray:
        category = np.asarray(category)
        if np.any(category < 0) or np.any(category >= self.n_choices):
            raise DomainError(f"category outside [0, {self.n_choices})")
        with np.errstate(divide="ignore"):
            return np.log(self.probabilities().T[category.astype(int)])

    def sample(self, basis_idx, rng: np.random.Generator) -> np.ndarray:
        basis_idx = np.asarray(basis_idx, dtype=int)
        c = self.n_choices
        centers = self.centers[basis_idx]
        if c == 1:
            rng.random(basis_idx.shape)
            return np.zeros(basis_idx.shape, dtype=int)
        u = rng.random(basis_idx.shape)
        b = self.bandwidths[basis_idx]
        stay = u < 1.0 - b
        # uniform over the other C-1 categories, reusing the same uniform
        v = np.where(stay, 0.0, (u - (1.0 - b)) / np.where(b > 0, b, 1.0))
        other = np.minimum((v * (c - 1)).astype(int), c - 2)
        other = other + (other >= centers)
        return np.where(stay, centers, other)


class UniformCategoricalKernel(AitchisonAitkenKernels):
    """The uniform categorical prior as a single basis."""

    def __init__(self, n_choices):
        b = (n_choices - 1) / n_choices
        super().__init__([0], [b], n_choices)
