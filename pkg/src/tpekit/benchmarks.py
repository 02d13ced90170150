"""Analytic test functions on symmetric boxes, plus a random-search baseline."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from .results import StudyResult
from .space import Continuous, DomainError, SearchSpace, random_sample
from .utils import check_finite_value, spawn_streams

# value of 418.98... * D that zeroes Schwefel at its minimiser
_SCHWEFEL_OFFSET = 418.98288727243295
SCHWEFEL_MINIMIZER = 420.96874878568275
STYBLINSKI_MINIMIZER = -2.903534027771178


def sphere(x):
    return float(np.sum(x**2))


def weighted_sphere(x):
    return float(np.sum(np.arange(1, x.size + 1) * x**2))


def k_tablet(x):
    k = math.ceil(x.size / 4)
    return float(np.sum(x[:k] ** 2) + np.sum((100 * x[k:]) ** 2))


def ackley(x):
    d = x.size
    a = -20 * math.exp(-0.2 * math.sqrt(np.sum(x**2) / d))
    b = -math.exp(np.sum(np.cos(2 * math.pi * x)) / d)
    return float(a + b + 20 + math.e)


def griewank(x):
    i = np.arange(1, x.size + 1)
    return float(1 + np.sum(x**2) / 4000 - np.prod(np.cos(x / np.sqrt(i))))


def levy(x):
    w = 1 + (x - 1) / 4
    head = math.sin(math.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1) ** 2 * (1 + 10 * np.sin(math.pi * w[:-1] + 1) ** 2))
    tail = (w[-1] - 1) ** 2 * (1 + math.sin(2 * math.pi * w[-1]) ** 2)
    return float(head + mid + tail)


def perm(x, beta: float = 1.0):
    d = x.size
    j = np.arange(1, d + 1, dtype=float)
    i = j[:, None]
    inner = np.sum((j[None, :] + beta) * (x[None, :] ** i - 1.0 / j[None, :] ** i), axis=1)
    return float(np.sum(inner**2))


def rastrigin(x):
    return float(10 * x.size + np.sum(x**2 - 10 * np.cos(2 * math.pi * x)))


def rosenbrock(x):
    if x.size == 1:
        return float((1 - x[0]) ** 2)
    return float(np.sum(100 * (x[1:] - x[:-1] ** 2) ** 2 + (1 - x[:-1]) ** 2))


def schwefel(x):
    return float(_SCHWEFEL_OFFSET * x.size - np.sum(x * np.sin(np.sqrt(np.abs(x)))))


def styblinski(x):
    return float(0.5 * np.sum(x**4 - 16 * x**2 + 5 * x))


def xin_she_yang(x):
    return float(np.sum(np.abs(x)) * math.exp(-np.sum(np.sin(x**2))))


@dataclass(frozen=True)
class _Entry:
    func: Callable[[np.ndarray], float]
    bound: float
    minimizer: Callable[[int], np.ndarray]
    minimum: Callable[[int], float]


def _const(v):
    return lambda d: np.full(d, float(v))


FUNCTIONS: Dict[str, _Entry] = {
    "ackley": _Entry(ackley, 32.768, _const(0), lambda d: 0.0),
    "griewank": _Entry(griewank, 600.0, _const(0), lambda d: 0.0),
    "k_tablet": _Entry(k_tablet, 5.12, _const(0), lambda d: 0.0),
    "levy": _Entry(levy, 10.0, _const(1), lambda d: 0.0),
    "perm": _Entry(perm, 1.0, lambda d: 1.0 / np.arange(1, d + 1), lambda d: 0.0),
    "rastrigin": _Entry(rastrigin, 5.12, _const(0), lambda d: 0.0),
    "rosenbrock": _Entry(rosenbrock, 5.0, _const(1), lambda d: 0.0),
    "schwefel": _Entry(schwefel, 500.0, _const(SCHWEFEL_MINIMIZER), lambda d: 0.0),
    "sphere": _Entry(sphere, 5.0, _const(0), lambda d: 0.0),
    "styblinski": _Entry(styblinski, 5.0, _const(STYBLINSKI_MINIMIZER), lambda d: -39.16616570377142 * d),
    "weighted_sphere": _Entry(weighted_sphere, 5.0, _const(0), lambda d: 0.0),
    "xin_she_yang": _Entry(xin_she_yang, 2 * math.pi, _const(0), lambda d: 0.0),
}

_NAME_RE = re.compile(r"^([a-z_]+)-(\d+)d$")


@dataclass(frozen=True)
class BenchmarkSpec:
    """A function at a fixed dimension, with optional Gaussian observation noise."""

    name: str
    dimension: int
    noise_std: float = 0.0

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown benchmark {self.name!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not self.noise_std >= 0:
            raise ValueError("noise_std must be >= 0")

    @classmethod
    def parse(cls, key: str, noise_std: float = 0.0) -> "BenchmarkSpec":
        """``"styblinski-5d"`` -> spec."""
        m = _NAME_RE.match(key.strip().lower().replace("-", "_", key.count("-") - 1))
        if not m:
            raise ValueError(f"benchmark key must look like 'sphere-5d', got {key!r}")
        return cls(m.group(1), int(m.group(2)), noise_std)

    @property
    def key(self) -> str:
        return f"{self.name}-{self.dimension}d"

    @property
    def bound(self) -> float:
        return FUNCTIONS[self.name].bound

    @property
    def minimizer(self) -> np.ndarray:
        return FUNCTIONS[self.name].minimizer(self.dimension)

    @property
    def minimum(self) -> float:
        return FUNCTIONS[self.name].minimum(self.dimension)

    def space(self) -> SearchSpace:
        r = self.bound
        return SearchSpace([(f"x{d}", Continuous(-r, r)) for d in range(self.dimension)])

    def true_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected {self.dimension} coordinates, got shape {x.shape}")
        if np.any(np.abs(x) > self.bound):
            raise DomainError(f"point outside |x| <= {self.bound}")
        return FUNCTIONS[self.name].func(x)

    def evaluate(self, x, rng: Optional[np.random.Generator] = None) -> float:
        y = self.true_value(x)
        if self.noise_std > 0:
            if rng is None:
                raise ValueError("a noisy benchmark needs an rng")
            y += float(rng.normal(0.0, self.noise_std))
        return y

    def objective(self, rng: Optional[np.random.Generator] = None):
        """Callable over named parameters, as expected by ``Study.optimize``.

        Returns ``(observed, noiseless)`` when noise is on.
        """
        names = [f"x{d}" for d in range(self.dimension)]

        def f(params):
            x = np.array([params[n] for n in names], dtype=float)
            if self.noise_std > 0:
                return self.evaluate(x, rng), self.true_value(x)
            return self.true_value(x)

        return f


def get_benchmark(key: str, noise_std: float = 0.0) -> BenchmarkSpec:
    return BenchmarkSpec.parse(key, noise_std)


def list_benchmarks():
    return sorted(FUNCTIONS)


def random_search(spec: BenchmarkSpec, n_trials: int, seed=None, config_name: str = "random_search") -> StudyResult:
    """Uniform sampling over the box, on the same streams a study would use."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    space = spec.space()
    sample_rng, _, noise_rng = spawn_streams(seed)
    f = spec.objective(noise_rng)
    values, params, true = [], [], []
    for _ in range(n_trials):
        p = space.to_params(random_sample(space, sample_rng))
        out = f(p)
        if isinstance(out, tuple):
            out, t = out
            true.append(t)
        values.append(check_finite_value(out))
        params.append(p)
    return StudyResult(config_name, spec.key, seed, values, params, [0.0] * n_trials,
                       true or None, {"random_search": True})
