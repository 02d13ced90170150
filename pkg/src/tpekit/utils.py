from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

PENALTY = 1e300


def spawn_streams(seed: Optional[int]) -> Tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent (sampling, epsilon, noise) streams derived from one seed.

    Random search and TPE both draw configurations from the first stream, so
    an always-random TPE reproduces random search exactly.
    """
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def check_finite_value(y, penalty: float = PENALTY) -> float:
    """Clamp NaN/inf objective values to ``penalty``; keep -inf from winning too."""
    y = float(y)
    if math.isfinite(y):
        return y
    return penalty if not (y < 0) else -penalty


def cumulative_min(values) -> np.ndarray:
    return np.minimum.accumulate(np.asarray(values, dtype=float))


def parse_seeds(text) -> list:
    """``"0..9"`` -> [0, ..., 9]; ``"1,3,5"`` -> [1, 3, 5]; ints pass through."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, (list, tuple)):
        return [int(s) for s in text]
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"no seeds in {text!r}")
    return seeds
