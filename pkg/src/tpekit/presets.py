"""Named sampler configurations and dotted-key config parsing."""

from __future__ import annotations

import math
from typing import Any, Dict, Mapping

from .sampler import TPESampler

# component choices of the historical implementations; the remaining
# parameters keep the recommended values so only the listed components differ
PRESETS: Dict[str, Dict[str, Any]] = {
    "recommended": dict(),
    "recommended-sqrt": dict(gamma="sqrt", beta=0.75),
    "recommended-linear-0.1": dict(beta=0.10),
    # suggested adaptations for cheap analytic functions and for tabular tasks
    "recommended-benchmark": dict(beta=0.10, consider_magic_clip=False, bandwidth="scott", delta=0.01),
    "recommended-tabular": dict(consider_magic_clip=True, alpha=1.0, bandwidth="optuna", delta=0.1),
    "tpe2011": dict(
        gamma="linear", beta=0.15, better_group_cap=25, weights="uniform", bandwidth="hyperopt",
        categorical_bandwidth=0.0, multivariate=False, consider_magic_clip=True,
        magic_rule="legacy", delta=0.0,
    ),
    "tpe2013": dict(
        gamma="sqrt", beta=0.25, better_group_cap=25, weights="old_decay", bandwidth="hyperopt",
        categorical_bandwidth=0.0, multivariate=False, consider_magic_clip=True,
        magic_rule="legacy", delta=0.0,
    ),
    "bohb": dict(
        gamma="linear", beta=0.15, weights="bohb_uniform", bandwidth="scott",
        categorical_bandwidth="scott", multivariate=True, consider_magic_clip=False, delta=1e-3,
    ),
    "optuna": dict(
        gamma="linear", beta=0.10, better_group_cap=25, weights="old_decay", bandwidth="optuna",
        categorical_bandwidth="optuna", multivariate=True, consider_magic_clip=True,
        magic_rule="legacy", delta=0.0,
    ),
    # always explores: the trial sequence equals random search under the same seed
    "random": dict(epsilon=1.0),
}

# dotted config keys accepted in plan files, mapped to sampler parameters
_ALIASES = {
    "gamma.rule": "gamma",
    "gamma.beta": "beta",
    "split.rule": "gamma",
    "split.beta": "beta",
    "split.cap": "better_group_cap",
    "gamma.cap": "better_group_cap",
    "weights.rule": "weights",
    "weights.t_old": "t_old",
    "weights.prior_weight": "prior_weight",
    "bandwidth.heuristic": "bandwidth",
    "bandwidth.consider_magic_clip": "consider_magic_clip",
    "bandwidth.magic_rule": "magic_rule",
    "bandwidth.alpha": "alpha",
    "bandwidth.delta": "delta",
    "bandwidth.consider_endpoints": "consider_endpoints",
    "bandwidth.categorical": "categorical_bandwidth",
}


def _coerce(key: str, value):
    if key in ("alpha", "delta", "beta", "epsilon", "prior_weight") and isinstance(value, str):
        return math.inf if value.lower() in ("inf", "infinity") else float(value)
    if key == "categorical_bandwidth" and isinstance(value, str) and value not in ("optuna", "scott"):
        return float(value)
    return value


def normalize_params(params: Mapping[str, Any]) -> Dict[str, Any]:
    """Map dotted/flat config keys to :class:`TPESampler` parameter names."""
    valid = set(TPESampler().get_params())
    out = {}
    for key, value in params.items():
        name = _ALIASES.get(key, key.replace("-", "_"))
        if name not in valid:
            raise ValueError(f"unknown config key {key!r}")
        out[name] = _coerce(name, value)
    return out


def make_sampler(preset: str = "recommended", **overrides) -> TPESampler:
    """Sampler for a named preset with optional parameter overrides."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    params = dict(PRESETS[preset])
    params.update(normalize_params(overrides))
    sampler = TPESampler(**params)
    sampler.config  # validate eagerly
    return sampler


def sampler_from_dict(spec: Mapping[str, Any]) -> TPESampler:
    """``{"preset": "bohb", "gamma.beta": 0.2, ...}`` -> sampler."""
    spec = dict(spec)
    preset = spec.pop("preset", "recommended")
    return make_sampler(preset, **spec)
