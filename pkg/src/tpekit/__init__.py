"""Tree-structured Parzen estimator with every component exposed as a parameter."""

from .bandwidth import BandwidthConfig
from .benchmarks import BenchmarkSpec, get_benchmark, list_benchmarks, random_search
from .harness import ExperimentPlan, average_rank, run_plan, top_quantile_mass
from .kde import ParzenEstimator, UniformDensity
from .presets import PRESETS, make_sampler, sampler_from_dict
from .results import StudyResult
from .sampler import Observation, Study, TPEConfig, TPESampler
from .space import (
    NULL,
    Categorical,
    Condition,
    Continuous,
    DiscreteGrid,
    DomainError,
    MalformedDataError,
    SearchSpace,
    enumerate_subspaces,
    random_sample,
)
from .splitting import SplitConfig
from .weighting import WeightConfig

__all__ = [
    "NULL", "BandwidthConfig", "BenchmarkSpec", "Categorical", "Condition", "Continuous",
    "DiscreteGrid", "DomainError", "ExperimentPlan", "MalformedDataError", "Observation",
    "PRESETS", "ParzenEstimator", "SearchSpace", "SplitConfig", "Study", "StudyResult",
    "TPEConfig", "TPESampler", "UniformDensity", "WeightConfig", "average_rank",
    "enumerate_subspaces", "get_benchmark", "list_benchmarks", "make_sampler", "random_sample",
    "random_search", "run_plan", "sampler_from_dict", "top_quantile_mass",
]
__version__ = "0.1.0"
