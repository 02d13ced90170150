"""Per-run results and their JSON-lines persistence."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from .utils import cumulative_min

TIMING_FIELDS = ("elapsed",)


def _encode(value):
    """JSON-safe scalars: non-finite floats become strings."""
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


@dataclass
class StudyResult:
    """One optimisation run at plan coordinates (config, benchmark, seed)."""

    config_name: str
    benchmark: str
    seed: int
    values: List[float]
    params: List[Dict[str, Any]] = field(default_factory=list)
    elapsed: List[float] = field(default_factory=list)
    true_values: Optional[List[float]] = None
    config_params: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def cumulative_min(self) -> np.ndarray:
        return cumulative_min(self.values)

    @property
    def n_trials(self) -> int:
        return len(self.values)

    def best_at(self, step: int) -> float:
        """Cumulative minimum after ``step`` evaluations (1-based)."""
        if not 1 <= step <= len(self.values):
            raise IndexError(f"step {step} outside 1..{len(self.values)}")
        return float(np.min(self.values[:step]))

    def to_record(self, timing: bool = True) -> Dict[str, Any]:
        rec: Dict[str, Any] = {
            "config": self.config_name,
            "benchmark": self.benchmark,
            "seed": self.seed,
            "config_params": _encode(self.config_params),
            "values": [float(v) for v in self.values],
            "cumulative_min": [float(v) for v in self.cumulative_min],
            "params": _encode(self.params),
        }
        if self.true_values is not None:
            rec["true_values"] = [float(v) for v in self.true_values]
        if self.error is not None:
            rec["error"] = self.error
        if timing:
            rec["elapsed"] = [float(t) for t in self.elapsed]
        return rec

    @classmethod
    def from_record(cls, rec: Dict[str, Any]) -> "StudyResult":
        return cls(
            config_name=rec["config"],
            benchmark=rec["benchmark"],
            seed=rec["seed"],
            values=list(rec["values"]),
            params=list(rec.get("params", [])),
            elapsed=list(rec.get("elapsed", [])),
            true_values=rec.get("true_values"),
            config_params=dict(rec.get("config_params", {})),
            error=rec.get("error"),
        )


def dumps_jsonl(results: Iterable[StudyResult], timing: bool = True) -> str:
    buf = io.StringIO()
    for r in results:
        buf.write(json.dumps(r.to_record(timing), sort_keys=True, allow_nan=False))
        buf.write("\n")
    return buf.getvalue()


def write_jsonl(results: Iterable[StudyResult], path, timing: bool = True) -> None:
    with open(path, "w") as f:
        f.write(dumps_jsonl(results, timing))


def loads_jsonl(text: str) -> List[StudyResult]:
    return [StudyResult.from_record(json.loads(line)) for line in text.splitlines() if line.strip()]


def read_jsonl(path) -> List[StudyResult]:
    with open(path) as f:
        return loads_jsonl(f.read())


def strip_timing(text: str) -> str:
    """Re-serialise a JSONL document without timing fields."""
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        for k in TIMING_FIELDS:
            rec.pop(k, None)
        out.append(json.dumps(rec, sort_keys=True))
    return "\n".join(out) + "\n"
