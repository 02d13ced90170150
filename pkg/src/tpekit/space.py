"""Parameter domains and (conditional) search spaces.

Values inside a :data:`Configuration` live in *transformed* space: continuous
log-scaled parameters are stored as ``log(x)``, discrete-grid parameters as the
grid value itself and categorical parameters as an integer index
``0 .. C-1``. Inactive conditional parameters hold the :data:`NULL` sentinel.
"""

from __future__ import annotations

import json
import math
import operator
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np


class DomainError(ValueError):
    """A value lies outside the domain of its parameter."""


class MalformedDataError(ValueError):
    """An observation does not conform to the search space."""


class _Null:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NULL"

    def __reduce__(self):
        return (_Null, ())

    def __bool__(self):
        return False


NULL = _Null()
"""Marker for an inactive (undefined) conditional parameter."""

Configuration = Tuple[Any, ...]


@dataclass(frozen=True)
class Continuous:
    low: float
    high: float
    log_scale: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ValueError("bounds must be finite")
        if not self.low < self.high:
            raise ValueError(f"low must be < high, got [{self.low}, {self.high}]")
        if self.log_scale and self.low <= 0:
            raise ValueError("log-scaled domains need low > 0")

    @property
    def bounds(self) -> Tuple[float, float]:
        """Bounds in transformed space."""
        if self.log_scale:
            return math.log(self.low), math.log(self.high)
        return float(self.low), float(self.high)

    def transform(self, value: float) -> float:
        value = float(value)
        if not self.low <= value <= self.high:
            raise DomainError(f"{value} outside [{self.low}, {self.high}]")
        return math.log(value) if self.log_scale else value

    def untransform(self, value: float) -> float:
        lo, hi = self.bounds
        value = float(value)
        if not lo <= value <= hi:
            raise DomainError(f"{value} outside transformed bounds [{lo}, {hi}]")
        if self.log_scale:
            # exp(log(high)) may overshoot by an ulp
            return min(max(math.exp(value), self.low), self.high)
        return value

    def contains(self, value) -> bool:
        lo, hi = self.bounds
        return isinstance(value, (int, float, np.floating, np.integer)) and lo <= value <= hi

    def sample(self, rng: np.random.Generator) -> float:
        lo, hi = self.bounds
        return float(rng.uniform(lo, hi))


@dataclass(frozen=True)
class DiscreteGrid:
    """Grid ``{low, low + step, ..., low + (count - 1) * step}``."""

    low: float
    step: float
    count: int

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError("count must be an integer >= 1")

    @property
    def high(self) -> float:
        return self.low + (self.count - 1) * self.step

    @property
    def bounds(self) -> Tuple[float, float]:
        return float(self.low), float(self.high)

    @property
    def grid(self) -> np.ndarray:
        return self.low + self.step * np.arange(self.count)

    def index_of(self, value) -> np.ndarray:
        """Grid index of value(s); raises if not on the grid."""
        idx = np.rint((np.asarray(value, dtype=float) - self.low) / self.step)
        if np.any(idx < 0) or np.any(idx >= self.count):
            raise DomainError(f"{value} outside grid [{self.low}, {self.high}]")
        return idx.astype(int)

    def transform(self, value: float) -> float:
        idx = int(self.index_of(value))
        if not math.isclose(float(value), self.low + idx * self.step, rel_tol=1e-9, abs_tol=1e-9 * self.step):
            raise DomainError(f"{value} is not a grid point")
        return float(self.low + idx * self.step)

    def untransform(self, value: float) -> float:
        return self.transform(value)

    def contains(self, value) -> bool:
        try:
            self.transform(value)
        except (DomainError, TypeError, ValueError):
            return False
        return True

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.low + self.step * rng.integers(self.count))


@dataclass(frozen=True)
class Categorical:
    n_choices: int
    choices: Optional[Tuple[Any, ...]] = None

    def __post_init__(self):
        if int(self.n_choices) != self.n_choices or self.n_choices < 1:
            raise ValueError("n_choices must be an integer >= 1")
        if self.choices is not None:
            object.__setattr__(self, "choices", tuple(self.choices))
            if len(self.choices) != self.n_choices:
                raise ValueError("len(choices) must equal n_choices")

    @classmethod
    def from_choices(cls, choices: Sequence[Any]) -> "Categorical":
        return cls(len(choices), tuple(choices))

    @property
    def bounds(self) -> Tuple[float, float]:
        return 0.0, float(self.n_choices - 1)

    def transform(self, value) -> int:
        """Map a choice label (or index when no labels are set) to its index."""
        if self.choices is not None:
            for i, c in enumerate(self.choices):
                # True == 1 must not match a label 1
                if c == value and isinstance(c, bool) == isinstance(value, bool):
                    return i
            raise DomainError(f"{value!r} not in {self.choices}")
        if isinstance(value, (bool, np.bool_)) or int(value) != value or not 0 <= value < self.n_choices:
            raise DomainError(f"{value!r} is not a category index < {self.n_choices}")
        return int(value)

    def untransform(self, index) -> Any:
        if isinstance(index, (bool, np.bool_)) or int(index) != index or not 0 <= index < self.n_choices:
            raise DomainError(f"{index!r} is not a category index < {self.n_choices}")
        return self.choices[int(index)] if self.choices is not None else int(index)

    def contains(self, value) -> bool:
        return (
            isinstance(value, (int, np.integer))
            and not isinstance(value, (bool, np.bool_))
            and 0 <= value < self.n_choices
        )

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n_choices))


ParamDomain = Union[Continuous, DiscreteGrid, Categorical]


def transform(domain: ParamDomain, value):
    return domain.transform(value)


def untransform(domain: ParamDomain, value):
    return domain.untransform(value)


_OPS: Dict[str, Callable[[Any, Any], bool]] = {
    "==": operator.eq,
    "!=": operator.ne,
    ">=": operator.ge,
    ">": operator.gt,
    "<=": operator.le,
    "<": operator.lt,
}
_COND_RE = re.compile(r"^\s*([A-Za-z_][\w.\-]*)\s*(==|!=|>=|<=|>|<)\s*(.+?)\s*$")


@dataclass(frozen=True)
class Condition:
    """Activation predicate ``parent <op> value`` on the parent's raw value.

    The predicate is false whenever the parent itself is inactive, which is
    what makes nested conditions tree-structured.
    """

    parent: str
    op: str
    value: Any

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unsupported operator {self.op!r}")

    @classmethod
    def parse(cls, text: str) -> "Condition":
        m = _COND_RE.match(text)
        if m is None:
            raise ValueError(f"cannot parse condition {text!r}")
        parent, op, raw = m.groups()
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw.strip("'\"")
        return cls(parent, op, value)

    def __call__(self, parent_raw) -> bool:
        if parent_raw is NULL:
            return False
        try:
            return bool(_OPS[self.op](parent_raw, self.value))
        except TypeError:
            return False

    def __str__(self):
        return f"{self.parent} {self.op} {json.dumps(self.value)}"


class SearchSpace:
    """Ordered, named parameter domains with optional activation conditions.

    Parameters
    ----------
    dims : sequence of (name, ParamDomain)
    conditions : mapping name -> Condition, optional
    """

    def __init__(
        self,
        dims: Sequence[Tuple[str, ParamDomain]],
        conditions: Optional[Mapping[str, Condition]] = None,
    ):
        dims = tuple((str(n), d) for n, d in dims)
        if not dims:
            raise ValueError("a search space needs at least one dimension")
        names = [n for n, _ in dims]
        if len(set(names)) != len(names):
            raise ValueError("dimension names must be unique")
        for n, d in dims:
            if not isinstance(d, (Continuous, DiscreteGrid, Categorical)):
                raise TypeError(f"{n}: unknown domain type {type(d).__name__}")
        self._dims = dims
        self._index = {n: i for i, n in enumerate(names)}
        conditions = dict(conditions or {})
        for child, cond in conditions.items():
            if child not in self._index:
                raise ValueError(f"condition on unknown dimension {child!r}")
            if cond.parent not in self._index:
                raise ValueError(f"{child!r} depends on unknown dimension {cond.parent!r}")
            if cond.parent == child:
                raise ValueError(f"{child!r} cannot depend on itself")
        self._conditions = conditions
        self._order = self._topological_order()

    def _topological_order(self) -> Tuple[int, ...]:
        parent_of = {self._index[c]: self._index[k.parent] for c, k in self._conditions.items()}
        order: List[int] = []
        state = [0] * len(self._dims)  # 0 new, 1 visiting, 2 done

        def visit(i):
            if state[i] == 2:
                return
            if state[i] == 1:
                raise ValueError("conditions contain a cycle")
            state[i] = 1
            if i in parent_of:
                visit(parent_of[i])
            state[i] = 2
            order.append(i)

        for i in range(len(self._dims)):
            visit(i)
        return tuple(order)

    # -- basic accessors -------------------------------------------------
    @property
    def names(self) -> List[str]:
        return [n for n, _ in self._dims]

    @property
    def domains(self) -> List[ParamDomain]:
        return [d for _, d in self._dims]

    @property
    def conditions(self) -> Dict[str, Condition]:
        return dict(self._conditions)

    @property
    def is_conditional(self) -> bool:
        return bool(self._conditions)

    @property
    def topological_order(self) -> Tuple[int, ...]:
        return self._order

    def __len__(self):
        return len(self._dims)

    def __iter__(self):
        return iter(self._dims)

    def __getitem__(self, key):
        if isinstance(key, str):
            key = self._index[key]
        return self._dims[key][1]

    def index(self, name: str) -> int:
        return self._index[name]

    def __repr__(self):
        return f"SearchSpace({list(self._dims)!r}, conditions={self._conditions!r})"

    def __eq__(self, other):
        return (
            isinstance(other, SearchSpace)
            and self._dims == other._dims
            and self._conditions == other._conditions
        )

    def __hash__(self):
        return hash((self._dims, tuple(sorted((k, str(v)) for k, v in self._conditions.items()))))

    # -- conditionality --------------------------------------------------
    def _raw(self, i: int, value):
        return NULL if value is NULL else self._dims[i][1].untransform(value)

    def is_active(self, i: int, config: Configuration) -> bool:
        name = self._dims[i][0]
        cond = self._conditions.get(name)
        if cond is None:
            return True
        p = self._index[cond.parent]
        return cond(self._raw(p, config[p]))

    def active_mask(self, config: Configuration) -> Tuple[bool, ...]:
        return tuple(v is not NULL for v in config)

    def validate(self, config: Configuration) -> Configuration:
        """Check a configuration against domains and conditions; return it as a tuple."""
        config = tuple(config)
        if len(config) != len(self._dims):
            raise MalformedDataError(f"expected {len(self._dims)} values, got {len(config)}")
        for i in self._order:
            name, dom = self._dims[i]
            should = self.is_active(i, config)
            if should and config[i] is NULL:
                raise MalformedDataError(f"{name!r} is active but NULL")
            if not should and config[i] is not NULL:
                raise MalformedDataError(f"{name!r} is inactive but has value {config[i]!r}")
            if config[i] is not NULL and not dom.contains(config[i]):
                raise DomainError(f"{name!r}: {config[i]!r} outside its domain")
        return config

    def resolve(self, proposal: Sequence[Any], rng: np.random.Generator) -> Configuration:
        """Complete a partial proposal in dependency order.

        Entries of ``proposal`` that are ``None`` are sampled uniformly when the
        dimension is active; values of inactive dimensions are replaced by NULL.
        """
        values: List[Any] = [NULL] * len(self._dims)
        for i in self._order:
            if not self.is_active(i, values):
                continue
            v = proposal[i]
            values[i] = self._dims[i][1].sample(rng) if v is None or v is NULL else v
        return tuple(values)

    def sample(self, rng: np.random.Generator) -> Configuration:
        return random_sample(self, rng)

    # -- raw <-> transformed -------------------------------------------------
    def to_params(self, config: Configuration) -> Dict[str, Any]:
        return {n: (None if v is NULL else d.untransform(v)) for (n, d), v in zip(self._dims, config)}

    def from_params(self, params: Mapping[str, Any]) -> Configuration:
        values = []
        for n, d in self._dims:
            raw = params.get(n)
            values.append(NULL if raw is None else d.transform(raw))
        return self.validate(values)

    # -- JSON ------------------------------------------------------------
    @classmethod
    def from_dict(cls, entries: Iterable[Mapping[str, Any]]) -> "SearchSpace":
        dims, conds = [], {}
        for e in entries:
            name, kind = e["name"], e["type"]
            if kind == "continuous":
                dom: ParamDomain = Continuous(float(e["low"]), float(e["high"]), bool(e.get("log", False)))
            elif kind == "discrete":
                low, step = float(e["low"]), float(e.get("step", 1))
                if "count" in e:
                    count = int(e["count"])
                else:
                    count = int(round((float(e["high"]) - low) / step)) + 1
                    if not math.isclose(low + (count - 1) * step, float(e["high"]), rel_tol=1e-9, abs_tol=1e-12):
                        raise ValueError(f"{name}: high is not on the grid defined by low and step")
                dom = DiscreteGrid(low, step, count)
            elif kind == "categorical":
                dom = Categorical.from_choices(list(e["choices"]))
            else:
                raise ValueError(f"{name}: unknown parameter type {kind!r}")
            dims.append((name, dom))
            if e.get("condition"):
                conds[name] = Condition.parse(e["condition"])
        return cls(dims, conds)

    @classmethod
    def from_json(cls, text: str) -> "SearchSpace":
        data = json.loads(text)
        if isinstance(data, Mapping):
            data = data["params"]
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "SearchSpace":
        with open(path) as f:
            return cls.from_json(f.read())

    def to_dict(self) -> List[Dict[str, Any]]:
        out = []
        for n, d in self._dims:
            if isinstance(d, Continuous):
                e: Dict[str, Any] = {"name": n, "type": "continuous", "low": d.low, "high": d.high, "log": d.log_scale}
            elif isinstance(d, DiscreteGrid):
                e = {"name": n, "type": "discrete", "low": d.low, "step": d.step, "count": d.count}
            else:
                choices = list(d.choices) if d.choices is not None else list(range(d.n_choices))
                e = {"name": n, "type": "categorical", "choices": choices}
            if n in self._conditions:
                e["condition"] = str(self._conditions[n])
            out.append(e)
        return out


def random_sample(space: SearchSpace, rng: np.random.Generator) -> Configuration:
    """Uniform draw over the transformed domain of every active dimension."""
    return space.resolve([None] * len(space), rng)


def enumerate_subspaces(
    space: SearchSpace, configs: Sequence[Configuration]
) -> List[Tuple[Tuple[int, ...], List[int]]]:
    """Group observations by their exact set of active dimensions.

    Returns a list of ``(active_dims, member_indices)`` in order of first
    appearance. Every observation lands in exactly one group.
    """
    groups: Dict[Tuple[int, ...], List[int]] = defaultdict(list)
    for n, config in enumerate(configs):
        config = tuple(config)
        if len(config) != len(space):
            raise MalformedDataError(f"observation {n}: wrong length")
        for i in range(len(space)):
            if space.is_active(i, config) != (config[i] is not NULL):
                raise MalformedDataError(
                    f"observation {n}: NULL pattern of {space.names[i]!r} violates its condition"
                )
        key = tuple(i for i, v in enumerate(config) if v is not NULL)
        groups[key].append(n)
    return list(groups.items())
