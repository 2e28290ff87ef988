"""STL abstract syntax and sampled traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

import numpy as np

# Upper bound sentinel: the interval runs to the last sample of the trace.
HORIZON = None


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: Optional[float] = HORIZON

    def __post_init__(self):
        lo = float(self.lo)
        object.__setattr__(self, "lo", lo)
        if not math.isfinite(lo) or lo < 0:
            raise ValueError(f"interval lower bound must be finite and >= 0, got {self.lo}")
        if self.hi is not None:
            hi = float(self.hi)
            object.__setattr__(self, "hi", hi)
            if not math.isfinite(hi):
                raise ValueError("use HORIZON for an unbounded interval")
            if lo > hi:
                raise ValueError(f"malformed interval [{lo}, {hi}]: lo > hi")

    @property
    def unbounded(self) -> bool:
        return self.hi is None


@dataclass(frozen=True)
class Atom:
    """Linear predicate ``sum(coeff * var) + constant > 0`` (``>= 0`` if nonstrict).

    Coefficients are kept as a sorted tuple of ``(name, value)`` pairs with
    zero entries dropped so that structurally equal atoms compare equal.
    """

    coefficients: tuple = ()
    constant: float = 0.0
    strict: bool = True

    def __post_init__(self):
        coeffs = self.coefficients
        if isinstance(coeffs, Mapping):
            coeffs = coeffs.items()
        cleaned = tuple(sorted((str(k), float(v)) for k, v in coeffs if float(v) != 0.0))
        names = [k for k, _ in cleaned]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable in atom: {names}")
        object.__setattr__(self, "coefficients", cleaned)
        object.__setattr__(self, "constant", float(self.constant))
        values = [v for _, v in cleaned] + [self.constant]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("atom coefficients and constant must be finite")
        if not cleaned and self.constant == 0.0:
            raise ValueError("atom needs a nonzero coefficient or constant")

    @property
    def variables(self) -> tuple:
        return tuple(k for k, _ in self.coefficients)

    def margin(self, trace: "Trace") -> np.ndarray:
        """Signed margin g(y) at every sample of ``trace``."""
        g = np.full(trace.n, self.constant)
        for name, coeff in self.coefficients:
            g = g + coeff * trace.signal(name)
        return g


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Until:
    interval: Interval
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Eventually:
    interval: Interval
    arg: "Formula"


@dataclass(frozen=True)
class Always:
    interval: Interval
    arg: "Formula"


Formula = Union[Atom, Not, And, Or, Until, Eventually, Always]


def horizon(formula: Formula) -> float:
    """Trace duration needed so that every shifted evaluation stays in range.

    Unbounded operators are truncated at the trace end and contribute only
    their lower bound.
    """
    if isinstance(formula, Atom):
        return 0.0
    if isinstance(formula, Not):
        return horizon(formula.arg)
    if isinstance(formula, (And, Or)):
        return max(horizon(formula.left), horizon(formula.right))
    if isinstance(formula, Until):
        reach = formula.interval.lo if formula.interval.unbounded else formula.interval.hi
        return reach + max(horizon(formula.left), horizon(formula.right))
    if isinstance(formula, (Eventually, Always)):
        reach = formula.interval.lo if formula.interval.unbounded else formula.interval.hi
        return reach + horizon(formula.arg)
    raise TypeError(f"not a formula: {formula!r}")


def variables(formula: Formula) -> frozenset:
    if isinstance(formula, Atom):
        return frozenset(formula.variables)
    if isinstance(formula, (Not, Eventually, Always)):
        return variables(formula.arg)
    return variables(formula.left) | variables(formula.right)


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled multi-variable signal starting at t = 0."""

    dt: float
    variables: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.variables:
            raise ValueError("trace has no variables")
        arrays = {}
        for name, values in self.variables.items():
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"variable {name!r} must be one-dimensional")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"variable {name!r} has non-finite samples")
            arr.setflags(write=False)
            arrays[name] = arr
        lengths = {len(a) for a in arrays.values()}
        if len(lengths) != 1 or 0 in lengths:
            raise ValueError(f"variables must share one nonzero length, got {sorted(lengths)}")
        object.__setattr__(self, "variables", arrays)

    @property
    def n(self) -> int:
        return len(next(iter(self.variables.values())))

    @property
    def duration(self) -> float:
        return (self.n - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    def signal(self, name: str) -> np.ndarray:
        try:
            return self.variables[name]
        except KeyError:
            raise KeyError(f"trace has no variable {name!r}; has {sorted(self.variables)}") from None
