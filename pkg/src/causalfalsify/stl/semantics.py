"""Discrete-time Boolean and robust semantics over sampled traces.

Both semantics are computed as signals: the value at index ``i`` is the
value of the formula on the trace shifted by ``i * dt``. Interval membership
is closed on grid times; windows running past the end of the trace are
truncated (empty windows give the identity of the reducing operator).
"""

from __future__ import annotations

import math

import numpy as np

from .formula import Always, And, Atom, Eventually, Formula, Interval, Not, Or, Trace, Until, horizon

# Grid times within this relative slack of an interval bound count as inside it.
_GRID_EPS = 1e-9


class TraceTooShort(ValueError):
    pass


def _window(interval: Interval, dt: float, n: int) -> tuple[int, int | None]:
    a = math.ceil(interval.lo / dt - _GRID_EPS)
    b = None if interval.unbounded else math.floor(interval.hi / dt + _GRID_EPS)
    return a, b


def _spans(interval: Interval, dt: float, n: int):
    """Yield (start, lo, hi) index triples; lo > hi marks an empty window."""
    a, b = _window(interval, dt, n)
    for i in range(n):
        lo = i + a
        hi = n - 1 if b is None else min(i + b, n - 1)
        yield i, lo, hi


def _check_length(formula: Formula, trace: Trace) -> None:
    need = horizon(formula)
    if trace.duration + _GRID_EPS * max(1.0, need) < need:
        raise TraceTooShort(
            f"trace lasts {trace.duration:g}s but the formula needs {need:g}s"
        )


def _rob(f: Formula, trace: Trace) -> np.ndarray:
    n = trace.n
    if isinstance(f, Atom):
        return f.margin(trace)
    if isinstance(f, Not):
        return -_rob(f.arg, trace)
    if isinstance(f, Or):
        return np.maximum(_rob(f.left, trace), _rob(f.right, trace))
    if isinstance(f, And):
        return np.minimum(_rob(f.left, trace), _rob(f.right, trace))
    if isinstance(f, (Eventually, Always)):
        sub = _rob(f.arg, trace)
        reduce, empty = (np.max, -np.inf) if isinstance(f, Eventually) else (np.min, np.inf)
        out = np.empty(n)
        for i, lo, hi in _spans(f.interval, trace.dt, n):
            out[i] = reduce(sub[lo:hi + 1]) if lo <= hi else empty
        return out
    if isinstance(f, Until):
        left = _rob(f.left, trace)
        right = _rob(f.right, trace)
        out = np.empty(n)
        for i, lo, hi in _spans(f.interval, trace.dt, n):
            if lo > hi:
                out[i] = -np.inf
                continue
            # running inf of the left operand over [i, j] for every j in the window
            prefix = np.minimum.accumulate(left[i:hi + 1])
            out[i] = np.max(np.minimum(right[lo:hi + 1], prefix[lo - i:]))
        return out
    raise TypeError(f"not a formula: {f!r}")


def _sat(f: Formula, trace: Trace) -> np.ndarray:
    n = trace.n
    if isinstance(f, Atom):
        g = f.margin(trace)
        return g > 0 if f.strict else g >= 0
    if isinstance(f, Not):
        return ~_sat(f.arg, trace)
    if isinstance(f, Or):
        return _sat(f.left, trace) | _sat(f.right, trace)
    if isinstance(f, And):
        return _sat(f.left, trace) & _sat(f.right, trace)
    if isinstance(f, (Eventually, Always)):
        sub = _sat(f.arg, trace)
        reduce, empty = (np.any, False) if isinstance(f, Eventually) else (np.all, True)
        out = np.empty(n, dtype=bool)
        for i, lo, hi in _spans(f.interval, trace.dt, n):
            out[i] = reduce(sub[lo:hi + 1]) if lo <= hi else empty
        return out
    if isinstance(f, Until):
        left = _sat(f.left, trace)
        right = _sat(f.right, trace)
        out = np.zeros(n, dtype=bool)
        for i, lo, hi in _spans(f.interval, trace.dt, n):
            if lo > hi:
                continue
            held = np.logical_and.accumulate(left[i:hi + 1])
            out[i] = bool(np.any(right[lo:hi + 1] & held[lo - i:]))
        return out
    raise TypeError(f"not a formula: {f!r}")


def robustness_signal(formula: Formula, trace: Trace) -> np.ndarray:
    """Robustness of ``formula`` at every start index of ``trace`` (no length check)."""
    return _rob(formula, trace)


def robustness(formula: Formula, trace: Trace) -> float:
    """Robustness at time 0. Raises :class:`TraceTooShort` if the trace ends too early."""
    _check_length(formula, trace)
    return float(_rob(formula, trace)[0])


def boolean_sat(formula: Formula, trace: Trace) -> bool:
    _check_length(formula, trace)
    return bool(_sat(formula, trace)[0])
