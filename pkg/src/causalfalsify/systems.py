"""Black-box benchmark systems: input vector in a box -> output trace."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stl import Trace


class OutOfDomain(ValueError):
    pass


@dataclass(frozen=True)
class BoxDomain:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if not lo or len(lo) != len(hi):
            raise ValueError("box needs matching, nonempty lo/hi bounds")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ValueError(f"box bounds must satisfy lo < hi, got {lo} / {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def uniform(cls, lo: float, hi: float, dim: int) -> "BoxDomain":
        return cls((lo,) * dim, (hi,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def width(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == (self.dim,) and bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def to_unit(self, x) -> np.ndarray:
        return np.clip((np.asarray(x, dtype=float) - self.lo) / self.width, 0.0, 1.0)

    def from_unit(self, u) -> np.ndarray:
        x = np.asarray(self.lo) + np.asarray(u, dtype=float) * self.width
        return np.clip(x, self.lo, self.hi)


class SystemModel:
    """Base for deterministic simulators. Subclasses set ``domain`` and ``_run``."""

    name = "system"
    domain: BoxDomain
    dt: float
    duration: float

    @property
    def dim(self) -> int:
        return self.domain.dim

    def simulate(self, x) -> Trace:
        x = np.asarray(x, dtype=float)
        if not self.domain.contains(x):
            raise OutOfDomain(f"{self.name}: input {x.tolist()} outside {self.domain}")
        return self._run(x)

    def _run(self, x: np.ndarray) -> Trace:
        raise NotImplementedError


class CounterSystem(SystemModel):
    """Counter that increments while each input lies in (-0.2, 0.2) and resets otherwise.

    Input ``i_t`` is processed at step ``t = 0..N``; the trace samples ``cnt``
    after each step, one sample per unit of time.
    """

    name = "counter"

    def __init__(self, N: int = 5):
        if int(N) != N or N < 1:
            raise ValueError(f"counter N must be an integer >= 1, got {N}")
        self.N = int(N)
        self.domain = BoxDomain.uniform(-1.0, 1.0, self.N + 1)
        self.dt = 1.0
        self.duration = float(self.N)

    def _run(self, x):
        cnt = 0
        out = np.empty(self.N + 1)
        for t, value in enumerate(x):
            cnt = cnt + 1 if abs(value) < 0.2 else 0
            out[t] = cnt
        return Trace(self.dt, {"cnt": out})


class SineSystem(SystemModel):
    """Four sine waves x_k(t) = sin(w_k t + i_k); the inputs are the phases."""

    name = "sines"
    omegas = (1.1, 1.2, 1.3, 1.4)

    def __init__(self, dt: float = 0.02, duration: float = 10.0):
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        self.dt = float(dt)
        self.duration = float(duration)
        self.domain = BoxDomain.uniform(0.0, 1.0, 4)

    def _run(self, x):
        n = int(round(self.duration / self.dt)) + 1
        t = np.arange(n) * self.dt
        return Trace(
            self.dt,
            {f"x{k + 1}": np.sin(w * t + phase) for k, (w, phase) in enumerate(zip(self.omegas, x))},
        )


class AtSurrogate(SystemModel):
    """Closed-form stand-in for an automatic transmission.

    Not a physical model: it exists to reproduce the scale mismatch between
    vehicle speed ``v`` (tens) and engine speed ``w`` (thousands). Throttle is
    piecewise constant over five equal segments. Engine speed follows
    ``dw/dt = 600 u - 0.08 w - 50 (g - 1)`` under forward Euler; after each
    step the gear shifts up at ``w >= 4200`` (``g < 4``) or down at
    ``w <= 1000`` (``g > 1``), rescaling ``w`` so that ``v = w * r_g`` is
    continuous.
    """

    name = "at-surrogate"
    ratios = (0.01, 0.02, 0.03, 0.04)
    accel_gain = 600.0
    drag = 0.08
    gear_drag = 50.0
    upshift = 4200.0
    downshift = 1000.0
    w0 = 1000.0

    def __init__(self, dt: float = 0.01, duration: float = 30.0, segments: int = 5):
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        self.dt = float(dt)
        self.duration = float(duration)
        self.segments = int(segments)
        self.domain = BoxDomain.uniform(0.0, 1.0, self.segments)

    def _run(self, x):
        n = int(round(self.duration / self.dt)) + 1
        seg_len = self.duration / self.segments
        w_out = np.empty(n)
        v_out = np.empty(n)
        gears = np.empty(n, dtype=int)
        w, g = self.w0, 1
        for k in range(n):
            w_out[k] = w
            v_out[k] = w * self.ratios[g - 1]
            gears[k] = g
            if k == n - 1:
                break
            seg = min(int(k * self.dt / seg_len + 1e-9), self.segments - 1)
            u = x[seg]
            w = w + self.dt * (self.accel_gain * u - self.drag * w - self.gear_drag * (g - 1))
            w = max(w, 0.0)
            if g < 4 and w >= self.upshift:
                w = w * self.ratios[g - 1] / self.ratios[g]
                g += 1
            elif g > 1 and w <= self.downshift:
                w = w * self.ratios[g - 1] / self.ratios[g - 2]
                g -= 1
        return Trace(self.dt, {"v": v_out, "w": w_out, "gear": gears.astype(float)})


_REGISTRY = {
    "counter": CounterSystem,
    "sines": SineSystem,
    "at-surrogate": AtSurrogate,
}


def registry_lookup(name: str, params: dict | None = None) -> SystemModel:
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown system {name!r}; known: {sorted(_REGISTRY)}") from None
    try:
        return cls(**(params or {}))
    except TypeError as exc:
        raise ValueError(f"invalid parameters for {name!r}: {exc}") from None
