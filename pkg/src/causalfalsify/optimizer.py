"""Acquisition minimization and the falsification loops.

The search runs in the unit cube; inputs are mapped to the system's box only
for simulation and reporting. Per trial, all randomness comes from one PCG64
stream seeded with ``(seed, trial)``. Draw order inside an iteration is fixed:
first the uniform inner candidates, then one sign bit per coordinate visit of
the hill climb, in ascending coordinate order.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import gp
from .acquisition import DistPair, make_acquisition
from .bayesnet import BayesNet, ensure_valid
from .stl import Formula, horizon, robustness
from .systems import BoxDomain, SystemModel

log = logging.getLogger(__name__)

ALGORITHMS = ("random", "psat", "psi_B", "psi_B_prime")


@dataclass(frozen=True)
class FalsifierConfig:
    init_samples: int = 5
    max_iterations: int = 1000
    timeout: float = 100.0
    inner_candidates: int = 100
    hillclimb_initial_step: float = 0.1
    hillclimb_min_step: float = 1e-3
    hillclimb_max_evals: int = 200
    rng_seed: int = 0
    kernel: gp.KernelConfig = field(default_factory=gp.KernelConfig)

    def __post_init__(self):
        for name in ("init_samples", "max_iterations", "inner_candidates", "hillclimb_max_evals"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.timeout > 0:
            raise ValueError("timeout must be > 0")
        if not 0 < self.hillclimb_min_step < self.hillclimb_initial_step <= 1:
            raise ValueError("need 0 < hillclimb_min_step < hillclimb_initial_step <= 1")


@dataclass(frozen=True)
class Problem:
    """A system, the formulas monitored on it, and the one to falsify."""

    system: SystemModel
    formulas: Mapping[str, Formula]
    target: str

    def __post_init__(self):
        if self.target not in self.formulas:
            raise ValueError(f"target {self.target!r} is not a formula id")
        for fid, f in self.formulas.items():
            need = horizon(f)
            if need > self.system.duration + 1e-9:
                raise ValueError(
                    f"formula {fid!r} needs {need:g}s of trace but {self.system.name} "
                    f"simulates {self.system.duration:g}s"
                )

    @property
    def formula_ids(self) -> tuple:
        return tuple(self.formulas)

    def evaluate(self, x) -> np.ndarray:
        """Robustness of every formula (in ``formula_ids`` order) on M(x)."""
        trace = self.system.simulate(x)
        return np.array([robustness(f, trace) for f in self.formulas.values()])


class SimulationError(RuntimeError):
    def __init__(self, x, cause: Exception):
        super().__init__(f"simulation failed at input {list(map(float, x))}: {cause}")
        self.input = tuple(float(v) for v in x)


@dataclass
class TrialResult:
    success: bool
    iterations: int
    wall_time: float
    witness: tuple | None
    final_robustness: float
    formula_ids: tuple = ()
    log: list = field(default_factory=list)  # (input, robustness vector) per simulation
    error: str | None = None


def minimize_inner(
    acq: Callable[[np.ndarray], np.ndarray],
    box: BoxDomain,
    rng: np.random.Generator,
    config: FalsifierConfig = FalsifierConfig(),
) -> np.ndarray:
    """Best of ``inner_candidates`` uniform draws, refined by greedy coordinate descent.

    ``acq`` maps a batch ``(m, d)`` to ``(m,)`` values.
    """
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    width = box.width
    cands = lo + rng.random((config.inner_candidates, box.dim)) * width
    values = np.asarray(acq(cands), dtype=float)
    best = int(np.argmin(values))  # first index among ties
    x = cands[best].copy()
    fx = float(values[best])

    step = config.hillclimb_initial_step
    evals = 0
    while step >= config.hillclimb_min_step and evals < config.hillclimb_max_evals:
        improved = False
        for j in range(box.dim):
            first = 1.0 if rng.random() < 0.5 else -1.0
            for sign in (first, -first):
                y = x.copy()
                y[j] = min(max(x[j] + sign * step * width[j], lo[j]), hi[j])
                if y[j] == x[j]:
                    continue
                fy = float(acq(y[None, :])[0])
                evals += 1
                if fy < fx:
                    x, fx = y, fy
                    improved = True
                    break
                if evals >= config.hillclimb_max_evals:
                    break
            if evals >= config.hillclimb_max_evals:
                break
        if not improved:
            step /= 2
    return np.clip(x, lo, hi)


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(trial)])))


_UNIT = {}


def _unit_box(d: int) -> BoxDomain:
    if d not in _UNIT:
        _UNIT[d] = BoxDomain.uniform(0.0, 1.0, d)
    return _UNIT[d]


def _forecaster(posteriors: list[gp.Posterior]) -> Callable[[np.ndarray], np.ndarray]:
    """Batch map ``u (m, d) -> q (m, k)`` with ``q[m, i] = Pr(f_i(u_m) > 0)``."""

    def forecast(u):
        means, var = gp.predict_stacked(posteriors, u)
        return gp.prob_positive(means, var[:, None])

    return forecast


class _Run:
    """Shared bookkeeping for one trial: budget, clock, datasets and log."""

    def __init__(self, problem: Problem, config: FalsifierConfig, rng: np.random.Generator):
        self.problem = problem
        self.config = config
        self.rng = rng
        self.box = problem.system.domain
        self.target = problem.formula_ids.index(problem.target)
        self.start = time.perf_counter()
        self.units: list[np.ndarray] = []
        self.rob: list[np.ndarray] = []
        self.log: list = []

    def timed_out(self) -> bool:
        return time.perf_counter() - self.start >= self.config.timeout

    def observe(self, u: np.ndarray) -> bool:
        """Simulate the unit-cube point ``u``; True if the target was falsified."""
        x = self.box.from_unit(u)
        try:
            r = self.problem.evaluate(x)
        except Exception as exc:
            raise SimulationError(x, exc) from exc
        self.units.append(np.asarray(u, dtype=float))
        self.rob.append(r)
        self.log.append((tuple(float(v) for v in x), tuple(float(v) for v in r)))
        return bool(r[self.target] < 0)

    def result(self, success: bool, iterations: int) -> TrialResult:
        witness = self.log[-1][0] if success else None
        final = float(self.rob[-1][self.target]) if self.rob else float("nan")
        return TrialResult(
            success=success,
            iterations=iterations,
            wall_time=time.perf_counter() - self.start,
            witness=witness,
            final_robustness=final,
            formula_ids=self.problem.formula_ids,
            log=self.log,
        )

    def initial(self) -> bool:
        d = self.box.dim
        for _ in range(self.config.init_samples):
            if self.observe(self.rng.random(d)):
                return True
            if self.timed_out():
                break
        return False


def falsify(
    problem: Problem,
    net: BayesNet | None,
    acq_kind: str,
    config: FalsifierConfig = FalsifierConfig(),
    trial: int = 0,
) -> TrialResult:
    """GP-guided falsification with one surrogate per monitored formula.

    ``psat`` consults only the target's surrogate; ``psi_B`` and
    ``psi_B_prime`` use every network node. All formulas are simulated and
    logged regardless.
    """
    if acq_kind == "random":
        return falsify_random(problem, config, trial)
    if acq_kind == "psat":
        columns = [problem.formula_ids.index(problem.target)]
        pair = None
        acq_target = 0
    else:
        if net is None:
            raise ValueError(f"{acq_kind} needs a Bayesian network")
        ensure_valid(net)
        missing = [n.formula_id for n in net.nodes if n.formula_id not in problem.formulas]
        if missing:
            raise ValueError(f"network references unknown formulas {missing}")
        if net.node(net.target).formula_id != problem.target:
            raise ValueError(
                f"network target {net.target!r} labels {net.node(net.target).formula_id!r}, "
                f"but the problem target is {problem.target!r}"
            )
        columns = [problem.formula_ids.index(n.formula_id) for n in net.nodes]
        pair = DistPair.from_net(net)
        acq_target = pair.target
    score = make_acquisition(acq_kind, pair, acq_target)

    run = _Run(problem, config, trial_rng(config.rng_seed, trial))
    if run.initial():
        return run.result(True, 0)
    unit = _unit_box(run.box.dim)
    for it in range(1, config.max_iterations + 1):
        if run.timed_out():
            return run.result(False, it - 1)
        x = np.array(run.units)
        z = np.array(run.rob)
        forecast = _forecaster(gp.fit_many(x, [z[:, c] for c in columns], config.kernel))
        u = minimize_inner(lambda c: score(forecast(c)), unit, run.rng, config)
        if run.observe(u):
            return run.result(True, it)
    return run.result(False, config.max_iterations)


def falsify_random(problem: Problem, config: FalsifierConfig = FalsifierConfig(), trial: int = 0) -> TrialResult:
    """Uniform sampling baseline with the same budget and stopping rules."""
    run = _Run(problem, config, trial_rng(config.rng_seed, trial))
    if run.initial():
        return run.result(True, 0)
    for it in range(1, config.max_iterations + 1):
        if run.timed_out():
            return run.result(False, it - 1)
        if run.observe(run.rng.random(run.box.dim)):
            return run.result(True, it)
    return run.result(False, config.max_iterations)
