"""Config-driven experiments: load a problem, run seeded trials, write results.

A config is one JSON document::

    {
      "system": {"name": "counter", "params": {"N": 5}},
      "formulas": [{"id": "phi5", "stl": "G[5,5](cnt <= 5)"}, ...],
      "network": {"nodes": [{"id": "phi5", "formula_id": "phi5",
                             "parents": ["phi4"], "cpt": [1.0, 0.8]}, ...],
                  "target": "phi5"},
      "target": "phi5",
      "algorithm": "kl",
      "budget": {"max_iterations": 1000, "timeout_s": 100},
      "gp": {"length_scale": 0.1, "jitter": 1e-8, "init_samples": 5},
      "inner": {"candidates": 100, "initial_step": 0.1, "min_step": 0.001, "max_evals": 200},
      "trials": 10,
      "seed": 0
    }

``target`` may be omitted when a network is given; it then defaults to the
formula labelling the network's target node. ``network`` is required only by
the ``kl`` and ``kl-diff`` algorithms.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import gp
from .bayesnet import BayesNet, NodeSpec, validate
from .optimizer import FalsifierConfig, Problem, TrialResult, falsify
from .stl import Formula, ParseError, parse_formula, variables
from .systems import SystemModel, registry_lookup

ALGORITHMS = {"random": "random", "gp-psat": "psat", "kl": "psi_B", "kl-diff": "psi_B_prime"}
CSV_COLUMNS = ("trial", "success", "iterations", "wall_time_s", "final_robustness", "witness")

_TOP_KEYS = {"system", "formulas", "network", "target", "algorithm", "budget", "gp", "inner", "trials", "seed"}
_INNER_KEYS = {
    "candidates": "inner_candidates",
    "initial_step": "hillclimb_initial_step",
    "min_step": "hillclimb_min_step",
    "max_evals": "hillclimb_max_evals",
}


class ConfigError(ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class ProblemConfig:
    system_name: str
    system_params: dict
    formulas: dict  # id -> Formula, in declaration order
    target: str
    network: BayesNet | None
    algorithm: str
    falsifier: FalsifierConfig
    trials: int = 10
    seed: int = 0

    def build_system(self) -> SystemModel:
        return registry_lookup(self.system_name, self.system_params)

    def build_problem(self) -> Problem:
        return Problem(self.build_system(), self.formulas, self.target)

    def with_overrides(self, **changes) -> "ProblemConfig":
        """Replace fields, ignoring ``None``; budget overrides go to the falsifier config."""
        changes = {k: v for k, v in changes.items() if v is not None}
        fal = {k: changes.pop(k) for k in ("max_iterations", "timeout") if k in changes}
        if "seed" in changes:
            fal["rng_seed"] = changes["seed"]
        if fal:
            changes["falsifier"] = replace(self.falsifier, **fal)
        cfg = replace(self, **changes)
        errors = _check_algorithm(cfg.algorithm, cfg.network)
        if cfg.trials < 1:
            errors.append("trials must be >= 1")
        if errors:
            raise ConfigError(errors)
        return cfg


def bundled_configs() -> dict[str, Path]:
    root = resources.files(__package__) / "configs"
    return {p.name[: -len(".json")]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")}


def resolve_config_path(name: str | Path) -> Path:
    """A filesystem path, or the name of a bundled config (``counter-n5``)."""
    path = Path(name)
    if path.exists():
        return path
    bundled = bundled_configs()
    key = path.name[:-5] if path.name.endswith(".json") else path.name
    if key in bundled:
        return bundled[key]
    raise ConfigError([f"{name}: no such file or bundled config (bundled: {', '.join(sorted(bundled))})"])


def load_config(path: str | Path) -> ProblemConfig:
    path = resolve_config_path(path)
    text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from None
    return parse_config(raw, source=str(path))


def parse_config(raw: dict, source: str = "<config>") -> ProblemConfig:
    errors: list[str] = []

    def err(msg):
        errors.append(f"{source}: {msg}")

    if not isinstance(raw, dict):
        raise ConfigError([f"{source}: top level must be a JSON object"])
    for key in sorted(set(raw) - _TOP_KEYS):
        err(f"unknown key {key!r}")

    system = raw.get("system")
    system_model = None
    if not isinstance(system, dict) or "name" not in system:
        err("system must be an object with a 'name'")
        system = {"name": None, "params": {}}
    else:
        try:
            system_model = registry_lookup(system["name"], system.get("params") or {})
        except ValueError as exc:
            err(str(exc))

    formulas: dict[str, Formula] = {}
    entries = raw.get("formulas")
    if not isinstance(entries, list) or not entries:
        err("formulas must be a nonempty list of {id, stl}")
        entries = []
    for k, entry in enumerate(entries):
        if not isinstance(entry, dict) or "id" not in entry or "stl" not in entry:
            err(f"formulas[{k}] needs 'id' and 'stl'")
            continue
        fid = str(entry["id"])
        if fid in formulas:
            err(f"duplicate formula id {fid!r}")
            continue
        try:
            formulas[fid] = parse_formula(entry["stl"])
        except ParseError as exc:
            err(f"formula {fid!r}: line {exc.line}, column {exc.column}: {exc}")

    network = None
    if raw.get("network") is not None:
        network = _parse_network(raw["network"], formulas, err)

    target = raw.get("target")
    if target is None and network is not None and network.target in network.ids:
        target = network.node(network.target).formula_id
    if target is None:
        err("no target: give 'target' or a network with a target node")
    elif target not in formulas:
        err(f"target {target!r} is not a formula id")
    elif network is not None and network.target in network.ids:
        labelled = network.node(network.target).formula_id
        if labelled != target:
            err(f"network target node labels {labelled!r} but target is {target!r}")

    if system_model is not None:
        _check_formulas_against_system(system_model, formulas, err)

    algorithm = raw.get("algorithm", "gp-psat")
    for msg in _check_algorithm(algorithm, network):
        err(msg)

    falsifier = None
    try:
        falsifier = _falsifier_config(raw)
    except (TypeError, ValueError) as exc:
        err(f"budget/gp/inner: {exc}")

    trials = raw.get("trials", 10)
    seed = raw.get("seed", 0)
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        err("trials must be an integer >= 1")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        err("seed must be a nonnegative integer")

    if errors:
        raise ConfigError(errors)
    return ProblemConfig(
        system_name=system["name"],
        system_params=dict(system.get("params") or {}),
        formulas=formulas,
        target=target,
        network=network,
        algorithm=algorithm,
        falsifier=replace(falsifier, rng_seed=seed),
        trials=trials,
        seed=seed,
    )


def _check_algorithm(algorithm, network) -> list[str]:
    if algorithm not in ALGORITHMS:
        return [f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}"]
    if algorithm in ("kl", "kl-diff") and network is None:
        return [f"algorithm {algorithm!r} needs a network"]
    return []


def _parse_network(raw, formulas, err) -> BayesNet | None:
    if not isinstance(raw, dict) or not isinstance(raw.get("nodes"), list):
        err("network must be an object with a 'nodes' list")
        return None
    nodes = []
    for k, entry in enumerate(raw["nodes"]):
        if not isinstance(entry, dict) or "id" not in entry or "cpt" not in entry:
            err(f"network.nodes[{k}] needs 'id' and 'cpt'")
            continue
        node_id = str(entry["id"])
        fid = str(entry.get("formula_id", node_id))
        if fid not in formulas:
            err(f"network node {node_id!r} references unknown formula {fid!r}")
        try:
            cpt = tuple(float(p) for p in entry["cpt"])
        except (TypeError, ValueError):
            err(f"network node {node_id!r}: cpt must be a list of numbers")
            continue
        nodes.append(NodeSpec(node_id, fid, tuple(entry.get("parents", ())), cpt))
    net = BayesNet(nodes, str(raw.get("target")))
    for msg in validate(net):
        err(f"network: {msg}")
    return net


def _check_formulas_against_system(system: SystemModel, formulas, err) -> None:
    known = None
    for fid, f in formulas.items():
        try:
            Problem(system, {fid: f}, fid)
        except ValueError as exc:
            err(str(exc))
        if known is None:
            centre = system.domain.from_unit(np.full(system.dim, 0.5))
            known = set(system.simulate(centre).variables)
        missing = variables(f) - known
        if missing:
            err(f"formula {fid!r} uses unknown signals {sorted(missing)}; {system.name} emits {sorted(known)}")


def _falsifier_config(raw) -> FalsifierConfig:
    budget = dict(raw.get("budget") or {})
    gp_raw = dict(raw.get("gp") or {})
    inner = dict(raw.get("inner") or {})
    for name, section, allowed in (
        ("budget", budget, {"max_iterations", "timeout_s"}),
        ("gp", gp_raw, {"length_scale", "jitter", "init_samples"}),
        ("inner", inner, set(_INNER_KEYS)),
    ):
        extra = set(section) - allowed
        if extra:
            raise ValueError(f"unknown {name} keys {sorted(extra)}")
    kernel = gp.KernelConfig(
        length_scale=float(gp_raw.get("length_scale", gp.KernelConfig.length_scale)),
        jitter=float(gp_raw.get("jitter", gp.KernelConfig.jitter)),
    )
    kwargs = {_INNER_KEYS[k]: v for k, v in inner.items()}
    if "init_samples" in gp_raw:
        kwargs["init_samples"] = int(gp_raw["init_samples"])
    if "max_iterations" in budget:
        kwargs["max_iterations"] = int(budget["max_iterations"])
    kwargs["timeout"] = float(budget.get("timeout_s", 100.0))
    return FalsifierConfig(kernel=kernel, **kwargs)


@dataclass(frozen=True)
class Summary:
    trials: int
    success_count: int
    mean_iterations: float
    mean_wall_time: float
    mean_iterations_success: float | None = None
    mean_wall_time_success: float | None = None
    errors: dict = field(default_factory=dict)  # trial index -> message

    @classmethod
    def from_results(cls, results: Sequence[TrialResult]) -> "Summary":
        if not results:
            raise ValueError("no trial results")
        wins = [r for r in results if r.success]

        def mean(values):
            return math.fsum(values) / len(values)

        return cls(
            trials=len(results),
            success_count=len(wins),
            mean_iterations=mean([r.iterations for r in results]),
            mean_wall_time=mean([r.wall_time for r in results]),
            mean_iterations_success=mean([r.iterations for r in wins]) if wins else None,
            mean_wall_time_success=mean([r.wall_time for r in wins]) if wins else None,
            errors={k: r.error for k, r in enumerate(results) if r.error},
        )


def run_trial(config: ProblemConfig, trial: int) -> TrialResult:
    """One seeded trial; simulation or surrogate failures end the trial, not the run."""
    start = time.perf_counter()
    try:
        return falsify(config.build_problem(), config.network, ALGORITHMS[config.algorithm], config.falsifier, trial)
    except (RuntimeError, ValueError, ArithmeticError) as exc:
        return TrialResult(
            success=False,
            iterations=0,
            wall_time=time.perf_counter() - start,
            witness=None,
            final_robustness=math.nan,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_experiment(config: ProblemConfig, workers: int = 1, progress=None) -> tuple[list[TrialResult], Summary]:
    """Run ``config.trials`` trials, sequentially unless ``workers > 1``."""
    results: list[TrialResult] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_trial, config, t) for t in range(config.trials)]
            for t, fut in enumerate(futures):
                results.append(fut.result())
                if progress:
                    progress(t, results[-1])
    else:
        for t in range(config.trials):
            results.append(run_trial(config, t))
            if progress:
                progress(t, results[-1])
    for r in results:
        r.log = []  # per-simulation logs are not part of the report
    return results, Summary.from_results(results)


def _num(value: float | None) -> str:
    if value is None:
        return ""
    return repr(float(value))


def format_witness(witness) -> str:
    return "" if witness is None else ";".join(repr(float(v)) for v in witness)


def results_to_csv(results: Sequence[TrialResult], summary: Summary, timing: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for k, r in enumerate(results):
        writer.writerow(
            [
                k,
                "true" if r.success else "false",
                r.iterations,
                _num(r.wall_time) if timing else "",
                _num(r.final_robustness),
                format_witness(r.witness),
            ]
        )
    for key, value in _summary_fields(summary, timing).items():
        buf.write(f"# {key}={'' if value is None else value}\n")
    for k, msg in sorted(summary.errors.items()):
        buf.write(f"# error[{k}]={msg}\n")
    return buf.getvalue()


def _summary_fields(summary: Summary, timing: bool) -> dict:
    out = {
        "trials": summary.trials,
        "success_count": summary.success_count,
        "mean_iterations": _num(summary.mean_iterations),
        "mean_iterations_success": _num(summary.mean_iterations_success),
    }
    if timing:
        out["mean_wall_time_s"] = _num(summary.mean_wall_time)
        out["mean_wall_time_s_success"] = _num(summary.mean_wall_time_success)
    return out


def _json_num(value):
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def results_to_json(results: Sequence[TrialResult], summary: Summary, timing: bool = True) -> str:
    rows = [
        {
            "trial": k,
            "success": r.success,
            "iterations": r.iterations,
            "wall_time_s": _json_num(r.wall_time) if timing else None,
            "final_robustness": _json_num(r.final_robustness),
            "witness": None if r.witness is None else [float(v) for v in r.witness],
        }
        for k, r in enumerate(results)
    ]
    summ = {
        "trials": summary.trials,
        "success_count": summary.success_count,
        "mean_iterations": summary.mean_iterations,
        "mean_iterations_success": summary.mean_iterations_success,
    }
    if timing:
        summ["mean_wall_time_s"] = summary.mean_wall_time
        summ["mean_wall_time_s_success"] = summary.mean_wall_time_success
    summ["errors"] = {str(k): v for k, v in sorted(summary.errors.items())}
    return json.dumps({"results": rows, "summary": summ}, indent=2) + "\n"


def write_results(
    results: Sequence[TrialResult],
    summary: Summary,
    path: str | Path,
    format: str = "csv",
    timing: bool = True,
) -> None:
    if format == "csv":
        text = results_to_csv(results, summary, timing)
    elif format == "json":
        text = results_to_json(results, summary, timing)
    else:
        raise ValueError(f"unknown format {format!r}")
    Path(path).write_text(text)


def read_csv_results(text: str) -> list[dict]:
    """Parse the per-trial rows back out of ``results_to_csv`` output."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = []
    for rec in csv.DictReader(lines):
        rows.append(
            {
                "trial": int(rec["trial"]),
                "success": rec["success"] == "true",
                "iterations": int(rec["iterations"]),
                "wall_time_s": float(rec["wall_time_s"]) if rec["wall_time_s"] else None,
                "final_robustness": float(rec["final_robustness"]),
                "witness": tuple(float(v) for v in rec["witness"].split(";")) if rec["witness"] else None,
            }
        )
    return rows
