"""Binary Bayesian networks over formula truth values, with exact inference.

Each node stores ``Pr(node = tt | parents)`` as a flat CPT whose rows follow
the parents in lexicographic order with ``tt`` before ``ff``; for parents
``(a, b)`` the rows are ``(tt,tt), (tt,ff), (ff,tt), (ff,ff)``.

Inference enumerates all ``2**N`` assignments. Assignments are indexed the
same way as CPT rows: node ``k`` (in declaration order) is bit ``N-1-k`` of
the index, with a set bit meaning ``ff``. Index 0 is therefore all-``tt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

MAX_NODES = 20


class InvalidNetwork(ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class NodeSpec:
    id: str
    formula_id: str
    parents: tuple = ()
    cpt: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "cpt", tuple(float(p) for p in self.cpt))


@dataclass(frozen=True)
class BayesNet:
    nodes: tuple
    target: str
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "_index", {n.id: k for k, n in enumerate(self.nodes)})

    @property
    def ids(self) -> tuple:
        return tuple(n.id for n in self.nodes)

    def __len__(self):
        return len(self.nodes)

    def position(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise KeyError(f"unknown node {node_id!r}") from None

    def node(self, node_id: str) -> NodeSpec:
        return self.nodes[self.position(node_id)]


@dataclass(frozen=True)
class JointDist:
    """Probabilities of all ``2**N`` assignments, indexed as described above."""

    ids: tuple
    probs: np.ndarray

    def prob(self, assignment: Mapping[str, bool]) -> float:
        return float(self.probs[assignment_index(self.ids, assignment)])


def assignment_bits(n: int) -> np.ndarray:
    """(2**n, n) boolean matrix; row ``i`` holds the truth values of assignment ``i``."""
    idx = np.arange(2**n)[:, None]
    shifts = np.arange(n - 1, -1, -1)[None, :]
    return ((idx >> shifts) & 1) == 0


def assignment_index(ids: Sequence[str], assignment: Mapping[str, bool]) -> int:
    missing = set(ids) - set(assignment)
    if missing:
        raise ValueError(f"assignment is missing nodes {sorted(missing)}")
    index = 0
    for node_id in ids:
        index = (index << 1) | (0 if assignment[node_id] else 1)
    return index


def _topological_order(net: BayesNet) -> list[int] | None:
    pos = {n.id: k for k, n in enumerate(net.nodes)}
    indeg = [0] * len(net.nodes)
    children: list[list[int]] = [[] for _ in net.nodes]
    for k, node in enumerate(net.nodes):
        for p in node.parents:
            if p in pos:
                indeg[k] += 1
                children[pos[p]].append(k)
    ready = [k for k, d in enumerate(indeg) if d == 0]
    order = []
    while ready:
        k = ready.pop(0)
        order.append(k)
        for c in children[k]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    return order if len(order) == len(net.nodes) else None


def _cpt_row(node: NodeSpec, values: Mapping[str, bool]) -> float:
    row = 0
    for p in node.parents:
        row = (row << 1) | (0 if values[p] else 1)
    return node.cpt[row]


def _structural_errors(net: BayesNet) -> list[str]:
    errors = []
    ids = [n.id for n in net.nodes]
    if not ids:
        return ["network has no nodes"]
    if len(ids) > MAX_NODES:
        errors.append(f"network has {len(ids)} nodes; exact enumeration is capped at {MAX_NODES}")
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        errors.append(f"duplicate node ids: {dupes}")
    if net.target not in ids:
        errors.append(f"target {net.target!r} is not a node")
    for node in net.nodes:
        for p in node.parents:
            if p not in ids:
                errors.append(f"node {node.id!r}: unknown parent {p!r}")
        if len(set(node.parents)) != len(node.parents):
            errors.append(f"node {node.id!r}: repeated parent")
        expected = 2 ** len(node.parents)
        if len(node.cpt) != expected:
            errors.append(
                f"node {node.id!r}: cpt has {len(node.cpt)} entries, expected {expected} "
                f"for {len(node.parents)} parent(s)"
            )
        bad = [p for p in node.cpt if not (0.0 <= p <= 1.0)]
        if bad:
            errors.append(f"node {node.id!r}: cpt entries outside [0, 1]: {bad}")
    if not errors and _topological_order(net) is None:
        errors.append("network graph has a cycle")
    return errors


def validate(net: BayesNet) -> list[str]:
    """All problems with ``net``; an empty list means it is usable.

    Beyond structure, the target must be falsifiable with probability
    strictly between 0 and 1: at 0 the conditional distribution given a
    violated target is undefined, at 1 it equals the unconditional one and
    the divergence-based acquisitions carry no information.
    """
    errors = _structural_errors(net)
    if errors:
        return errors
    p_ff = 1.0 - marginal(enumerate_joint(net), net.target)
    if p_ff <= 0.0 or p_ff >= 1.0:
        errors.append(
            f"degenerate target: Pr({net.target} = ff) = {p_ff:g}; "
            "it must be neither 0 nor 1"
        )
    return errors


def ensure_valid(net: BayesNet) -> BayesNet:
    errors = validate(net)
    if errors:
        raise InvalidNetwork(errors)
    return net


def joint(net: BayesNet, assignment: Mapping[str, bool]) -> float:
    """Product of CPT entries along the DAG for a total assignment."""
    missing = set(net.ids) - set(assignment)
    if missing:
        raise ValueError(f"assignment is missing nodes {sorted(missing)}")
    p = 1.0
    for node in net.nodes:
        tt = _cpt_row(node, assignment)
        p *= tt if assignment[node.id] else 1.0 - tt
    return p


def enumerate_joint(net: BayesNet) -> JointDist:
    errors = _structural_errors(net)
    if errors:
        raise InvalidNetwork(errors)
    n = len(net)
    bits = assignment_bits(n)
    probs = np.ones(2**n)
    for k in _topological_order(net):
        node = net.nodes[k]
        row = np.zeros(2**n, dtype=int)
        for p in node.parents:
            row = (row << 1) | (~bits[:, net.position(p)]).astype(int)
        tt = np.asarray(node.cpt)[row]
        probs *= np.where(bits[:, k], tt, 1.0 - tt)
    return JointDist(net.ids, probs)


def condition(net: BayesNet, node_id: str, value: bool) -> JointDist:
    """Posterior over all assignments given ``node_id = value``."""
    dist = enumerate_joint(net)
    k = net.position(node_id)
    keep = assignment_bits(len(net))[:, k] == bool(value)
    probs = np.where(keep, dist.probs, 0.0)
    total = probs.sum()
    if total <= 0.0:
        raise ValueError(
            f"evidence {node_id} = {'tt' if value else 'ff'} has probability zero"
        )
    return JointDist(dist.ids, probs / total)


def marginal(dist: JointDist, node_id: str) -> float:
    """Pr(node = tt) under ``dist``."""
    try:
        k = dist.ids.index(node_id)
    except ValueError:
        raise KeyError(f"unknown node {node_id!r}") from None
    bits = assignment_bits(len(dist.ids))
    return float(math.fsum(dist.probs[bits[:, k]]))


def marginals(dist: JointDist) -> np.ndarray:
    return np.array([marginal(dist, i) for i in dist.ids])
