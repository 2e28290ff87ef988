"""Acquisition functions over per-formula satisfaction forecasts.

A forecast is the vector ``q`` with ``q[i] = Pr(f_i(x) > 0)`` for every
network node, in node order. Functions accept a single forecast of shape
``(N,)`` or a batch of shape ``(m, N)`` and return a scalar or ``(m,)``.
All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bayesnet import BayesNet, JointDist, assignment_bits, condition, enumerate_joint, marginals


def forecast_assignment_prob(q, assignment) -> float:
    """Probability of a truth assignment under independent per-formula forecasts."""
    q = np.asarray(q, dtype=float)
    tt = np.asarray(assignment, dtype=bool)
    return float(np.prod(np.where(tt, q, 1.0 - q)))


def forecast_distribution(q) -> np.ndarray:
    """All ``2**N`` assignment probabilities, in the bayesnet index order."""
    q = np.asarray(q, dtype=float)
    bits = assignment_bits(len(q))
    return np.prod(np.where(bits, q, 1.0 - q), axis=1)


def kl(p, q) -> float:
    """D_KL(p || q) with 0 * log(0/q) = 0 and p > 0, q = 0 giving +inf."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    live = p > 0
    if np.any(q[live] <= 0):
        return math.inf
    return float(math.fsum(p[live] * np.log(p[live] / q[live])))


@dataclass(frozen=True)
class DistPair:
    """Network distributions needed by the divergence acquisitions.

    ``cond`` is Pr_B(. | target = ff) and ``unc`` is Pr_B(.). Built once per
    falsification run.
    """

    ids: tuple
    target: int
    cond: JointDist
    unc: JointDist
    cond_marginals: np.ndarray
    unc_marginals: np.ndarray
    support_bits: np.ndarray  # assignments with cond > 0, shape (s, N)
    support_probs: np.ndarray  # cond restricted to the support, shape (s,)
    cond_neg_entropy: float  # sum cond * log cond

    @classmethod
    def from_net(cls, net: BayesNet) -> "DistPair":
        cond = condition(net, net.target, False)
        unc = enumerate_joint(net)
        live = cond.probs > 0
        bits = assignment_bits(len(net))[live]
        probs = cond.probs[live]
        return cls(
            ids=net.ids,
            target=net.position(net.target),
            cond=cond,
            unc=unc,
            cond_marginals=marginals(cond),
            unc_marginals=marginals(unc),
            support_bits=bits,
            support_probs=probs,
            cond_neg_entropy=float(math.fsum(probs * np.log(probs))),
        )

    @property
    def coefficients(self) -> np.ndarray:
        """Weight of ``log q_i - log(1 - q_i)`` in the expanded KL difference."""
        return self.unc_marginals - self.cond_marginals


def psat(q, target: int):
    q = np.asarray(q, dtype=float)
    return q[..., target]


def psi_b(q, pair: DistPair):
    """D_KL(Pr_B(. | target = ff) || forecast), evaluated in log space.

    Only assignments in the support of the conditional distribution
    contribute, so the result stays finite for clamped forecasts.
    """
    q = np.asarray(q, dtype=float)
    log_q = np.log(q)
    log_nq = np.log1p(-q)
    # log forecast probability of each supported assignment
    log_f = log_q @ pair.support_bits.T + log_nq @ (~pair.support_bits).T
    return pair.cond_neg_entropy - log_f @ pair.support_probs


def psi_b_prime(q, pair: DistPair):
    """Expanded form of D_KL(cond || forecast) - D_KL(unc || forecast).

    Equal to the literal difference up to an additive constant independent
    of the forecast, so both share minimizers.
    """
    q = np.asarray(q, dtype=float)
    return (np.log(q) - np.log1p(-q)) @ pair.coefficients


def psi_b_prime_literal(q, pair: DistPair) -> float:
    """The divergence difference computed by full enumeration (reference only)."""
    f = forecast_distribution(q)
    return kl(pair.cond.probs, f) - kl(pair.unc.probs, f)


ACQUISITIONS = {"psat", "psi_B", "psi_B_prime"}


def make_acquisition(kind: str, pair: DistPair | None, target: int):
    """Return a batch acquisition ``q (m, N) -> (m,)``."""
    if kind == "psat":
        return lambda q: psat(q, target)
    if pair is None:
        raise ValueError(f"{kind} needs a Bayesian network")
    if kind == "psi_B":
        return lambda q: psi_b(q, pair)
    if kind == "psi_B_prime":
        return lambda q: psi_b_prime(q, pair)
    raise ValueError(f"unknown acquisition {kind!r}; expected one of {sorted(ACQUISITIONS)}")
