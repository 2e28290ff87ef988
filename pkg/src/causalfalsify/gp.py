"""Zero-mean Gaussian-process regression with the squared-exponential kernel.

Inputs live in the normalized box [0, 1]^d. The posterior keeps the Cholesky
factor ``L`` of ``K_DD + jitter * I`` and the weights ``alpha = (K_DD +
jitter * I)^-1 z``, so that

    mean(x) = k_D(x) . alpha
    var(x)  = k(x, x) - |L^-1 k_D(x)|^2

Several posteriors over the same inputs may share one factor (see
:func:`fit_many`), which is how the falsifier keeps one surrogate per formula
without refactorizing for each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.special import ndtr

VARIANCE_FLOOR = 1e-12
PROB_MIN = 1e-300
PROB_MAX = 1.0 - 1e-16


class GPFitError(RuntimeError):
    """Covariance matrix could not be factorized."""


@dataclass(frozen=True)
class KernelConfig:
    length_scale: float = 0.1
    jitter: float = 1e-8

    def __post_init__(self):
        if not self.length_scale > 0:
            raise ValueError(f"length_scale must be > 0, got {self.length_scale}")
        if not self.jitter >= 0:
            raise ValueError(f"jitter must be >= 0, got {self.jitter}")


def kernel(x, y, config: KernelConfig) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    sq = float(np.sum((x - y) ** 2))
    return math.exp(-sq / (2.0 * config.length_scale**2))


def kernel_matrix(a: np.ndarray, b: np.ndarray, config: KernelConfig) -> np.ndarray:
    """Pairwise kernel values between the rows of ``a`` (m, d) and ``b`` (n, d)."""
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * config.length_scale**2))


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    observations: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        z = np.asarray(self.observations, dtype=float).reshape(-1)
        if x.size == 0:
            x = x.reshape(0, x.shape[-1] if x.ndim == 2 else 0)
        if len(x) != len(z):
            raise ValueError(f"{len(x)} inputs but {len(z)} observations")
        if np.any(x < 0) or np.any(x > 1):
            raise ValueError("inputs must lie in the unit box [0, 1]^d")
        if not np.all(np.isfinite(z)):
            raise ValueError("observations must be finite")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "observations", z)

    def __len__(self):
        return len(self.observations)


@dataclass(frozen=True)
class Posterior:
    inputs: np.ndarray  # (n, d)
    factor: np.ndarray  # lower-triangular, (n, n)
    weights: np.ndarray  # (n,)
    config: KernelConfig
    dim: int

    @property
    def n(self) -> int:
        return len(self.weights)

    def predict_many(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {x.shape[1]}")
        if self.n == 0:
            return np.zeros(len(x)), np.ones(len(x))
        kx = kernel_matrix(self.inputs, x, self.config)  # (n, m)
        mean = kx.T @ self.weights
        v = solve_triangular(self.factor, kx, lower=True, check_finite=False)
        var = 1.0 - np.sum(v * v, axis=0)
        return mean, np.maximum(var, 0.0)


def _factorize(x: np.ndarray, config: KernelConfig) -> np.ndarray:
    k = kernel_matrix(x, x, config)
    k[np.diag_indices_from(k)] += config.jitter
    try:
        return cholesky(k, lower=True, check_finite=False)
    except LinAlgError:
        eig = np.linalg.eigvalsh(k)
        cond = eig[-1] / eig[0] if eig[0] > 0 else math.inf
        raise GPFitError(
            f"covariance of {len(x)} points is not positive definite "
            f"(jitter={config.jitter:g}, min eigenvalue={eig[0]:.3e}, condition={cond:.3e})"
        ) from None


def fit_many(
    inputs: np.ndarray, observations: Sequence[np.ndarray], config: KernelConfig, dim: int | None = None
) -> list[Posterior]:
    """Fit one posterior per observation vector, all over the same ``inputs``."""
    x = np.asarray(inputs, dtype=float)
    if dim is None:
        dim = x.shape[1]
    x = x.reshape(-1, dim)
    if len(x) == 0:
        empty = np.zeros((0, 0))
        return [Posterior(x, empty, np.zeros(0), config, dim) for _ in observations]
    factor = _factorize(x, config)
    out = []
    for z in observations:
        z = np.asarray(z, dtype=float)
        w = solve_triangular(factor, z, lower=True, check_finite=False)
        w = solve_triangular(factor.T, w, lower=False, check_finite=False)
        out.append(Posterior(x, factor, w, config, dim))
    return out


def fit(dataset: Dataset, config: KernelConfig, dim: int | None = None) -> Posterior:
    """Condition the zero-mean prior on ``dataset``.

    An empty dataset yields the prior (``dim`` is then required).
    """
    if dim is None:
        if len(dataset) == 0:
            raise ValueError("dim is required to fit an empty dataset")
        dim = dataset.inputs.shape[1]
    return fit_many(dataset.inputs, [dataset.observations], config, dim)[0]


def predict_stacked(posteriors: Sequence[Posterior], x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Means ``(m, k)`` and variances ``(m,)`` for posteriors from one :func:`fit_many` call."""
    first = posteriors[0]
    if any(p.factor is not first.factor for p in posteriors[1:]):
        raise ValueError("posteriors do not share a factorization")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if first.n == 0:
        return np.zeros((len(x), len(posteriors))), np.ones(len(x))
    kx = kernel_matrix(first.inputs, x, first.config)
    means = kx.T @ np.stack([p.weights for p in posteriors], axis=1)
    v = solve_triangular(first.factor, kx, lower=True, check_finite=False)
    return means, np.maximum(1.0 - np.sum(v * v, axis=0), 0.0)


def predict(posterior: Posterior, x) -> tuple[float, float]:
    mean, var = posterior.predict_many(np.asarray(x, dtype=float)[None, :])
    return float(mean[0]), float(var[0])


def std_normal_cdf(z: float) -> float:
    return float(ndtr(z))


def prob_positive(mean, variance):
    """Pr(f(x) > 0) for f(x) ~ N(mean, variance), clamped so logs stay finite.

    Accepts scalars or arrays.
    """
    sd = np.sqrt(np.maximum(variance, VARIANCE_FLOOR))
    p = np.clip(ndtr(np.asarray(mean, dtype=float) / sd), PROB_MIN, PROB_MAX)
    return float(p) if np.ndim(p) == 0 else p
