"""Adaptive subframe loop of oversampled sensing with a predefined codebook.

Each of the M subframes:

1. targets the L samples with the largest posterior distortion,
2. picks K codewords with a selection strategy,
3. observes ``y = A x + z`` with per-subframe noise variance ``M * sigma2``,
4. cancels the non-targeted samples using the current estimates and
   decouples the targeted ones with the left pseudo-inverse of ``Q = A P^T``,
5. folds each decoupled observation into a running statistic and re-runs the
   scalar posterior for the targeted samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import selection
from .errors import InvalidArgumentError, SingularMatrixError
from .estimators import SparseGaussianPrior, sparse_gaussian_moments
from .linalg import Codebook, SensingMatrix, pseudo_inverse


@dataclass(frozen=True)
class OASConfig:
    N: int
    K: int
    L: int
    M: int
    sigma2_frame: float
    prior: SparseGaussianPrior = field(default_factory=lambda: SparseGaussianPrior(0.1))
    strategy: str = "random"
    rng_seed: int = 0
    exhaustive_budget: Optional[int] = selection.DEFAULT_EXHAUSTIVE_BUDGET

    def __post_init__(self):
        if not 1 <= self.L <= self.K:
            raise InvalidArgumentError(f"need 1 <= L <= K, got L={self.L}, K={self.K}")
        if self.L > self.N:
            raise InvalidArgumentError(f"need L <= N, got L={self.L}, N={self.N}")
        if self.M < 1:
            raise InvalidArgumentError(f"need M >= 1, got {self.M}")
        if not self.sigma2_frame > 0:
            raise InvalidArgumentError(f"sigma2_frame must be positive, got {self.sigma2_frame}")
        if self.strategy not in selection.STRATEGIES:
            raise InvalidArgumentError(f"unknown strategy {self.strategy!r}")

    @property
    def sigma2_subframe(self) -> float:
        return self.M * self.sigma2_frame


@dataclass
class BeliefState:
    """Per-sample running statistics. ``d`` is +inf until a sample is first sensed."""

    statistic: np.ndarray
    sigma_hat2: np.ndarray
    x_hat: np.ndarray
    d: np.ndarray
    count: np.ndarray

    @classmethod
    def initial(cls, N: int) -> "BeliefState":
        return cls(np.zeros(N), np.zeros(N), np.zeros(N), np.full(N, np.inf), np.zeros(N, dtype=np.int64))

    def copy(self) -> "BeliefState":
        return BeliefState(*(a.copy() for a in (self.statistic, self.sigma_hat2, self.x_hat, self.d, self.count)))


@dataclass(frozen=True)
class SubframeRecord:
    m: int
    targets: np.ndarray
    source_indices: np.ndarray
    y_hat: np.ndarray
    noise_variance: np.ndarray
    interference_power: float
    projected_interference: float


@dataclass
class OASResult:
    x_hat: np.ndarray
    mse_trajectory: np.ndarray  # linear MSE after each subframe
    records: List[SubframeRecord]
    noise_seed: int

    @property
    def mse(self) -> float:
        return float(self.mse_trajectory[-1])

    @property
    def mse_db(self) -> float:
        return _to_db(self.mse)


def _to_db(mse: float) -> float:
    return 10.0 * math.log10(mse) if mse > 0 else -math.inf


def mse(x, x_hat) -> float:
    x, x_hat = np.asarray(x, dtype=float), np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise InvalidArgumentError(f"length mismatch: {x.shape} vs {x_hat.shape}")
    return float(np.mean((x - x_hat) ** 2))


def mse_db(x, x_hat) -> float:
    """``10 log10(mean((x - x_hat)^2))``; -inf for a perfect estimate."""
    return _to_db(mse(x, x_hat))


def worst_case_select(beliefs: BeliefState, L: int) -> np.ndarray:
    """Indices of the L largest distortions, largest first, ties by ascending index."""
    d = beliefs.d
    if not 1 <= L <= len(d):
        raise InvalidArgumentError(f"need 1 <= L <= N, got L={L}")
    return np.argsort(-d, kind="stable")[:L]


def decouple_subframe(A: SensingMatrix, targets, x_hat, y):
    """Cancel non-targeted samples and invert the targeted block.

    Returns ``(y_hat, row_norms2)`` where ``y_hat = F (y - W x_tilde)`` and
    ``row_norms2[l] = ||f_l||^2`` for the rows of ``F = pinv(A P^T)``.
    """
    targets = np.asarray(targets, dtype=np.intp)
    residual = selection.residual_vector(x_hat, targets)
    Q = A.rows[:, targets]
    F = pseudo_inverse(Q)
    y_hat = F @ (np.asarray(y, dtype=float) - A.rows @ residual)
    return y_hat, np.sum(F * F, axis=1)


def update_beliefs(beliefs: BeliefState, targets, y_hat, row_norms2, config: OASConfig) -> BeliefState:
    """Accumulate one subframe's decoupled observations and refresh the targeted posteriors."""
    targets = np.asarray(targets, dtype=np.intp)
    if not len(targets) == len(y_hat) == len(row_norms2):
        raise InvalidArgumentError("targets, y_hat and row norms must have equal length")
    out = beliefs.copy()
    out.statistic[targets] += y_hat
    out.sigma_hat2[targets] += config.sigma2_subframe * np.asarray(row_norms2)
    out.count[targets] += 1
    c = out.count[targets].astype(float)
    post = sparse_gaussian_moments(out.statistic[targets] / c, out.sigma_hat2[targets] / c**2, config.prior.rho)
    out.x_hat[targets] = post.mean
    out.d[targets] = post.variance
    return out


def run_oas(config: OASConfig, true_signal, codebook: Codebook, noise_seed: int) -> OASResult:
    """Run all M subframes on one signal and return estimates plus a full log."""
    x = np.asarray(true_signal, dtype=float)
    if x.shape != (config.N,):
        raise InvalidArgumentError(f"signal must have length N={config.N}, got {x.shape}")
    if codebook.dim != config.N:
        raise InvalidArgumentError(f"codebook dimension {codebook.dim} != N={config.N}")
    if codebook.size < config.K:
        raise InvalidArgumentError(f"codebook has S={codebook.size} < K={config.K} codewords")

    select_rng = np.random.default_rng(config.rng_seed)
    noise_rng = np.random.default_rng(noise_seed)
    noise_std = math.sqrt(config.sigma2_subframe)

    beliefs = BeliefState.initial(config.N)
    trajectory = np.empty(config.M)
    records = []
    for m in range(config.M):
        targets = worst_case_select(beliefs, config.L)
        idx = selection.select(config.strategy, codebook, config.K, targets, beliefs.x_hat,
                               select_rng, config.exhaustive_budget)
        A = SensingMatrix.from_codebook(codebook, idx)
        y = A.rows @ x + noise_std * noise_rng.standard_normal(config.K)
        try:
            y_hat, norms2 = decouple_subframe(A, targets, beliefs.x_hat, y)
        except SingularMatrixError as exc:
            exc.subframe, exc.source_indices = m, idx.tolist()
            raise
        records.append(SubframeRecord(
            m=m,
            targets=targets,
            source_indices=idx,
            y_hat=y_hat,
            noise_variance=config.sigma2_subframe * norms2,
            interference_power=selection.interference_power(codebook, idx, beliefs.x_hat, targets),
            projected_interference=selection.projected_interference(codebook, idx, beliefs.x_hat, targets),
        ))
        beliefs = update_beliefs(beliefs, targets, y_hat, norms2, config)
        trajectory[m] = np.mean((x - beliefs.x_hat) ** 2)

    return OASResult(beliefs.x_hat, trajectory, records, noise_seed)

