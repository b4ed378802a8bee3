"""Non-adaptive references: one-shot sensing with K random codewords.

The whole frame is spent on a single subframe, so the noise variance is the
full-frame sigma2. Two recoveries are provided: LASSO by cyclic coordinate
descent (tuned per instance against the true signal) and the exact posterior
mean by enumerating all 2^N supports, which only scales to small N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np
from scipy.special import logsumexp, xlogy

from .errors import InvalidArgumentError
from .linalg import Codebook
from .selection import select_random

MMSE_MAX_N = 20
_CHUNK = 1 << 13


@dataclass(frozen=True)
class OneShotInstance:
    A: np.ndarray
    y: np.ndarray
    x: np.ndarray
    sigma2: float


def one_shot_instance(codebook: Codebook, K: int, x, sigma2: float, rng) -> OneShotInstance:
    """Sense ``x`` once with K random codewords at noise variance ``sigma2``."""
    rng = np.random.default_rng(rng)
    A = codebook.rows(select_random(codebook, K, rng))
    x = np.asarray(x, dtype=float)
    y = A @ x + math.sqrt(sigma2) * rng.standard_normal(K)
    return OneShotInstance(A, y, x, sigma2)


@dataclass
class LassoResult:
    x: np.ndarray
    converged: bool
    n_sweeps: int


@numba.njit(cache=True)
def _cd_lasso(G, Aty, lam, x, tol, max_iter):
    # Gram-form coordinate descent; grad_j = (A^T y)_j - (G x)_j
    N = x.shape[0]
    Gx = G @ x
    for sweep in range(max_iter):
        max_step = 0.0
        for j in range(N):
            gjj = G[j, j]
            if gjj == 0.0:
                continue
            old = x[j]
            rho = Aty[j] - Gx[j] + gjj * old
            if rho > lam:
                new = (rho - lam) / gjj
            elif rho < -lam:
                new = (rho + lam) / gjj
            else:
                new = 0.0
            step = new - old
            if step != 0.0:
                x[j] = new
                for i in range(N):
                    Gx[i] += G[i, j] * step
                if abs(step) > max_step:
                    max_step = abs(step)
        if max_step < tol:
            return sweep + 1, True
    return max_iter, False


def lasso_solve(A, y, lam: float, tol: float = 1e-10, max_iter: int = 10_000,
                x0: Optional[np.ndarray] = None) -> LassoResult:
    """Minimize ``0.5 ||y - A x||^2 + lam ||x||_1`` by cyclic coordinate descent.

    Stops when a full sweep moves no coordinate by more than ``tol``. When
    ``max_iter`` sweeps run out, the last iterate comes back with
    ``converged=False``.
    """
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    A = np.ascontiguousarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    G = A.T @ A
    x = np.zeros(A.shape[1]) if x0 is None else np.array(x0, dtype=float)
    n, ok = _cd_lasso(G, A.T @ y, float(lam), x, float(tol), int(max_iter))
    return LassoResult(x, bool(ok), int(n))


def lasso_objective(A, y, x, lam) -> float:
    r = np.asarray(y) - np.asarray(A) @ x
    return 0.5 * float(r @ r) + lam * float(np.abs(x).sum())


def kkt_violation(A, y, x, lam) -> float:
    """Largest breach of the LASSO optimality conditions.

    Off the support ``|a_j^T r| <= lam`` must hold; on it ``a_j^T r`` must
    equal ``lam * sign(x_j)``.
    """
    A = np.asarray(A)
    c = A.T @ (np.asarray(y) - A @ x)
    on = x != 0
    off_gap = np.maximum(np.abs(c[~on]) - lam, 0.0)
    on_gap = np.abs(c[on] - lam * np.sign(x[on]))
    return float(max(off_gap.max(initial=0.0), on_gap.max(initial=0.0)))


def default_lambda_grid(A, y, n: int = 30) -> np.ndarray:
    """``n`` values log-spaced over ``[1e-3, 1] * ||A^T y||_inf``, largest first."""
    top = float(np.max(np.abs(np.asarray(A).T @ y)))
    if top == 0.0:
        top = 1.0
    return top * np.logspace(0.0, -3.0, n)


@dataclass
class OracleLasso:
    best_lambda: float
    mse: float
    mse_db: float
    max_kkt: float
    all_converged: bool


def lasso_oracle_mse(instance: OneShotInstance, lambda_grid: Optional[Sequence[float]] = None,
                     tol: float = 1e-10) -> OracleLasso:
    """LASSO over a grid of lambdas, keeping the one closest to the true signal.

    Solves from the largest lambda down with warm starts.
    """
    A, y, x = instance.A, instance.y, instance.x
    grid = default_lambda_grid(A, y) if lambda_grid is None else np.sort(np.asarray(lambda_grid, float))[::-1]
    if len(grid) == 0:
        raise InvalidArgumentError("lambda grid is empty")
    best = (math.inf, None)
    worst_kkt, all_ok = 0.0, True
    x_warm = np.zeros(A.shape[1])
    for lam in grid:
        res = lasso_solve(A, y, lam, tol=tol, x0=x_warm)
        x_warm = res.x
        all_ok &= res.converged
        worst_kkt = max(worst_kkt, kkt_violation(A, y, res.x, lam))
        err = float(np.mean((res.x - x) ** 2))
        if err < best[0]:
            best = (err, float(lam))
    err, lam = best
    return OracleLasso(lam, err, 10 * math.log10(err) if err > 0 else -math.inf, worst_kkt, all_ok)


@dataclass
class SupportPosterior:
    supports: np.ndarray      # (2^N, N) boolean
    log_weights: np.ndarray   # normalized log posterior probabilities
    means: np.ndarray         # (2^N, N) conditional posterior means

    @property
    def mean(self) -> np.ndarray:
        return np.exp(self.log_weights) @ self.means


def support_posterior(A, y, rho: float, sigma2: float) -> SupportPosterior:
    """Posterior over supports for ``y = A x + z`` under the sparse-Gaussian prior.

    Given support s, ``y ~ N(0, sigma2 I + A_s A_s^T)`` and the conditional mean
    of x is ``diag(s) A^T (sigma2 I + A_s A_s^T)^{-1} y``. Supports are
    processed in batches with one stacked Cholesky per batch.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    K, N = A.shape
    if N > MMSE_MAX_N:
        raise InvalidArgumentError(f"exact MMSE enumerates 2^N supports; N={N} exceeds {MMSE_MAX_N}")
    if not 0.0 <= rho <= 1.0:
        raise InvalidArgumentError(f"rho must lie in [0, 1], got {rho}")
    if not sigma2 > 0:
        raise InvalidArgumentError(f"sigma2 must be positive, got {sigma2}")

    S = ((np.arange(1 << N)[:, None] >> np.arange(N)) & 1).astype(bool)
    size = S.sum(axis=1)
    # xlogy keeps 0 * log(0) = 0, so rho = 0 or 1 yields -inf only where it should
    log_prior = xlogy(size, rho) + xlogy(N - size, 1.0 - rho)
    # drop supports with zero prior probability (rho = 0 or 1)
    keep = np.isfinite(log_prior)
    S, log_prior = S[keep], log_prior[keep]

    log_like = np.empty(len(S))
    means = np.empty(S.shape)
    for lo in range(0, len(S), _CHUNK):
        part = slice(lo, lo + _CHUNK)
        log_like[part], means[part] = _gaussian_pieces(A, y, S[part].astype(float), sigma2)
    log_post = log_prior + log_like
    log_post -= logsumexp(log_post)
    return SupportPosterior(S, log_post, means)


def _gaussian_pieces(A, y, s, sigma2):
    K = A.shape[0]
    cov = np.einsum("ki,si,li->skl", A, s, A) + sigma2 * np.eye(K)
    chol = np.linalg.cholesky(cov)
    w = np.linalg.solve(chol, np.broadcast_to(y, (len(s), K))[..., None])[..., 0]
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
    alpha = np.linalg.solve(np.swapaxes(chol, 1, 2), w[..., None])[..., 0]  # cov^{-1} y
    return -0.5 * (logdet + np.sum(w * w, axis=1)), s * (alpha @ A)


def mmse_exact_small(A, y, rho: float, sigma2: float) -> np.ndarray:
    """Exact posterior mean of x by summing over every support (N <= 20)."""
    return support_posterior(A, y, rho, sigma2).mean
