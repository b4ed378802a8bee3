"""Codeword selection: which K codebook rows sense the next subframe.

Every strategy sees the codebook, the targeted sample set F and the current
soft estimate. The residual ``b = E^T E x_hat`` is ``x_hat`` with the
targeted entries zeroed; it is what interference cancellation subtracts, and
what a good selection keeps small after projection through the codewords.
"""

from __future__ import annotations

from math import comb
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetExceededError, InvalidArgumentError
from .linalg import Codebook

STRATEGIES = ("random", "stepwise", "exhaustive")
DEFAULT_EXHAUSTIVE_BUDGET = 10**6


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_k(codebook: Codebook, K: int):
    if K < 1 or K > codebook.size:
        raise InvalidArgumentError(f"need 1 <= K <= S, got K={K}, S={codebook.size}")


def residual_vector(x_hat: np.ndarray, F: Sequence[int]) -> np.ndarray:
    """``E^T E x_hat``: the current estimate with targeted entries zeroed."""
    b = np.array(x_hat, dtype=float)
    b[np.asarray(F, dtype=np.intp)] = 0.0
    return b


def interference_power(codebook: Codebook, indices, x_hat, F) -> float:
    """``||U E^T x_tilde||^2`` for the rows U picked by ``indices``."""
    b = residual_vector(x_hat, F)
    return float(np.sum((codebook.rows(indices) @ b) ** 2))


def projected_interference(codebook: Codebook, indices, x_hat, F) -> float:
    """``||P U^T U E^T x_tilde||^2``: the quantity the stepwise search minimizes."""
    b = residual_vector(x_hat, F)
    U = codebook.rows(indices)
    v = U.T @ (U @ b)
    return float(np.sum(v[np.asarray(F, dtype=np.intp)] ** 2))


def select_random(codebook: Codebook, K: int, seed=None) -> np.ndarray:
    """K distinct codeword indices drawn uniformly without replacement."""
    _check_k(codebook, K)
    return _rng(seed).choice(codebook.size, size=K, replace=False)


def select_exhaustive(codebook: Codebook, K: int, F, x_hat,
                      budget: Optional[int] = DEFAULT_EXHAUSTIVE_BUDGET) -> np.ndarray:
    """Subset minimizing ``||U E^T x_tilde||^2`` over all K-subsets of the codebook.

    The objective is a sum of ``(c_i^T b)^2`` over the chosen rows, so the
    optimum is the K rows with the smallest such terms; a stable sort gives
    the lexicographically smallest optimum on ties. Returned ascending.

    ``budget`` caps ``C(S, K)``; pass None to lift the cap.
    """
    _check_k(codebook, K)
    n_subsets = comb(codebook.size, K)
    if budget is not None and n_subsets > budget:
        raise BudgetExceededError(
            f"C({codebook.size}, {K}) = {n_subsets} subsets exceeds the budget of {budget}; "
            "use the 'stepwise' strategy for large codebooks"
        )
    terms = (codebook.vectors @ residual_vector(x_hat, F)) ** 2
    return np.sort(np.argsort(terms, kind="stable")[:K])


def select_stepwise(codebook: Codebook, K: int, F, x_hat, seed=None) -> np.ndarray:
    """Greedy stepwise-regression selection.

    The first codeword is drawn at random. Step k then adds the unused
    codeword ``c`` minimizing ``||(c^T b) P c + v_k||^2``, where
    ``v_k = P A_k A_k^T b`` accumulates the already chosen codewords (as
    columns of ``A_k``). Ties go to the smallest index. Indices are returned
    in the order chosen.
    """
    _check_k(codebook, K)
    F = np.asarray(F, dtype=np.intp)
    C = codebook.vectors
    s = C @ residual_vector(x_hat, F)  # c_i^T b for every codeword
    PC = C[:, F] * s[:, None]          # (c_i^T b) P c_i, one row per codeword
    sq = np.sum(PC * PC, axis=1)

    chosen = np.empty(K, dtype=np.intp)
    chosen[0] = _rng(seed).integers(codebook.size)
    available = np.ones(codebook.size, dtype=bool)
    available[chosen[0]] = False
    v = PC[chosen[0]].copy()
    for k in range(1, K):
        # ||p_i + v||^2 without the constant ||v||^2
        scores = sq + 2.0 * (PC @ v)
        scores[~available] = np.inf
        i = int(np.argmin(scores))
        chosen[k] = i
        available[i] = False
        v += PC[i]
    return chosen


def select(kind: str, codebook: Codebook, K: int, F, x_hat, rng=None,
           budget: Optional[int] = DEFAULT_EXHAUSTIVE_BUDGET) -> np.ndarray:
    """Dispatch on strategy name."""
    if kind == "random":
        return select_random(codebook, K, rng)
    if kind == "stepwise":
        return select_stepwise(codebook, K, F, x_hat, rng)
    if kind == "exhaustive":
        return select_exhaustive(codebook, K, F, x_hat, budget)
    raise InvalidArgumentError(f"unknown selection strategy {kind!r}; choose from {STRATEGIES}")
