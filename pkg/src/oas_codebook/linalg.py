"""Codebooks, selector operators and the decoupling pseudo-inverse.

Indices are 0-based throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dtrcon

from .errors import InvalidArgumentError, SingularMatrixError

#: Reject Q when its estimated condition number exceeds this.
MAX_CONDITION = 1e10


@dataclass(frozen=True)
class Codebook:
    """S candidate coefficient vectors of length N, stored as an (S, N) array."""

    vectors: np.ndarray
    entry_variance: float
    seed: int

    def __post_init__(self):
        self.vectors.setflags(write=False)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def rows(self, indices: Sequence[int]) -> np.ndarray:
        return self.vectors[np.asarray(indices, dtype=np.intp)]

    def save(self, path) -> None:
        """Write a text matrix, row-major, with an ``S N entry_variance seed`` header."""
        header = f"{self.size} {self.dim} {self.entry_variance!r} {self.seed}"
        np.savetxt(path, self.vectors, header=header, fmt="%.17g")

    @classmethod
    def load(cls, path) -> "Codebook":
        path = Path(path)
        with path.open() as fh:
            first = fh.readline().lstrip("#").split()
        if len(first) != 4:
            raise InvalidArgumentError(f"{path}: malformed codebook header")
        S, N = int(first[0]), int(first[1])
        data = np.loadtxt(path, ndmin=2)
        if data.shape != (S, N):
            raise InvalidArgumentError(f"{path}: header says {S}x{N}, body is {data.shape}")
        return cls(data, float(first[2]), int(first[3]))


def generate_codebook(S: int, N: int, entry_variance: float, seed: int) -> Codebook:
    """Draw S vectors with i.i.d. N(0, entry_variance) entries."""
    if S < 1 or N < 1:
        raise InvalidArgumentError(f"codebook needs S >= 1 and N >= 1, got S={S}, N={N}")
    if not entry_variance > 0:
        raise InvalidArgumentError(f"entry_variance must be positive, got {entry_variance}")
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((S, N)) * np.sqrt(entry_variance)
    return Codebook(vectors, float(entry_variance), int(seed))


@dataclass(frozen=True)
class SelectorMatrix:
    """The selector operator for an ordered index set.

    Row l of the materialized matrix is the standard basis vector with its one
    at ``index_set[l]``. Kept as an index list; ``apply`` gathers and
    ``adjoint`` scatters.
    """

    index_set: np.ndarray
    N: int

    def __post_init__(self):
        self.index_set.setflags(write=False)

    @property
    def L(self) -> int:
        return len(self.index_set)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """P @ x (works on the leading axis, so also P @ X for a matrix X)."""
        return np.asarray(x)[self.index_set]

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        """P.T @ v: scatter an L-vector into a zero N-vector."""
        out = np.zeros(self.N, dtype=np.result_type(v, float))
        out[self.index_set] = v
        return out

    def columns_of(self, A: np.ndarray) -> np.ndarray:
        """A @ P.T, i.e. the columns of A picked by the index set."""
        return np.asarray(A)[:, self.index_set]

    def complement(self) -> "SelectorMatrix":
        keep = np.ones(self.N, dtype=bool)
        keep[self.index_set] = False
        return SelectorMatrix(np.flatnonzero(keep), self.N)

    def to_dense(self) -> np.ndarray:
        P = np.zeros((self.L, self.N))
        P[np.arange(self.L), self.index_set] = 1.0
        return P


def sel(index_set: Sequence[int], N: int) -> SelectorMatrix:
    """Selector operator for ``index_set`` in dimension N."""
    idx = np.asarray(list(index_set), dtype=np.intp)
    if idx.ndim != 1:
        raise InvalidArgumentError("index set must be one-dimensional")
    if idx.size and (idx.min() < 0 or idx.max() >= N):
        raise InvalidArgumentError(f"index out of range for N={N}: {idx.tolist()}")
    if len(np.unique(idx)) != len(idx):
        raise InvalidArgumentError(f"duplicate indices in {idx.tolist()}")
    return SelectorMatrix(idx, int(N))


def pseudo_inverse(Q: np.ndarray, max_condition: float = MAX_CONDITION) -> np.ndarray:
    """Left inverse (Q^T Q)^{-1} Q^T of a tall K x L matrix.

    Computed as R^{-1} Qo^T from the thin QR factorization Q = Qo R, which
    avoids squaring the condition number. Raises SingularMatrixError when the
    LAPACK 1-norm condition estimate of R exceeds ``max_condition``.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2:
        raise InvalidArgumentError("Q must be a matrix")
    K, L = Q.shape
    if K < L:
        raise InvalidArgumentError(f"pseudo_inverse needs K >= L, got {K}x{L}")
    Qo, R = np.linalg.qr(Q)
    rcond, _ = dtrcon(R, norm="1", uplo="U")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if not cond <= max_condition:
        raise SingularMatrixError(f"Q is ill-conditioned (cond ~ {cond:.3g})", condition=cond)
    return solve_triangular(R, Qo.T)


@dataclass(frozen=True)
class SensingMatrix:
    """K codebook rows stacked as a K x N matrix, with their codebook positions."""

    rows: np.ndarray
    source_indices: np.ndarray

    @classmethod
    def from_codebook(cls, codebook: Codebook, indices: Sequence[int]) -> "SensingMatrix":
        idx = np.asarray(indices, dtype=np.intp)
        if len(np.unique(idx)) != len(idx):
            raise InvalidArgumentError(f"codewords repeated within a subframe: {idx.tolist()}")
        return cls(codebook.rows(idx), idx)

    @property
    def K(self) -> int:
        return self.rows.shape[0]
