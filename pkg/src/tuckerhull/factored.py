"""Operators stored as a sum of rank-one tensor products.

A :class:`FactoredOperator` represents ``S = sum_k alpha_k beta_k^T`` with the
alphas stacked as the columns of an ``m x K`` block and the betas as the
columns of an ``n x K`` block. Every routine here works on the blocks and never
allocates an ``m x n`` buffer, except :func:`densify` which exists for testing
and small problems.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionMismatchError, SizeCapError

#: Default cap on the number of entries of any dense object we agree to build.
DENSE_SIZE_CAP = 2**24


@dataclass(frozen=True, eq=False)
class FactoredOperator:
    """``S = A @ B.T`` kept in factored form.

    Parameters
    ----------
    alphas : (m, K) array
        Output-side vectors, one per column.
    betas : (n, K) array
        Input-side vectors, one per column.
    """

    alphas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        A = np.array(self.alphas, dtype=np.float64, copy=True)
        B = np.array(self.betas, dtype=np.float64, copy=True)
        if A.ndim == 1:
            A = A[:, None]
        if B.ndim == 1:
            B = B[:, None]
        if A.ndim != 2 or B.ndim != 2:
            raise DimensionMismatchError("alpha and beta blocks must be 2-D")
        if A.shape[1] != B.shape[1]:
            raise DimensionMismatchError(
                f"{A.shape[1]} alphas but {B.shape[1]} betas"
            )
        if A.shape[1] == 0:
            raise DimensionMismatchError("a factored operator needs at least one pair")
        if A.shape[0] == 0 or B.shape[0] == 0:
            raise DimensionMismatchError("empty alpha or beta vectors")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "alphas", A)
        object.__setattr__(self, "betas", B)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[np.ndarray, np.ndarray]]) -> FactoredOperator:
        pairs = list(pairs)
        if not pairs:
            raise DimensionMismatchError("a factored operator needs at least one pair")
        m = {np.shape(a) for a, _ in pairs}
        n = {np.shape(b) for _, b in pairs}
        if len(m) != 1 or len(n) != 1:
            raise DimensionMismatchError("all alphas (resp. betas) must share one length")
        return cls(np.column_stack([a for a, _ in pairs]),
                   np.column_stack([b for _, b in pairs]))

    @property
    def m(self) -> int:
        return self.alphas.shape[0]

    @property
    def n(self) -> int:
        return self.betas.shape[0]

    @property
    def rank_bound(self) -> int:
        """Number of stored pairs, an upper bound on the matrix rank."""
        return self.alphas.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    @property
    def pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self.alphas[:, k], self.betas[:, k]) for k in range(self.rank_bound)]

    def __repr__(self):
        return f"FactoredOperator(m={self.m}, n={self.n}, K={self.rank_bound})"


def _check_same_shape(Sa: FactoredOperator, Sb: FactoredOperator):
    if Sa.shape != Sb.shape:
        raise DimensionMismatchError(f"operator shapes differ: {Sa.shape} vs {Sb.shape}")


def apply(S: FactoredOperator, u: np.ndarray) -> np.ndarray:
    """Return ``S @ u`` as ``sum_k alpha_k <beta_k, u>``."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[0] != S.n:
        raise DimensionMismatchError(f"operator expects input of length {S.n}, got {u.shape[0]}")
    return S.alphas @ (S.betas.T @ u)


def apply_adjoint(S: FactoredOperator, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != S.m:
        raise DimensionMismatchError(f"adjoint expects input of length {S.m}, got {v.shape[0]}")
    return S.betas @ (S.alphas.T @ v)


def inner(Sa: FactoredOperator, Sb: FactoredOperator) -> float:
    """Frobenius inner product ``tr(Sa^T Sb)`` in O(Ka Kb (m + n)) work."""
    _check_same_shape(Sa, Sb)
    ga = Sa.alphas.T @ Sb.alphas
    gb = Sa.betas.T @ Sb.betas
    return float(np.sum(ga * gb))


def frobenius_norm(S: FactoredOperator) -> float:
    return float(np.sqrt(max(inner(S, S), 0.0)))


def densify(S: FactoredOperator, size_cap: int = DENSE_SIZE_CAP) -> np.ndarray:
    """Materialize the ``m x n`` matrix. Refuses when ``m * n > size_cap``."""
    if S.m * S.n > size_cap:
        raise SizeCapError(
            f"dense {S.m}x{S.n} operator exceeds the cap of {size_cap} entries"
        )
    return S.alphas @ S.betas.T


def from_dense(H: np.ndarray, tol: float = 0.0) -> FactoredOperator:
    """Factor a dense matrix through its SVD, dropping singular values ``<= tol``."""
    H = np.asarray(H, dtype=np.float64)
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    keep = max(int(np.count_nonzero(s > tol)), 1)
    return FactoredOperator(U[:, :keep] * s[:keep], Vt[:keep].T)


def concat(*ops: FactoredOperator, weights=None) -> FactoredOperator:
    """``sum_i w_i S_i`` as a single factored operator (pairs are appended)."""
    if weights is None:
        weights = np.ones(len(ops))
    for S in ops[1:]:
        _check_same_shape(ops[0], S)
    A = np.hstack([w * S.alphas for w, S in zip(weights, ops)])
    B = np.hstack([S.betas for S in ops])
    return FactoredOperator(A, B)
