"""Shared operator subspace ``E (x) F`` for a family of factored operators.

The fitted quantity is the sum of squared projection residuals

    fit(E, F) = sum_l || S_l - P_{E(x)F}(S_l) ||_F^2

where ``P_{E(x)F}(S) = E E^T S F F^T``. Bases come from an HOSVD of the
three-way array ``(S_l)`` and are refined by alternating least squares
(Tucker-2). Nothing here builds an ``m x n`` array: every Gram matrix is
assembled from the alpha/beta blocks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import DimensionMismatchError, RankDeficiencyError, SizeCapError
from .factored import DENSE_SIZE_CAP, FactoredOperator, densify, inner

ORTHO_TOL = 1e-10

# Fits below this fraction of the total energy are indistinguishable from
# rounding in the eigen-solves, so ALS does not try to improve them.
_NEGLIGIBLE_FIT = 1e-14


@dataclass(frozen=True, eq=False)
class OrthoBasis:
    """Orthonormal columns ``vectors`` (d x r) tagged with the mode they act on."""

    vectors: np.ndarray
    mode: str = "E"

    def __post_init__(self):
        V = np.array(self.vectors, dtype=np.float64, copy=True)
        if V.ndim != 2:
            raise DimensionMismatchError("basis vectors must form a 2-D array")
        d, r = V.shape
        if r > d:
            raise DimensionMismatchError(f"{r} orthonormal vectors cannot live in dimension {d}")
        err = np.max(np.abs(V.T @ V - np.eye(r)), initial=0.0)
        if err > ORTHO_TOL:
            raise ValueError(f"basis columns are not orthonormal (max deviation {err:.3e})")
        if self.mode not in ("E", "F"):
            raise ValueError(f"mode must be 'E' or 'F', got {self.mode!r}")
        V.setflags(write=False)
        object.__setattr__(self, "vectors", V)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def size(self) -> int:
        return self.vectors.shape[1]

    def truncate(self, r: int) -> OrthoBasis:
        return OrthoBasis(self.vectors[:, :r], self.mode)


@dataclass(frozen=True, eq=False)
class SubspaceModel:
    """Basis pair plus the fit diagnostics of the procedure that produced it.

    ``fit`` is the sum of squared residuals over the training family and
    ``history`` its value after the initialization and after every ALS
    half-step.
    """

    E: OrthoBasis
    F: OrthoBasis
    fit: float = float("nan")
    history: tuple = field(default_factory=tuple)

    @property
    def m(self) -> int:
        return self.E.dim

    @property
    def n(self) -> int:
        return self.F.dim

    @property
    def rank_e(self) -> int:
        return self.E.size

    @property
    def rank_f(self) -> int:
        return self.F.size

    def truncate(self, rank_e: int, rank_f: int) -> SubspaceModel:
        """Leading-column sub-model. ``fit``/``history`` are not carried over."""
        return SubspaceModel(self.E.truncate(rank_e), self.F.truncate(rank_f))


@dataclass(frozen=True, eq=False)
class CoeffMatrix:
    """Coordinates ``gamma[i, j] = <S, e_i f_j^T>`` of a projected operator."""

    gamma: np.ndarray
    sample_id: int | None = None

    def __post_init__(self):
        g = np.array(self.gamma, dtype=np.float64, copy=True)
        if g.ndim != 2:
            raise DimensionMismatchError("coefficient matrix must be 2-D")
        if not np.all(np.isfinite(g)):
            raise ValueError("coefficient matrix has non-finite entries")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def shape(self):
        return self.gamma.shape


def _check_model(S: FactoredOperator, model: SubspaceModel):
    if (S.m, S.n) != (model.m, model.n):
        raise DimensionMismatchError(
            f"operator is {S.m}x{S.n} but the subspace lives in {model.m}x{model.n}"
        )


def _coeffs(S: FactoredOperator, E: np.ndarray, F: np.ndarray) -> np.ndarray:
    return (E.T @ S.alphas) @ (F.T @ S.betas).T


def _residual(S: FactoredOperator, E: np.ndarray, F: np.ndarray) -> float:
    # ||(I - EE^T) S||^2 + ||EE^T S (I - FF^T)||^2, each piece from projected
    # factors so that small residuals do not drown in cancellation.
    EA = E.T @ S.alphas
    A_perp = S.alphas - E @ EA
    B_perp = S.betas - F @ (F.T @ S.betas)
    out = np.sum((A_perp.T @ A_perp) * (S.betas.T @ S.betas))
    out += np.sum((EA.T @ EA) * (B_perp.T @ B_perp))
    return max(float(out), 0.0)


def project_coeffs(S: FactoredOperator, model: SubspaceModel, sample_id=None) -> CoeffMatrix:
    """Coefficients of the orthogonal projection of ``S`` onto ``E (x) F``."""
    _check_model(S, model)
    return CoeffMatrix(_coeffs(S, model.E.vectors, model.F.vectors), sample_id)


def reconstruct(coeffs: CoeffMatrix, model: SubspaceModel) -> FactoredOperator:
    """``E gamma F^T`` as a factored operator with ``|J|`` pairs."""
    g = coeffs.gamma
    if g.shape != (model.rank_e, model.rank_f):
        raise DimensionMismatchError(
            f"coefficients {g.shape} do not match the model ({model.rank_e}, {model.rank_f})"
        )
    if model.rank_f == 0:
        return FactoredOperator(np.zeros((model.m, 1)), np.zeros((model.n, 1)))
    return FactoredOperator(model.E.vectors @ g, model.F.vectors)


def residual_norm_sq(S: FactoredOperator, model: SubspaceModel) -> float:
    """``||S - P(S)||_F^2``; equal to ``||S||_F^2 - ||gamma||_F^2``."""
    _check_model(S, model)
    return _residual(S, model.E.vectors, model.F.vectors)


def fit_value(samples: Sequence[FactoredOperator], model: SubspaceModel) -> float:
    """Sum of squared residuals of ``samples`` against ``model``."""
    for S in samples:
        _check_model(S, model)
    E, F = model.E.vectors, model.F.vectors
    return float(sum(_residual(S, E, F) for S in samples))


def relative_error(samples: Sequence[FactoredOperator], model: SubspaceModel) -> float:
    total = sum(inner(S, S) for S in samples)
    return fit_value(samples, model) / total if total > 0 else 0.0


def truncation_error_one_sided(S: FactoredOperator, E_full: OrthoBasis, keep: int) -> float:
    """Squared error of keeping the first ``keep`` vectors of a complete basis.

    Only the alpha side is truncated::

        sum_{i >= keep} || sum_k <e_i, alpha_k> beta_k ||^2
    """
    if E_full.size != E_full.dim:
        raise ValueError(f"expected a complete basis of {E_full.dim} vectors, got {E_full.size}")
    if E_full.dim != S.m:
        raise DimensionMismatchError(f"basis dimension {E_full.dim} != operator m={S.m}")
    if not 0 <= keep <= E_full.dim:
        raise ValueError(f"keep must lie in [0, {E_full.dim}], got {keep}")
    W = E_full.vectors[:, keep:].T @ S.alphas
    return float(np.sum((W @ (S.betas.T @ S.betas)) * W))


def truncation_terms(S: FactoredOperator, E_full: OrthoBasis) -> np.ndarray:
    """Per-vector energies ``|| sum_k <e_i, alpha_k> beta_k ||^2`` for every ``i``."""
    if E_full.dim != S.m:
        raise DimensionMismatchError(f"basis dimension {E_full.dim} != operator m={S.m}")
    W = E_full.vectors.T @ S.alphas
    return np.sum((W @ (S.betas.T @ S.betas)) * W, axis=1)


def _complete(U: np.ndarray, r: int) -> np.ndarray:
    """Extend orthonormal columns ``U`` to ``r`` columns."""
    d, k = U.shape
    if k >= r:
        return U[:, :r]
    Q, _ = np.linalg.qr(np.hstack([U, np.eye(d)]))
    return np.hstack([U, Q[:, k:r]])


def _leading_vectors(C: np.ndarray, r: int, mode: str, strict: bool) -> np.ndarray:
    """Top-``r`` left singular vectors of ``C`` through its smaller Gram matrix.

    A rank-deficient ``C`` raises :class:`RankDeficiencyError` when ``strict``;
    otherwise the basis is completed with arbitrary orthonormal directions.
    """
    d, N = C.shape
    if r > d:
        raise RankDeficiencyError(mode, r, d)
    if r == 0:
        return np.zeros((d, 0))
    if N == 0:
        if strict:
            raise RankDeficiencyError(mode, r, 0)
        return np.eye(d)[:, :r]

    small = min(d, N)
    G = C @ C.T if d <= N else C.T @ C
    k = min(r, small)
    w, V = scipy.linalg.eigh(G, subset_by_index=[small - k, small - 1])
    w, V = w[::-1], V[:, ::-1]
    tol = max(d, N) * np.finfo(float).eps * max(w[0], 0.0)
    good = int(np.count_nonzero(w > tol)) if w[0] > 0 else 0

    if strict and good < r:
        full = scipy.linalg.eigvalsh(G)
        attainable = int(np.count_nonzero(full > tol)) if w[0] > 0 else 0
        raise RankDeficiencyError(mode, r, attainable)

    if d <= N:
        U = V
    else:
        U = (C @ V[:, :good]) / np.sqrt(w[:good])
        U, R = np.linalg.qr(U)
        U *= np.sign(np.diag(R))
    return _complete(U, r)


def _check_family(samples: Sequence[FactoredOperator]) -> tuple[int, int]:
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    shapes = {S.shape for S in samples}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"samples have differing shapes: {sorted(shapes)}")
    return samples[0].shape


def _mode_factor(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # X Y^T Q = X R^T for Y = QR, so X R^T carries the Gram X (Y^T Y) X^T.
    R = np.linalg.qr(Y, mode="r")
    return X @ R.T


def hosvd_init(samples: Sequence[FactoredOperator], rank_e: int, rank_f: int,
               strict: bool = True) -> SubspaceModel:
    """HOSVD bases: leading eigenvectors of the two mode Gram matrices.

    ``E`` diagonalizes ``sum_l A_l (B_l^T B_l) A_l^T`` and ``F`` the symmetric
    ``sum_l B_l (A_l^T A_l) B_l^T``, eigenvalues in descending order. The
    bases for smaller ranks are the leading columns of these ones.
    """
    _check_family(samples)
    CE = np.hstack([_mode_factor(S.alphas, S.betas) for S in samples])
    CF = np.hstack([_mode_factor(S.betas, S.alphas) for S in samples])
    E = _leading_vectors(CE, rank_e, "E", strict)
    F = _leading_vectors(CF, rank_f, "F", strict)
    model = SubspaceModel(OrthoBasis(E, "E"), OrthoBasis(F, "F"))
    fit = fit_value(samples, model)
    return SubspaceModel(model.E, model.F, fit, (fit,))


def als_fit(samples: Sequence[FactoredOperator], rank_e: int, rank_f: int,
            init: SubspaceModel | None = None, max_iters: int = 20,
            rel_tol: float = 1e-8, strict: bool = True) -> SubspaceModel:
    """Tucker-2 alternating least squares started from ``init`` (HOSVD by default).

    With ``F`` fixed the best ``E`` spans the leading left singular vectors of
    ``[S_1 F | ... | S_L F]`` (``m x |J||L|``), each block formed as
    ``A_l (B_l^T F)``; the ``F`` update is symmetric. A half-step that would
    raise the fit (possible only through rounding) is discarded and ends the
    iteration, so ``history`` is non-increasing. Iteration stops when a full
    sweep lowers the fit by less than ``rel_tol`` relative, or after
    ``max_iters`` sweeps.
    """
    m, n = _check_family(samples)
    if max_iters < 0:
        raise ValueError("max_iters must be non-negative")
    if init is None:
        init = hosvd_init(samples, rank_e, rank_f, strict=strict)
    if (init.m, init.n, init.rank_e, init.rank_f) != (m, n, rank_e, rank_f):
        raise DimensionMismatchError("initial model does not match the samples or ranks")

    E, F = init.E.vectors, init.F.vectors
    total = float(sum(inner(S, S) for S in samples))
    phi = float(sum(_residual(S, E, F) for S in samples))
    history = [phi]

    def done():
        model = SubspaceModel(OrthoBasis(E, "E"), OrthoBasis(F, "F"), phi, tuple(history))
        return model

    if phi <= _NEGLIGIBLE_FIT * total:
        return done()

    for _ in range(max_iters):
        start = phi

        CE = np.hstack([S.alphas @ (S.betas.T @ F) for S in samples])
        E_new = _leading_vectors(CE, rank_e, "E", strict)
        phi_new = float(sum(_residual(S, E_new, F) for S in samples))
        if phi_new > phi:
            break
        E, phi = E_new, phi_new
        history.append(phi)

        CF = np.hstack([S.betas @ (S.alphas.T @ E) for S in samples])
        F_new = _leading_vectors(CF, rank_f, "F", strict)
        phi_new = float(sum(_residual(S, E, F_new) for S in samples))
        if phi_new > phi:
            break
        F, phi = F_new, phi_new
        history.append(phi)

        if start - phi <= rel_tol * start or phi <= _NEGLIGIBLE_FIT * total:
            break

    return done()


def dct_basis(d: int, r: int, mode: str = "E") -> OrthoBasis:
    """The ``r`` lowest-frequency vectors of the orthonormal DCT-II on ``d`` points."""
    if not 0 <= r <= d:
        raise ValueError(f"need 0 <= r <= d, got r={r}, d={d}")
    D = scipy.fft.dct(np.eye(d), type=2, norm="ortho", axis=0)
    return OrthoBasis(D.T[:, :r], mode)


def full_svd_baseline(samples: Sequence[FactoredOperator], ranks: Sequence[int],
                      size_cap: int = DENSE_SIZE_CAP) -> np.ndarray:
    """Residuals of the best rank-``r`` approximation of the vectorized family.

    The ``(m n) x |L|`` matrix of vectorized operators is formed densely and
    decomposed, so this refuses families with ``m n |L| > size_cap``.
    Returns ``sum_l ||vec(S_l) - P_r vec(S_l)||^2`` for each requested ``r``.
    """
    m, n = _check_family(samples)
    if m * n * len(samples) > size_cap:
        raise SizeCapError(
            f"vectorized family of {m * n * len(samples)} entries exceeds the cap of {size_cap}"
        )
    V = np.column_stack([densify(S, size_cap).ravel() for S in samples])
    _, s, _ = np.linalg.svd(V, full_matrices=False)
    tail = np.concatenate([np.cumsum((s**2)[::-1])[::-1], [0.0]])
    return np.array([tail[min(int(r), len(s))] for r in ranks])
