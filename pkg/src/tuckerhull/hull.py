"""Convex hull of projected operators and accelerated projection onto it.

The hull lives in the reduced coefficient space of a :class:`SubspaceModel`:
vertex ``l`` is the ``|I| x |J|`` coefficient matrix ``gamma_l`` of sample
``S_l``. Projecting a target with coefficients ``c`` amounts to

    min_{lam in simplex} 0.5 * || sum_l lam_l gamma_l - c ||^2
        = 0.5 lam^T G lam - lam^T b + 0.5 ||c||^2,

with ``G`` the vertex Gram matrix and ``b_l = <gamma_l, c>``. The iteration
only ever touches ``|L|``-sized vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatchError
from .factored import FactoredOperator
from .simplex import project_simplex
from .subspace import CoeffMatrix, SubspaceModel, project_coeffs, residual_norm_sq

STEP_SAFETY = 1.01


@dataclass(frozen=True, eq=False)
class SimplexWeights:
    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=np.float64, copy=True)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-10:
            raise ValueError("weights are not in the simplex")
        lam = np.maximum(lam, 0.0)
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True, eq=False)
class HullModel:
    """Vertices ``gamma_l``, their Gram matrix and its largest eigenvalue.

    ``tangent_lipschitz`` is the largest eigenvalue of the Gram matrix
    restricted to directions summing to zero, the only directions the
    weights can move in. It is never larger than ``lipschitz`` and is much
    smaller when the vertices share a dominant common component.
    """

    vertices: tuple
    gram: np.ndarray
    lipschitz: float
    model: SubspaceModel | None = None
    tangent_lipschitz: float | None = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def coeff_shape(self) -> tuple[int, int]:
        return self.vertices[0].shape

    def vertex_matrix(self) -> np.ndarray:
        """Vectorized vertices as columns, ``(|I||J|) x |L|``."""
        return np.column_stack([v.gamma.ravel() for v in self.vertices])


@dataclass(frozen=True, eq=False)
class HullProjection:
    weights: SimplexWeights
    coeffs: CoeffMatrix
    history: np.ndarray
    iterations: int
    degenerate: bool = False
    path: np.ndarray | None = None

    @property
    def objective(self) -> float:
        return float(np.min(self.history))


@dataclass(frozen=True)
class HullDistance:
    reduced: float
    orthogonal: float
    weights: SimplexWeights

    @property
    def total(self) -> float:
        return float(np.hypot(self.reduced, self.orthogonal))


def largest_eigenvalue(G: np.ndarray, tol: float = 1e-10, max_iter: int = 1000) -> float:
    """Power iteration for the top eigenvalue of a symmetric PSD matrix."""
    G = np.asarray(G, dtype=np.float64)
    if not np.any(G):
        return 0.0
    x = np.random.default_rng(0).standard_normal(G.shape[0])
    x /= np.linalg.norm(x)
    mu = 0.0
    for _ in range(max_iter):
        y = G @ x
        mu_new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(mu_new - mu) <= tol * abs(mu_new):
            mu = mu_new
            break
        mu = mu_new
    return max(mu, 0.0)


def hull_from_coeffs(vertices: Sequence[CoeffMatrix], model: SubspaceModel | None = None,
                     gram: np.ndarray | None = None) -> HullModel:
    vertices = tuple(v if isinstance(v, CoeffMatrix) else CoeffMatrix(v, i)
                     for i, v in enumerate(vertices))
    if not vertices:
        raise ValueError("a hull needs at least one vertex")
    shapes = {v.shape for v in vertices}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"vertices have differing shapes: {sorted(shapes)}")
    if model is not None and vertices[0].shape != (model.rank_e, model.rank_f):
        raise DimensionMismatchError("vertex shape does not match the subspace model")
    if gram is None:
        V = np.column_stack([v.gamma.ravel() for v in vertices])
        gram = V.T @ V
    gram = np.array(gram, dtype=np.float64, order="C")
    gram.setflags(write=False)
    L = gram.shape[0]
    P = np.eye(L) - 1.0 / L
    return HullModel(vertices, gram, largest_eigenvalue(gram), model,
                     largest_eigenvalue(P @ gram @ P))


def build_hull(samples: Sequence[FactoredOperator], model: SubspaceModel) -> HullModel:
    """Project each sample onto ``model`` and take the projections as vertices."""
    if len(samples) == 0:
        raise ValueError("a hull needs at least one sample")
    coeffs = [project_coeffs(S, model, sample_id=i) for i, S in enumerate(samples)]
    return hull_from_coeffs(coeffs, model)


def accelerated_projected_gradient(grad: Callable, objective: Callable, x0: np.ndarray,
                                   step: float, k_end: int = 500, rel_tol: float = 1e-10,
                                   project: Callable = project_simplex, record_path: bool = False):
    """FISTA-type projected gradient with ``(k-1)/(k+2)`` momentum.

    Returns ``(x_best, history, iterations, path)``; ``history[k]`` is the
    objective at the k-th projected iterate (``history[0]`` at ``x0``).
    Stops early once the objective stayed within a band of width
    ``rel_tol * history[0]`` over the last 5 iterations.
    """
    if k_end < 1:
        raise ValueError("k_end must be at least 1")
    x_prev = np.array(x0, dtype=np.float64)
    y = x_prev.copy()
    history = [float(objective(x_prev))]
    path = [x_prev.copy()] if record_path else None
    best, f_best = x_prev, history[0]
    k = 0
    for k in range(1, k_end + 1):
        x = project(y - step * grad(y))
        f = float(objective(x))
        history.append(f)
        if record_path:
            path.append(x.copy())
        if f < f_best:
            best, f_best = x, f
        y = x + (k - 1) / (k + 2) * (x - x_prev)
        x_prev = x
        if k >= 5:
            window = history[k - 5:]
            if max(window) - min(window) < rel_tol * history[0]:
                break
    return best, np.array(history), k, (np.array(path) if record_path else None)


def _target_coeffs(target, hull: HullModel) -> tuple[np.ndarray, float]:
    """Coefficients of the target and its squared residual off the subspace."""
    if isinstance(target, FactoredOperator):
        if hull.model is None:
            raise ValueError("hull has no subspace model; pass coefficients instead")
        c = project_coeffs(target, hull.model).gamma
        return c, residual_norm_sq(target, hull.model)
    c = target.gamma if isinstance(target, CoeffMatrix) else np.asarray(target, dtype=np.float64)
    if c.shape != hull.coeff_shape:
        raise DimensionMismatchError(f"target coefficients {c.shape} vs hull {hull.coeff_shape}")
    return c, 0.0


def project_onto_hull(target, hull: HullModel, k_end: int = 500, rel_tol: float = 1e-10,
                      lam0: np.ndarray | None = None, step: str = "tangent",
                      record_path: bool = False) -> HullProjection:
    """Closest point of the hull to ``target`` in the reduced coefficient space.

    ``target`` is a :class:`FactoredOperator` (reduced through ``hull.model``
    first), a :class:`CoeffMatrix` or a plain coefficient array. The reported
    objective excludes the part of the target orthogonal to the subspace,
    which does not depend on the weights. An all-zero hull is flagged
    ``degenerate`` and gets uniform weights.

    ``step="tangent"`` uses ``1 / tangent_lipschitz``: simplex projection is
    invariant to adding a multiple of the all-ones vector, so gradient
    components along it never matter. ``step="full"`` uses the plain
    ``1 / lipschitz``.
    """
    c, _ = _target_coeffs(target, hull)
    V = hull.vertex_matrix()
    G = hull.gram
    b = V.T @ c.ravel()
    const = 0.5 * float(c.ravel() @ c.ravel())
    L = hull.n_vertices

    def objective(lam):
        return max(0.5 * lam @ G @ lam - lam @ b + const, 0.0)

    def grad(lam):
        return G @ lam - b

    if step not in ("tangent", "full"):
        raise ValueError(f"step must be 'tangent' or 'full', got {step!r}")
    x0 = np.full(L, 1.0 / L) if lam0 is None else np.asarray(lam0, dtype=np.float64)
    if hull.lipschitz <= 0.0:
        f0 = objective(x0)
        return HullProjection(SimplexWeights(x0), CoeffMatrix(np.zeros_like(c)),
                              np.array([f0]), 0, degenerate=True)
    lip = hull.lipschitz if step == "full" else hull.tangent_lipschitz
    if lip is None:
        lip = hull.lipschitz
    if lip <= 1e-12 * hull.lipschitz:
        # all vertices coincide up to round-off: every feasible weight vector is optimal
        return HullProjection(SimplexWeights(x0), CoeffMatrix((V @ x0).reshape(c.shape)),
                              np.array([objective(x0)]), 0)

    lam, history, iters, path = accelerated_projected_gradient(
        grad, objective, x0, 1.0 / (STEP_SAFETY * lip), k_end, rel_tol,
        record_path=record_path)
    lam = lam / lam.sum()
    coeffs = CoeffMatrix((V @ lam).reshape(c.shape))
    return HullProjection(SimplexWeights(lam), coeffs, history, iters, path=path)


def hull_membership_distance(target, hull: HullModel, **opts) -> HullDistance:
    """Distance from ``target`` to the hull, split into in-subspace and orthogonal parts."""
    c, orth_sq = _target_coeffs(target, hull)
    proj = project_onto_hull(c, hull, **opts)
    reduced = float(np.linalg.norm(proj.coeffs.gamma - c))
    return HullDistance(reduced, float(np.sqrt(orth_sq)), proj.weights)
