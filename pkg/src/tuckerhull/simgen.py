"""Simulated families of diffusion-like operators on a 2-D grid.

Each operator is ``S = sum_k alpha_k beta_k^T`` with ``alpha_k`` a centred
Gaussian bump (unit l2 norm) and ``beta_k`` a quadratic weight map affinely
rescaled to ``[c_min, c_max]``. Both live on the flattened grid, so
``m = n = rows * cols``.

Random draws come from NumPy's PCG64 generator seeded with ``seed``, consumed
in a fixed order: for each operator, for each pair, ``sigma, a, b, c1, c2``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import InvalidParameterError
from .factored import FactoredOperator


@dataclass(frozen=True)
class FamilyParams:
    """Sampling parameters. ``grid`` is a side length or a ``(rows, cols)`` pair."""

    grid: int | tuple = 16
    K: int = 10
    L: int = 50
    sigma_range: tuple = (0.05, 0.3)
    a_range: tuple = (0.5, 2.0)
    b_range: tuple = (0.5, 2.0)
    c1_range: tuple = (-0.5, 0.5)
    c2_range: tuple = (-0.5, 0.5)
    c_min: float = 0.5
    c_max: float = 1.0
    seed: int = 0

    @property
    def grid_shape(self) -> tuple[int, int]:
        if np.ndim(self.grid) == 0:
            return (int(self.grid), int(self.grid))
        rows, cols = self.grid
        return (int(rows), int(cols))

    @property
    def dim(self) -> int:
        rows, cols = self.grid_shape
        return rows * cols

    def validate(self):
        rows, cols = self.grid_shape
        if rows < 2 or cols < 2:
            raise InvalidParameterError(f"grid must be at least 2x2, got {rows}x{cols}")
        if self.K < 1 or self.L < 1:
            raise InvalidParameterError("K and L must be positive")
        for name in ("sigma_range", "a_range", "b_range", "c1_range", "c2_range"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise InvalidParameterError(f"{name} must be a finite interval lo <= hi")
        if self.sigma_range[0] <= 0:
            raise InvalidParameterError("sigma must be positive")
        if not self.c_min <= self.c_max:
            raise InvalidParameterError("c_min must not exceed c_max")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> FamilyParams:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidParameterError(f"unknown family parameters: {sorted(unknown)}")
        return cls(**d)


def grid_coordinates(grid_shape) -> tuple[np.ndarray, np.ndarray]:
    """Centred coordinates in ``[-1, 1]``; X varies along columns, Y along rows."""
    rows, cols = grid_shape
    Y, X = np.meshgrid(np.linspace(-1.0, 1.0, rows), np.linspace(-1.0, 1.0, cols),
                       indexing="ij")
    return X, Y


def gaussian_profile(grid_shape, sigma: float) -> np.ndarray:
    X, Y = grid_coordinates(grid_shape)
    g = np.exp(-(X**2 + Y**2) / (2.0 * sigma**2)).ravel()
    return g / np.linalg.norm(g)


def quadratic_profile(grid_shape, a, b, c1, c2) -> np.ndarray:
    X, Y = grid_coordinates(grid_shape)
    return (a * (X - c1) ** 2 + b * (Y - c2) ** 2).ravel()


def rescale(q: np.ndarray, c_min: float, c_max: float) -> np.ndarray:
    """Affine map sending ``min(q)`` to ``c_min`` and ``max(q)`` to ``c_max``.

    A constant ``q`` maps to the constant ``c_min``.
    """
    lo, hi = q.min(), q.max()
    if hi - lo <= np.finfo(float).eps * max(abs(lo), abs(hi), 1.0):
        return np.full_like(q, c_min)
    return c_min + (q - lo) * ((c_max - c_min) / (hi - lo))


def generate_family(params: FamilyParams) -> list[FactoredOperator]:
    params.validate()
    shape = params.grid_shape
    rng = np.random.Generator(np.random.PCG64(params.seed))
    family = []
    for _ in range(params.L):
        alphas, betas = [], []
        for _ in range(params.K):
            sigma = rng.uniform(*params.sigma_range)
            a = rng.uniform(*params.a_range)
            b = rng.uniform(*params.b_range)
            c1 = rng.uniform(*params.c1_range)
            c2 = rng.uniform(*params.c2_range)
            alphas.append(gaussian_profile(shape, sigma))
            betas.append(rescale(quadratic_profile(shape, a, b, c1, c2),
                                 params.c_min, params.c_max))
        family.append(FactoredOperator(np.column_stack(alphas), np.column_stack(betas)))
    return family
