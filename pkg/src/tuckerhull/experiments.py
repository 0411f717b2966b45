"""Approximation-error and timing sweeps comparing basis constructions.

Methods: ``DCT`` (fixed cosine bases), ``SVD`` (dense SVD of the vectorized
family, rank equal to the sweep dimension), ``HOSVD`` and ``ALS`` (Tucker-2
bases with ``|I| = |J|`` equal to the sweep dimension).
"""
from __future__ import annotations

import dataclasses
import logging
import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError
from .factored import DENSE_SIZE_CAP, inner
from .simgen import FamilyParams, generate_family
from .subspace import (SubspaceModel, als_fit, dct_basis, fit_value, full_svd_baseline,
                       hosvd_init)

log = logging.getLogger(__name__)

METHODS = ("DCT", "SVD", "HOSVD", "ALS")


@dataclass(frozen=True)
class ExperimentRecord:
    method: str
    n: int
    dimension: int
    value: float

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"record value must be non-negative, got {self.value}")


@dataclass(frozen=True)
class ExperimentConfig:
    family: FamilyParams = field(default_factory=FamilyParams)
    family_path: str | None = None
    dims: tuple = tuple(range(31))
    methods: tuple = METHODS
    sizes: tuple = (128, 256, 512)
    reps: int = 3
    timing_rank: int = 10
    max_iters: int = 20
    rel_tol: float = 1e-8
    size_cap: int = DENSE_SIZE_CAP
    out: str | None = None

    def validate(self):
        for name in ("dims", "sizes"):
            sweep = getattr(self, name)
            if not sweep:
                raise InvalidParameterError(f"{name} sweep is empty")
            if any(b <= a for a, b in zip(sweep, sweep[1:])):
                raise InvalidParameterError(f"{name} sweep must be strictly ascending")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise InvalidParameterError(f"unknown methods {sorted(bad)}; choose from {METHODS}")
        if self.reps < 1:
            raise InvalidParameterError("reps must be at least 1")
        self.family.validate()
        return self


# -- key=value configuration ---------------------------------------------------

_FAMILY_KEYS = {f.name for f in dataclasses.fields(FamilyParams)}
_CONFIG_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"family"}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _ints(v):
    if isinstance(v, str):
        v = v.replace(",", " ").split()
        out = []
        for tok in v:
            if ":" in tok:  # inclusive range lo:hi
                lo, hi = tok.split(":")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(tok))
        return tuple(out)
    return tuple(int(x) for x in v)


def _floats(v):
    if isinstance(v, str):
        return tuple(float(x) for x in v.replace(",", " ").split())
    return tuple(float(x) for x in v)


def _convert_family(key, value):
    if key == "grid":
        g = _ints(value) if isinstance(value, str) else value
        if isinstance(g, tuple) and len(g) == 1:
            g = g[0]
        return g
    if key in ("K", "L", "seed"):
        return int(value)
    if key.endswith("_range"):
        lo_hi = _floats(value)
        if len(lo_hi) == 1:
            lo_hi = (lo_hi[0], lo_hi[0])
        return lo_hi
    return float(value)


def _convert_config(key, value):
    if key in ("dims", "sizes"):
        return _ints(value)
    if key == "methods":
        if isinstance(value, str):
            value = value.replace(",", " ").split()
        return tuple(str(m).upper() for m in value)
    if key in ("reps", "timing_rank", "max_iters", "size_cap"):
        return int(value)
    if key == "rel_tol":
        return float(value)
    return value


def make_config(settings: dict) -> ExperimentConfig:
    """Build a validated config from a flat mapping (file values and flag overrides)."""
    fam, cfg = {}, {}
    for key, value in settings.items():
        if value is None:
            continue
        if key in _FAMILY_KEYS:
            fam[key] = _convert_family(key, value)
        elif key in _CONFIG_KEYS:
            cfg[key] = _convert_config(key, value)
        else:
            raise InvalidParameterError(f"unknown configuration key {key!r}")
    try:
        return ExperimentConfig(family=FamilyParams(**fam), **cfg).validate()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParameterError):
            raise
        raise InvalidParameterError(str(exc)) from None


# -- sweeps ------------------------------------------------------------------

def approx_curve(samples, dims, methods=METHODS, max_iters=20, rel_tol=1e-8,
                 size_cap=DENSE_SIZE_CAP) -> list[ExperimentRecord]:
    """Relative error ``sum_l residual_l / sum_l ||S_l||^2`` per method and dimension."""
    m, n = samples[0].shape
    dims = [int(d) for d in dims]
    if max(dims) > min(m, n) or min(dims) < 0:
        raise InvalidParameterError(f"dimensions must lie in [0, {min(m, n)}]")
    total = float(sum(inner(S, S) for S in samples))
    records = []

    def add(method, d, value):
        records.append(ExperimentRecord(method, n, d, max(float(value), 0.0)))

    if "DCT" in methods:
        for d in dims:
            model = SubspaceModel(dct_basis(m, d, "E"), dct_basis(n, d, "F"))
            add("DCT", d, fit_value(samples, model) / total)

    if "SVD" in methods:
        if m * n * len(samples) > size_cap:
            log.warning("skipping SVD baseline: %d dense entries exceed the cap of %d",
                        m * n * len(samples), size_cap)
        else:
            for d, res in zip(dims, full_svd_baseline(samples, dims, size_cap)):
                add("SVD", d, res / total)

    if "HOSVD" in methods or "ALS" in methods:
        top = hosvd_init(samples, max(dims), max(dims), strict=False)
        for d in dims:
            init = top.truncate(d, d)
            fit = fit_value(samples, init)
            if "HOSVD" in methods:
                add("HOSVD", d, fit / total)
            if "ALS" in methods:
                init = SubspaceModel(init.E, init.F, fit, (fit,))
                model = als_fit(samples, d, d, init=init, max_iters=max_iters,
                                rel_tol=rel_tol, strict=False)
                add("ALS", d, model.fit / total)

    order = {name: i for i, name in enumerate(METHODS)}
    records.sort(key=lambda r: (order[r.method], r.dimension))
    return records


def grid_for_size(n: int) -> tuple[int, int]:
    """Most nearly square ``rows x cols`` grid with ``rows * cols == n``."""
    rows = max((r for r in range(2, math.isqrt(n) + 1) if n % r == 0), default=None)
    if rows is None:
        raise InvalidParameterError(f"size {n} cannot be laid out on a 2-D grid")
    return rows, n // rows


def time_call(fn, reps: int = 3, warmup: bool = True) -> float:
    """Median wall time of ``fn()`` over ``reps`` runs after a discarded warm-up."""
    if warmup:
        fn()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def timing_curve(sizes, methods=METHODS, reps=3, rank=10, family=FamilyParams(),
                 max_iters=20, rel_tol=1e-8, size_cap=DENSE_SIZE_CAP) -> list[ExperimentRecord]:
    """Median seconds to build a rank-``rank`` basis for ``n x n`` families."""
    records = []
    for n in sizes:
        params = dataclasses.replace(family, grid=grid_for_size(int(n)))
        samples = generate_family(params)
        r = min(rank, n)
        jobs = {
            "DCT": lambda: fit_value(samples, SubspaceModel(dct_basis(n, r, "E"),
                                                            dct_basis(n, r, "F"))),
            "SVD": lambda: full_svd_baseline(samples, [r], size_cap),
            "HOSVD": lambda: hosvd_init(samples, r, r, strict=False),
            "ALS": lambda: als_fit(samples, r, r, max_iters=max_iters, rel_tol=rel_tol,
                                   strict=False),
        }
        for method in METHODS:
            if method not in methods:
                continue
            if method == "SVD" and n * n * len(samples) > size_cap:
                log.warning("skipping SVD timing at n=%d: over the dense size cap", n)
                continue
            seconds = time_call(jobs[method], reps)
            log.info("%s n=%d: %.4f s", method, n, seconds)
            records.append(ExperimentRecord(method, int(n), r, seconds))
    return records


def load_samples(config: ExperimentConfig):
    if config.family_path:
        from .io import read_family
        return read_family(config.family_path)
    return generate_family(config.family)


def relative_gap(a: np.ndarray, b: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """``|a - b| / max(a, floor)`` elementwise."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.abs(a - b) / np.maximum(np.maximum(a, floor), np.finfo(float).tiny)
