"""Readers and writers for operator families, subspace models and hulls.

Every container starts with an ASCII header line and then carries its
numbers either as raw little-endian float64 (binary mode) or as
whitespace-separated decimals (text mode)::

    OPFAM1 L                      family of L operators, each one an OPF1 block
    OPF1 m n K                    K records of (alpha: m floats, beta: n floats)
    SSM1 m n I J                  E (m x I, column-major), F (n x J), fit,
                                  then ``HIST h`` and h history values
    HUL1 L I J                    L vertices (I x J, column-major), Gram (L x L)

The mode is chosen by the caller; by default ``*.txt`` paths use text mode.
"""
from __future__ import annotations

import csv
import io
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .errors import (FormatError, InconsistentDimensionError, MalformedHeaderError,
                     TruncatedPayloadError)
from .factored import FactoredOperator
from .hull import HullModel, hull_from_coeffs
from .subspace import CoeffMatrix, OrthoBasis, SubspaceModel

_F8 = np.dtype("<f8")
_TOKEN = re.compile(rb"\S+")


def _mode_for(path, mode):
    if mode is None:
        mode = "text" if Path(path).suffix == ".txt" else "binary"
    if mode not in ("binary", "text"):
        raise ValueError(f"mode must be 'binary' or 'text', got {mode!r}")
    return mode


class _Reader:
    """Sequential parser over a file's bytes, tracking the byte offset."""

    def __init__(self, data: bytes, mode: str):
        self.data = data
        self.mode = mode
        self.pos = 0
        if mode == "text":
            self.tokens = [(m.start(), m.group()) for m in _TOKEN.finditer(data)]
            self.tok = 0

    def header(self, tag: str, nfields: int, record=None) -> list[int]:
        start = self._offset()
        if self._exhausted():
            raise TruncatedPayloadError(f"file ends before the {tag} header", start, record)
        if self.mode == "binary":
            end = self.data.find(b"\n", self.pos)
            if end < 0:
                raise MalformedHeaderError(f"missing {tag} header line", start)
            parts = self.data[self.pos:end].split()
            self.pos = end + 1
        else:
            parts = [t for _, t in self.tokens[self.tok:self.tok + 1 + nfields]]
            self.tok += len(parts)
        if not parts or parts[0] != tag.encode():
            got = parts[0][:16] if parts else b""
            raise MalformedHeaderError(f"expected {tag} header, found {got!r}", start)
        if len(parts) != 1 + nfields:
            raise MalformedHeaderError(f"{tag} header needs {nfields} integer fields", start)
        try:
            vals = [int(p) for p in parts[1:]]
        except ValueError:
            raise MalformedHeaderError(f"non-integer field in {tag} header", start) from None
        if any(v < 0 for v in vals):
            raise MalformedHeaderError(f"negative field in {tag} header", start)
        return vals

    def floats(self, count: int, what: str, record=None) -> np.ndarray:
        if self.mode == "binary":
            nbytes = count * _F8.itemsize
            if self.pos + nbytes > len(self.data):
                raise TruncatedPayloadError(
                    f"truncated {what}: need {nbytes} bytes, {len(self.data) - self.pos} left",
                    self.pos, record)
            out = np.frombuffer(self.data, dtype=_F8, count=count, offset=self.pos)
            self.pos += nbytes
            return out.astype(np.float64)
        if self.tok + count > len(self.tokens):
            raise TruncatedPayloadError(
                f"truncated {what}: need {count} values, {len(self.tokens) - self.tok} left",
                self._token_offset(), record)
        chunk = self.tokens[self.tok:self.tok + count]
        try:
            out = np.array([float(t) for _, t in chunk], dtype=np.float64)
        except ValueError:
            bad = next(off for off, t in chunk if not _is_float(t))
            raise FormatError(f"non-numeric value in {what}", bad) from None
        self.tok += count
        return out

    def finish(self):
        if self.mode == "binary":
            rest = len(self.data) - self.pos
        else:
            rest = len(self.tokens) - self.tok
        if rest:
            raise FormatError("unexpected trailing data", self._offset())

    def _exhausted(self):
        if self.mode == "binary":
            return self.pos >= len(self.data)
        return self.tok >= len(self.tokens)

    def _token_offset(self):
        return self.tokens[self.tok][0] if self.tok < len(self.tokens) else len(self.data)

    def _offset(self):
        return self.pos if self.mode == "binary" else self._token_offset()


def _is_float(t: bytes) -> bool:
    try:
        float(t)
    except ValueError:
        return False
    return True


class _Writer:
    def __init__(self, mode: str):
        self.mode = mode
        self.parts: list[bytes] = []

    def header(self, tag: str, *fields: int):
        self.parts.append((" ".join([tag, *map(str, fields)]) + "\n").encode())

    def floats(self, values):
        values = np.asarray(values, dtype=np.float64).ravel(order="K")
        if self.mode == "binary":
            self.parts.append(values.astype(_F8).tobytes())
        else:
            self.parts.append((" ".join(format(float(x), ".17g") for x in values) + "\n").encode())

    def save(self, path):
        _atomic_write(path, b"".join(self.parts))


def _atomic_write(path, data: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_bytes(path) -> bytes:
    return Path(path).read_bytes()


# -- operators ---------------------------------------------------------------

def _write_op(w: _Writer, S: FactoredOperator):
    w.header("OPF1", S.m, S.n, S.rank_bound)
    for k in range(S.rank_bound):
        w.floats(S.alphas[:, k])
        w.floats(S.betas[:, k])


def _read_op(r: _Reader, index=None) -> FactoredOperator:
    start = r._offset()
    m, n, K = r.header("OPF1", 3, index)
    if m == 0 or n == 0 or K == 0:
        raise InconsistentDimensionError(f"operator needs positive m, n, K; got {m} {n} {K}", start)
    A = np.empty((m, K))
    B = np.empty((n, K))
    for k in range(K):
        rec = k if index is None else (index, k)
        A[:, k] = r.floats(m, "alpha", rec)
        B[:, k] = r.floats(n, "beta", rec)
    return FactoredOperator(A, B)


def write_operator(path, S: FactoredOperator, mode=None):
    w = _Writer(_mode_for(path, mode))
    _write_op(w, S)
    w.save(path)


def read_operator(path, mode=None) -> FactoredOperator:
    r = _Reader(_read_bytes(path), _mode_for(path, mode))
    S = _read_op(r)
    r.finish()
    return S


def write_family(path, family, mode=None):
    family = list(family)
    w = _Writer(_mode_for(path, mode))
    w.header("OPFAM1", len(family))
    for S in family:
        _write_op(w, S)
    w.save(path)


def read_family(path, mode=None) -> list[FactoredOperator]:
    r = _Reader(_read_bytes(path), _mode_for(path, mode))
    (L,) = r.header("OPFAM1", 1)
    family = []
    for l in range(L):
        start = r._offset()
        S = _read_op(r, index=l)
        if family and S.shape != family[0].shape:
            raise InconsistentDimensionError(
                f"operator {l} is {S.m}x{S.n}, family is {family[0].m}x{family[0].n}", start)
        family.append(S)
    r.finish()
    return family


# -- subspace models ---------------------------------------------------------

def write_model(path, model: SubspaceModel, mode=None):
    w = _Writer(_mode_for(path, mode))
    w.header("SSM1", model.m, model.n, model.rank_e, model.rank_f)
    w.floats(model.E.vectors.ravel(order="F"))
    w.floats(model.F.vectors.ravel(order="F"))
    w.floats([model.fit])
    w.header("HIST", len(model.history))
    w.floats(list(model.history))
    w.save(path)


def read_model(path, mode=None) -> SubspaceModel:
    r = _Reader(_read_bytes(path), _mode_for(path, mode))
    m, n, I, J = r.header("SSM1", 4)
    if I > m or J > n:
        raise InconsistentDimensionError(f"basis sizes ({I}, {J}) exceed ({m}, {n})", 0)
    E = r.floats(m * I, "E").reshape((m, I), order="F")
    F = r.floats(n * J, "F").reshape((n, J), order="F")
    (fit,) = r.floats(1, "fit")
    (h,) = r.header("HIST", 1)
    history = tuple(float(x) for x in r.floats(h, "history"))
    r.finish()
    try:
        return SubspaceModel(OrthoBasis(E, "E"), OrthoBasis(F, "F"), float(fit), history)
    except ValueError as exc:
        raise FormatError(f"stored basis is invalid: {exc}") from None


# -- hulls -------------------------------------------------------------------

def write_hull(path, hull: HullModel, mode=None):
    I, J = hull.coeff_shape
    w = _Writer(_mode_for(path, mode))
    w.header("HUL1", hull.n_vertices, I, J)
    for v in hull.vertices:
        w.floats(v.gamma.ravel(order="F"))
    w.floats(np.asarray(hull.gram).ravel(order="F"))
    w.save(path)


def read_hull(path, model: SubspaceModel | None = None, mode=None) -> HullModel:
    r = _Reader(_read_bytes(path), _mode_for(path, mode))
    L, I, J = r.header("HUL1", 3)
    if L == 0:
        raise InconsistentDimensionError("hull file has no vertices", 0)
    if model is not None and (I, J) != (model.rank_e, model.rank_f):
        raise InconsistentDimensionError(
            f"hull coefficients are {I}x{J}, model is {model.rank_e}x{model.rank_f}", 0)
    vertices = [CoeffMatrix(r.floats(I * J, "vertex", l).reshape((I, J), order="F"), l)
                for l in range(L)]
    gram = r.floats(L * L, "gram").reshape((L, L), order="F")
    r.finish()
    return hull_from_coeffs(vertices, model, gram=gram)


# -- experiment records ------------------------------------------------------

CSV_COLUMNS = ("method", "n", "dimension", "value")


def write_csv(path, records):
    """Write :class:`ExperimentRecord`-like rows with the fixed column order."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([rec.method, rec.n, rec.dimension, repr(float(rec.value))])
    _atomic_write(path, buf.getvalue().encode())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0]) != CSV_COLUMNS:
        raise FormatError(f"expected columns {CSV_COLUMNS}")
    return [dict(method=r["method"], n=int(r["n"]), dimension=int(r["dimension"]),
                 value=float(r["value"])) for r in rows]
