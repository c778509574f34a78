"""Sparse linear programs in bounded form: ``min c.x`` s.t. row senses and variable bounds."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = -1, 0, 1
_SENSE_CODES = {"<=": LE, "<": LE, "L": LE, "=": EQ, "==": EQ, "E": EQ, ">=": GE, ">": GE, "G": GE}


def sense_code(sense) -> int:
    if isinstance(sense, (int, np.integer)) and int(sense) in (LE, EQ, GE):
        return int(sense)
    try:
        return _SENSE_CODES[sense]
    except KeyError:
        raise ValueError(f"unknown row sense {sense!r}") from None


@dataclass(frozen=True)
class NameBlock:
    """Names for a contiguous block of variables or rows, generated on demand."""

    name: str
    start: int
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=int)) if self.shape else 1

    def label(self, k: int) -> str:
        if not self.shape:
            return self.name
        idx = np.unravel_index(k - self.start, self.shape)
        return self.name + "".join(f"_{i}" for i in idx)


def _label(blocks: Sequence[NameBlock], k: int, prefix: str) -> str:
    lo, hi = 0, len(blocks)
    while lo < hi:
        mid = (lo + hi) // 2
        if blocks[mid].start + blocks[mid].size <= k:
            lo = mid + 1
        else:
            hi = mid
    if lo < len(blocks) and blocks[lo].start <= k:
        return blocks[lo].label(k)
    return f"{prefix}{k}"


@dataclass(frozen=True, eq=False)
class LpProblem:
    """``min c.x + c0`` subject to ``A x (<=,=,>=) b`` and ``lb <= x <= ub``.

    ``A`` is held as row-major triples (``rows``, ``cols``, ``vals``) with
    duplicates summed and explicit zeros dropped.
    """

    c: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c0: float = 0.0
    var_blocks: tuple[NameBlock, ...] = ()
    row_blocks: tuple[NameBlock, ...] = ()
    name: str = "lp"

    def __post_init__(self):
        n, m = len(self.c), len(self.b)
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        vals = np.asarray(self.vals, dtype=float)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("matrix triples must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
            raise ValueError("matrix index out of range")
        for key, size in (("lb", n), ("ub", n), ("senses", m)):
            if len(getattr(self, key)) != size:
                raise ValueError(f"{key} has length {len(getattr(self, key))}, expected {size}")
        coo = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
        coo.sum_duplicates()
        coo.eliminate_zeros()
        coo = coo.tocoo()
        order = np.lexsort((coo.col, coo.row))
        senses = np.asarray(self.senses)
        if senses.dtype.kind in "USO":
            senses = np.array([sense_code(s) for s in senses.tolist()], dtype=np.int8)
        senses = senses.astype(np.int8)
        if not np.all(np.isin(senses, (LE, EQ, GE))):
            raise ValueError("row senses must be -1, 0 or 1")
        lb = np.asarray(self.lb, dtype=float)
        ub = np.asarray(self.ub, dtype=float)
        if np.any(lb > ub):
            bad = int(np.flatnonzero(lb > ub)[0])
            raise ValueError(f"lower bound exceeds upper bound for {self.var_name(bad)}")
        arrays = dict(
            c=np.asarray(self.c, dtype=float), rows=coo.row[order].astype(np.int64),
            cols=coo.col[order].astype(np.int64), vals=coo.data[order], senses=senses,
            b=np.asarray(self.b, dtype=float), lb=lb, ub=ub,
        )
        for key, arr in arrays.items():
            arr = np.array(arr)
            arr.setflags(write=False)
            object.__setattr__(self, key, arr)

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.b)

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.n_rows, self.n_vars))

    def var_name(self, j: int) -> str:
        return _label(self.var_blocks, j, "x")

    def row_name(self, i: int) -> str:
        return _label(self.row_blocks, i, "r")

    def objective_value(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float) + self.c0)

    def with_objective(self, c, c0: float = 0.0) -> "LpProblem":
        c = np.asarray(c, dtype=float)
        if c.shape != self.c.shape:
            raise ValueError("objective vector has wrong length")
        return replace(self, c=c, c0=float(c0))

    def with_bounds(self, lb=None, ub=None) -> "LpProblem":
        return replace(self, lb=self.lb if lb is None else lb, ub=self.ub if ub is None else ub)

    def add_row(self, coefs, sense, rhs: float, name: str = "extra") -> "LpProblem":
        """Return a copy with one more row ``coefs . x (sense) rhs``."""
        coefs = np.asarray(coefs, dtype=float)
        if coefs.shape != self.c.shape:
            raise ValueError("row coefficient vector has wrong length")
        nz = np.flatnonzero(coefs)
        m = self.n_rows
        return replace(
            self,
            rows=np.concatenate([self.rows, np.full(nz.size, m)]),
            cols=np.concatenate([self.cols, nz]),
            vals=np.concatenate([self.vals, coefs[nz]]),
            senses=np.concatenate([self.senses, [sense_code(sense)]]),
            b=np.concatenate([self.b, [float(rhs)]]),
            row_blocks=self.row_blocks + (NameBlock(name, m, ()),),
        )

    def fingerprint(self) -> str:
        """SHA-256 over the exact problem data (names excluded)."""
        h = hashlib.sha256()
        for arr in (self.c, self.rows, self.cols, self.vals, self.senses, self.b, self.lb, self.ub):
            h.update(np.ascontiguousarray(arr).tobytes())
            h.update(b"|")
        h.update(repr(float(self.c0)).encode())
        return h.hexdigest()


@dataclass
class LpBuilder:
    """Incremental, vectorized assembly of an :class:`LpProblem`.

    Variables and rows are added in named blocks of arbitrary shape;
    ``add_rows`` takes ``(coef, index)`` terms that broadcast against the
    block shape, so a whole family of constraints is one call.
    """

    name: str = "lp"
    _lb: list = field(default_factory=list)
    _ub: list = field(default_factory=list)
    _rows: list = field(default_factory=list)
    _cols: list = field(default_factory=list)
    _vals: list = field(default_factory=list)
    _senses: list = field(default_factory=list)
    _rhs: list = field(default_factory=list)
    _var_blocks: list = field(default_factory=list)
    _row_blocks: list = field(default_factory=list)
    n_vars: int = 0
    n_rows: int = 0

    def add_vars(self, name: str, shape=(), lb=0.0, ub=np.inf) -> np.ndarray:
        shape = (int(shape),) if isinstance(shape, (int, np.integer)) else tuple(shape)
        size = int(np.prod(shape, dtype=int)) if shape else 1
        idx = np.arange(self.n_vars, self.n_vars + size).reshape(shape)
        self._lb.append(np.broadcast_to(np.asarray(lb, dtype=float), shape).ravel())
        self._ub.append(np.broadcast_to(np.asarray(ub, dtype=float), shape).ravel())
        self._var_blocks.append(NameBlock(name, self.n_vars, shape))
        self.n_vars += size
        return idx

    def add_rows(self, name: str, terms, sense, rhs=0.0) -> np.ndarray:
        arrays = [np.asarray(rhs, dtype=float)]
        for coef, idx in terms:
            arrays += [np.asarray(coef, dtype=float), np.asarray(idx)]
        shape = np.broadcast_shapes(*(a.shape for a in arrays))
        size = int(np.prod(shape, dtype=int)) if shape else 1
        row_idx = np.arange(self.n_rows, self.n_rows + size).reshape(shape)
        for coef, idx in terms:
            coef = np.broadcast_to(np.asarray(coef, dtype=float), shape).ravel()
            cols = np.broadcast_to(np.asarray(idx, dtype=np.int64), shape).ravel()
            keep = coef != 0.0
            self._rows.append(row_idx.ravel()[keep])
            self._cols.append(cols[keep])
            self._vals.append(coef[keep])
        self._senses.append(np.full(size, sense_code(sense), dtype=np.int8))
        self._rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), shape).ravel())
        self._row_blocks.append(NameBlock(name, self.n_rows, shape))
        self.n_rows += size
        return row_idx

    def build(self, c=None, c0: float = 0.0) -> LpProblem:
        def cat(parts, dtype=float):
            return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

        c = np.zeros(self.n_vars) if c is None else np.asarray(c, dtype=float)
        return LpProblem(
            c=c, rows=cat(self._rows, np.int64), cols=cat(self._cols, np.int64), vals=cat(self._vals),
            senses=cat(self._senses, np.int8), b=cat(self._rhs), lb=cat(self._lb), ub=cat(self._ub),
            c0=c0, var_blocks=tuple(self._var_blocks), row_blocks=tuple(self._row_blocks), name=self.name,
        )


def from_dense(c, A, senses, b, lb=None, ub=None, c0: float = 0.0) -> LpProblem:
    """Convenience constructor for small problems given as dense arrays."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape if A.size else (len(b), len(c))
    rr, cc = np.nonzero(A) if A.size else (np.zeros(0, int), np.zeros(0, int))
    return LpProblem(
        c=np.asarray(c, dtype=float), rows=rr, cols=cc, vals=A[rr, cc] if A.size else np.zeros(0),
        senses=np.array([sense_code(s) for s in senses], dtype=np.int8), b=np.asarray(b, dtype=float),
        lb=np.zeros(n) if lb is None else np.asarray(lb, dtype=float),
        ub=np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float), c0=c0,
    )
