"""CPLEX-LP text dump for cross-checking against external solvers.

Layout, in order: a comment header, ``Minimize`` with the objective row
``obj`` (variables ascending), ``Subject To`` with one row per constraint
(rows ascending, variables ascending within a row), ``Bounds`` with one line
per variable (ascending), ``End``. Coefficients are written with ``repr``,
the shortest string that parses back to the identical double.
"""
from __future__ import annotations

from os import PathLike
from typing import TextIO

import numpy as np

from .problem import EQ, GE, LE, LpProblem

_OPS = {LE: "<=", EQ: "=", GE: ">="}
_PER_LINE = 8


def _num(v: float) -> str:
    return repr(float(v))


def _terms(coefs, names) -> list[str]:
    out = []
    for k, (a, name) in enumerate(zip(coefs, names)):
        sign = "-" if a < 0 else "+"
        out.append(f"{sign} {_num(abs(a))} {name}")
    return out


def _emit(fh: TextIO, head: str, terms: list[str], tail: str = "") -> None:
    if not terms:
        terms = ["+ 0 " + "x_dummy"]
    lines = [" ".join(terms[i:i + _PER_LINE]) for i in range(0, len(terms), _PER_LINE)]
    fh.write(f" {head}: {lines[0]}\n")
    for line in lines[1:]:
        fh.write(f"   {line}\n")
    if tail:
        fh.write(f"   {tail}\n")


def write_lp(problem: LpProblem, dest: str | PathLike | TextIO) -> None:
    if hasattr(dest, "write"):
        _write(problem, dest)
        return
    with open(dest, "w") as fh:
        _write(problem, fh)


def _write(p: LpProblem, fh: TextIO) -> None:
    names = [p.var_name(j) for j in range(p.n_vars)]
    needs_dummy = False
    fh.write(f"\\ Problem: {p.name}\n")
    fh.write(f"\\ {p.n_vars} variables, {p.n_rows} rows, {p.vals.size} nonzeros\n")
    if p.c0:
        fh.write(f"\\ objective constant (not part of the model text): {_num(p.c0)}\n")
    fh.write("Minimize\n")
    nz = np.flatnonzero(p.c)
    needs_dummy |= nz.size == 0
    _emit(fh, "obj", _terms(p.c[nz], [names[j] for j in nz]))
    fh.write("Subject To\n")
    starts = np.searchsorted(p.rows, np.arange(p.n_rows + 1))
    for i in range(p.n_rows):
        lo, hi = starts[i], starts[i + 1]
        terms = _terms(p.vals[lo:hi], [names[j] for j in p.cols[lo:hi]])
        needs_dummy |= not terms
        _emit(fh, p.row_name(i), terms, f"{_OPS[int(p.senses[i])]} {_num(p.b[i])}")
    fh.write("Bounds\n")
    for j in range(p.n_vars):
        lo, hi = p.lb[j], p.ub[j]
        if lo == hi:
            fh.write(f" {names[j]} = {_num(lo)}\n")
        elif np.isinf(lo) and np.isinf(hi):
            fh.write(f" {names[j]} free\n")
        elif np.isinf(hi):
            fh.write(f" {names[j]} >= {_num(lo)}\n")
        elif np.isinf(lo):
            fh.write(f" -inf <= {names[j]} <= {_num(hi)}\n")
        else:
            fh.write(f" {_num(lo)} <= {names[j]} <= {_num(hi)}\n")
    if needs_dummy:
        fh.write(" x_dummy = 0\n")
    fh.write("End\n")
