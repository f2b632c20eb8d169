"""Exact linear algebra over the rationals.

Matrices are plain lists of rows.  Entries may be ``int`` or ``Fraction``;
nothing here ever touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import List, Sequence

Number = int | Fraction
Matrix = List[List[Number]]


def _integer_row(row: Sequence[Number]) -> List[int]:
    # scaling a row by a nonzero constant does not change the rank
    dens = [x.denominator for x in row if isinstance(x, Fraction) and x.denominator != 1]
    if not dens:
        return [int(x) for x in row]
    m = lcm(*dens)
    return [int(x * m) for x in row]


def rank(matrix: Sequence[Sequence[Number]]) -> int:
    """Rank over Q, computed by gcd-normalised integer elimination."""
    rows = [_integer_row(r) for r in matrix]
    rows = [r for r in rows if any(r)]
    if not rows:
        return 0
    ncols = len(rows[0])
    rk = 0
    for col in range(ncols):
        pivot = None
        for i in range(rk, len(rows)):
            if rows[i][col]:
                pivot = i
                break
        if pivot is None:
            continue
        rows[rk], rows[pivot] = rows[pivot], rows[rk]
        p = rows[rk]
        pv = p[col]
        for i in range(rk + 1, len(rows)):
            r = rows[i]
            c = r[col]
            if not c:
                continue
            new = [pv * a - c * b for a, b in zip(r, p)]
            g = 0
            for x in new:
                if x:
                    g = gcd(g, x)
                    if g == 1:
                        break
            if g > 1:
                new = [x // g for x in new]
            rows[i] = new
        rk += 1
        if rk == len(rows):
            break
    return rk


def rref(matrix: Sequence[Sequence[Number]]) -> tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form with Fraction entries, plus pivot columns."""
    rows = [[Fraction(x) for x in r] for r in matrix]
    pivots: List[int] = []
    if not rows:
        return rows, pivots
    ncols = len(rows[0])
    rk = 0
    for col in range(ncols):
        pivot = next((i for i in range(rk, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[rk], rows[pivot] = rows[pivot], rows[rk]
        pv = rows[rk][col]
        rows[rk] = [x / pv for x in rows[rk]]
        for i in range(len(rows)):
            if i != rk and rows[i][col] != 0:
                c = rows[i][col]
                rows[i] = [a - c * b for a, b in zip(rows[i], rows[rk])]
        pivots.append(col)
        rk += 1
        if rk == len(rows):
            break
    return rows[:rk], pivots


def nullspace(matrix: Sequence[Sequence[Number]], ncols: int) -> List[List[Fraction]]:
    """Basis of the right kernel, one vector per free column."""
    if not matrix:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    reduced, pivots = rref(matrix)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for row, pc in zip(reduced, pivots):
            vec[pc] = -row[free]
        basis.append(vec)
    return basis


def matmul(a: Sequence[Sequence[Number]], b: Sequence[Sequence[Number]]) -> Matrix:
    cols = list(zip(*b)) if b else []
    return [[sum(x * y for x, y in zip(row, col)) for col in cols] for row in a]
