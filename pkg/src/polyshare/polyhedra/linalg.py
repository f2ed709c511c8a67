"""Exact rational linear algebra on small dense matrices."""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm


def rref(rows):
    """Reduced row echelon form; returns ``(matrix, pivot_columns)``."""
    m = [[Fraction(x) for x in r] for r in rows]
    pivots = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        piv = m[r][c]
        m[r] = [x / piv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows) -> int:
    return len(rref(rows)[1])


def _integral(vec):
    den = 1
    for x in vec:
        den = lcm(den, Fraction(x).denominator)
    ints = [int(Fraction(x) * den) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, x)
    return [x // g for x in ints] if g > 1 else ints


def nullspace(rows, ncols: int | None = None) -> list[list[int]]:
    """Integer basis of ``{z | rows @ z = 0}``."""
    if ncols is None:
        if not rows:
            raise ValueError("column count needed for an empty matrix")
        ncols = len(rows[0])
    if not rows:
        return [[int(i == j) for j in range(ncols)] for i in range(ncols)]
    m, pivots = rref(rows)
    basis = []
    for free in range(ncols):
        if free in pivots:
            continue
        z = [Fraction(0)] * ncols
        z[free] = Fraction(1)
        for row, pc in zip(m, pivots):
            z[pc] = -row[free]
        basis.append(_integral(z))
    return basis
