"""Smallest-norm integer point of a coefficient space inside a box."""

from __future__ import annotations

from math import ceil, floor

from . import fm
from .sets import ConvexPolyhedron

DEFAULT_BOUND = 3


def _prefix_systems(piece: ConvexPolyhedron):
    n = piece.space.width
    system = fm.normalize(piece.eqs, piece.ineqs)
    if system is None:
        return None
    proj = [None] * n
    proj[n - 1] = system
    for k in range(n - 1, 0, -1):
        res, _ = fm.eliminate(proj[k][0], proj[k][1], k)
        if res is None:
            return None
        proj[k - 1] = res
    if not fm.feasible(*proj[0]):
        return None
    return proj


def _interval(proj_k, values, k, bound):
    lo, hi = -bound, bound
    eqs, ineqs = proj_k
    for r in eqs:
        rest = r[-1] + sum(r[j] * values[j] for j in range(k))
        a = r[k]
        if a == 0:
            if rest:
                return 1, 0
            continue
        if rest % a:
            return 1, 0
        v = -rest // a
        lo, hi = max(lo, v), min(hi, v)
    for r in ineqs:
        rest = r[-1] + sum(r[j] * values[j] for j in range(k))
        a = r[k]
        if a == 0:
            if rest < 0:
                return 1, 0
        elif a > 0:
            lo = max(lo, ceil(-rest / a) if rest % a else -rest // a)
        else:
            hi = min(hi, floor(rest / -a) if rest % -a else rest // -a)
    return lo, hi


def _search(piece: ConvexPolyhedron, bound: int, norm_cap: int | None):
    """Best (norm, values) inside the box for one piece, or None."""
    n = piece.space.width
    if n == 0:
        return (0, ()) if fm.feasible(piece.eqs, piece.ineqs) else None
    proj = _prefix_systems(piece)
    if proj is None:
        return None
    values = [0] * n
    hit = []

    def rec(k, budget):
        lo, hi = _interval(proj[k], values, k, bound)
        lo, hi = max(lo, -budget), min(hi, budget)
        if k == n - 1:
            for v in (-budget, budget):
                if lo <= v <= hi:
                    values[k] = v
                    hit.append(tuple(values))
                    return True
            return False
        for v in range(lo, hi + 1):
            values[k] = v
            if rec(k + 1, budget - abs(v)):
                return True
        values[k] = 0
        return False

    cap = n * bound if norm_cap is None else min(norm_cap, n * bound)
    for t in range(cap + 1):
        if rec(0, t):
            return t, hit[0]
    return None


def sample_point(c, bound: int = DEFAULT_BOUND) -> dict[str, int] | None:
    """Member with entries in ``[-bound, bound]`` minimizing the L1 norm.

    Ties are broken by the lexicographically smallest vector in the space's
    variable order.  Returns None if the box holds no member.
    """
    if bound < 1:
        raise ValueError("sampling bound must be at least 1")
    pieces = [c] if isinstance(c, ConvexPolyhedron) else list(c.pieces)
    best = None
    for p in pieces:
        found = _search(p, bound, None if best is None else best[0])
        if found is not None and (best is None or found < best):
            best = found
    if best is None:
        return None
    space = pieces[0].space
    return dict(zip(space.names, best[1]))

