"""Row-level constraint normalization and Fourier-Motzkin elimination.

A system is a pair ``(eqs, ineqs)`` of tuples of integer rows; the last entry
of each row is the constant term.  ``eqs`` rows mean ``row = 0`` and ``ineqs``
rows mean ``row >= 0``.

``integer=True`` treats every column as integer-valued: inequalities are
tightened (``2x + 3 >= 0`` becomes ``x + 1 >= 0``) and equalities whose
constant is not divisible by the coefficient content are infeasible.  The
Farkas multipliers are rational, so systems that contain them are processed
with ``integer=False``.
"""

from __future__ import annotations

from functools import lru_cache
from math import gcd

Row = tuple[int, ...]
System = tuple[tuple[Row, ...], tuple[Row, ...]]


def _content(values) -> int:
    g = 0
    for v in values:
        if v:
            g = gcd(g, v)
            if g == 1:
                return 1
    return g


def _positive_lead(row: Row) -> Row:
    for x in row[:-1]:
        if x:
            return row if x > 0 else tuple(-y for y in row)
    return row


def normalize(eqs, ineqs, integer: bool = True) -> System | None:
    """Canonical form of a system, or None when it is trivially infeasible.

    Rows are reduced by their content, duplicate directions keep the tightest
    constant, opposite inequality pairs that pin a value become equalities.
    """
    out_eqs = set()
    for r in eqs:
        g = _content(r[:-1])
        c = r[-1]
        if g == 0:
            if c:
                return None
            continue
        if integer:
            if c % g:
                return None
        else:
            g = gcd(g, c)
        if g != 1:
            r = tuple(x // g for x in r)
        out_eqs.add(_positive_lead(r))

    best: dict[Row, int] = {}
    for r in ineqs:
        g = _content(r[:-1])
        c = r[-1]
        if g == 0:
            if c < 0:
                return None
            continue
        if not integer:
            g = gcd(g, c)
        key = r[:-1] if g == 1 else tuple(x // g for x in r[:-1])
        c = c // g
        prev = best.get(key)
        if prev is None or c < prev:
            best[key] = c

    if integer:
        for key in list(best):
            if key not in best:
                continue
            neg = tuple(-x for x in key)
            other = best.get(neg)
            if other is None:
                continue
            s = best[key] + other
            if s < 0:
                return None
            if s == 0:
                out_eqs.add(_positive_lead(key + (best[key],)))
                del best[key]
                del best[neg]
        # inequalities parallel to an equality are either redundant or fatal
        for e in out_eqs:
            key = e[:-1]
            neg = tuple(-x for x in key)
            if key in best:
                if best[key] - e[-1] < 0:
                    return None
                del best[key]
            if neg in best:
                if best[neg] + e[-1] < 0:
                    return None
                del best[neg]

    return tuple(sorted(out_eqs)), tuple(sorted(k + (c,) for k, c in best.items()))


def _combine(a: int, r: Row, b: int, s: Row) -> Row:
    return tuple(a * x + b * y for x, y in zip(r, s))


def eliminate(eqs, ineqs, col: int, integer: bool = True) -> tuple[System | None, bool]:
    """Project column ``col`` away.

    Returns the new (normalized) system with ``col`` zeroed in every row and a
    flag telling whether the projection is exact over the integers: it is
    whenever every combination used a unit coefficient on ``col``.
    """
    pivot_idx = None
    for idx, r in enumerate(eqs):
        if r[col] and (pivot_idx is None or abs(r[col]) < abs(eqs[pivot_idx][col])):
            pivot_idx = idx
            if abs(r[col]) == 1:
                break
    exact = True
    if pivot_idx is not None:
        p = eqs[pivot_idx]
        a = p[col]
        if abs(a) != 1:
            exact = False
        sa, aa = (1, a) if a > 0 else (-1, -a)
        new_eqs = [
            _combine(aa, r, -sa * r[col], p) if r[col] else r
            for idx, r in enumerate(eqs) if idx != pivot_idx
        ]
        new_ineqs = [_combine(aa, r, -sa * r[col], p) if r[col] else r for r in ineqs]
    else:
        pos, neg, zero = [], [], []
        for r in ineqs:
            c = r[col]
            if c > 0:
                pos.append(r)
            elif c < 0:
                neg.append(r)
            else:
                zero.append(r)
        new_ineqs = zero
        for p in pos:
            for n in neg:
                if p[col] != 1 and n[col] != -1:
                    exact = False
                new_ineqs.append(_combine(-n[col], p, p[col], n))
        new_eqs = list(eqs)
    return normalize(new_eqs, new_ineqs, integer), exact


def _pick_column(eqs, ineqs, cols) -> int:
    best, best_cost = None, None
    for c in cols:
        if any(r[c] for r in eqs):
            return c
        npos = sum(1 for r in ineqs if r[c] > 0)
        nneg = sum(1 for r in ineqs if r[c] < 0)
        cost = npos * nneg - npos - nneg
        if best is None or cost < best_cost:
            best, best_cost = c, cost
    return best


def project(system: System, cols, integer: bool = True, ordered: bool = False):
    """Eliminate every column in ``cols``; returns ``(system | None, exact)``.

    ``ordered`` keeps the given elimination order instead of the cheapest-first
    heuristic.
    """
    eqs, ineqs = system
    remaining = [c for c in cols if any(r[c] for r in eqs) or any(r[c] for r in ineqs)]
    exact = True
    while remaining:
        c = remaining[0] if ordered else _pick_column(eqs, ineqs, remaining)
        remaining.remove(c)
        res, ex = eliminate(eqs, ineqs, c, integer)
        exact = exact and ex
        if res is None:
            return None, exact
        eqs, ineqs = res
    return (eqs, ineqs), exact


@lru_cache(maxsize=200_000)
def _feasible_cached(eqs, ineqs, integer: bool) -> bool:
    if not eqs and not ineqs:
        return True
    width = len((eqs or ineqs)[0]) - 1
    res, _ = project((eqs, ineqs), range(width), integer)
    return res is not None


def feasible(eqs, ineqs, integer: bool = True) -> bool:
    """Rational feasibility (with integer tightening when ``integer``)."""
    norm = normalize(eqs, ineqs, integer)
    if norm is None:
        return False
    return _feasible_cached(norm[0], norm[1], integer)


def implicit_equalities(eqs, ineqs) -> System | None:
    """Promote every inequality that is tight on the whole (integer) system to an equality."""
    integer = True
    norm = normalize(eqs, ineqs, integer)
    if norm is None:
        return None
    eqs, ineqs = norm
    changed = True
    while changed:
        changed = False
        for r in ineqs:
            bumped = r[:-1] + (r[-1] - 1,)
            others = tuple(x for x in ineqs if x != r)
            if not feasible(eqs, others + (bumped,), integer):
                norm = normalize(eqs + (r,), others, integer)
                if norm is None:
                    return None
                eqs, ineqs = norm
                changed = True
                break
    return eqs, ineqs


def remove_redundant(eqs, ineqs) -> System | None:
    """Drop inequalities implied by the rest of the (integer) system."""
    integer = True
    norm = normalize(eqs, ineqs, integer)
    if norm is None:
        return None
    eqs, ineqs = norm
    keep = list(ineqs)
    for r in ineqs:
        rest = [x for x in keep if x != r]
        negated = tuple(-x for x in r[:-1]) + (-r[-1] - 1,)
        if not feasible(eqs, tuple(rest) + (negated,), integer):
            keep = rest
    return eqs, tuple(keep)
