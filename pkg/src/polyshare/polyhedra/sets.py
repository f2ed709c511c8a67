"""Convex integer polyhedra and finite unions of them."""

from __future__ import annotations

from math import ceil, floor
from typing import Iterable, Mapping, Sequence

from . import fm
from .affine import AffineExpr, SpaceMismatchError, VarSpace

#: parameters are assumed to be at least this value in symbolic tests
DEFAULT_PARAM_MIN = 1


class EnumerationError(ValueError):
    """Raised when a set cannot be enumerated (unbound parameter, unbounded variable)."""


def ge(a, b=0) -> AffineExpr:
    """Constraint ``a >= b`` as the expression ``a - b`` (meaning ``>= 0``)."""
    return AffineExpr.lift(a) - AffineExpr.lift(b)


def le(a, b=0) -> AffineExpr:
    return AffineExpr.lift(b) - AffineExpr.lift(a)


def lt(a, b=0) -> AffineExpr:
    """Strict ``a < b`` stored as ``b - a - 1 >= 0``."""
    return AffineExpr.lift(b) - AffineExpr.lift(a) - 1


def gt(a, b=0) -> AffineExpr:
    return AffineExpr.lift(a) - AffineExpr.lift(b) - 1


def eq(a, b=0) -> AffineExpr:
    return AffineExpr.lift(a) - AffineExpr.lift(b)


def _as_row(space: VarSpace, c) -> tuple[int, ...]:
    if isinstance(c, AffineExpr):
        return c.to_row(space)
    row = tuple(c)
    if len(row) != space.width + 1:
        raise ValueError(f"row of width {len(row)} does not fit space {space}")
    return row


def param_rows(space: VarSpace, param_min: int | None) -> tuple[tuple[int, ...], ...]:
    if param_min is None:
        return ()
    rows = []
    for p in space.params:
        r = [0] * (space.width + 1)
        r[space.column(p)] = 1
        r[-1] = -param_min
        rows.append(tuple(r))
    return tuple(rows)


_EMPTY_SYSTEM = ((), ((-1,),))


class ConvexPolyhedron:
    """Conjunction of affine equalities (``= 0``) and inequalities (``>= 0``).

    Constraints are integer-normalized at construction, so a strict ``a < b``
    is only ever stored as ``b - a - 1 >= 0``.
    """

    __slots__ = ("space", "eqs", "ineqs", "_trivially_empty", "_hash")

    def __init__(self, space: VarSpace, equalities: Iterable = (), inequalities: Iterable = ()):
        self.space = space
        eqs = [_as_row(space, e) for e in equalities]
        ineqs = [_as_row(space, e) for e in inequalities]
        norm = fm.normalize(eqs, ineqs, integer=True)
        if norm is None:
            width = space.width + 1
            self.eqs = ()
            self.ineqs = ((0,) * (width - 1) + (-1,),)
            self._trivially_empty = True
        else:
            self.eqs, self.ineqs = norm
            self._trivially_empty = False
        self._hash = None

    @classmethod
    def universe(cls, space: VarSpace) -> ConvexPolyhedron:
        return cls(space)

    @classmethod
    def from_text(cls, space: VarSpace, text: str) -> ConvexPolyhedron:
        from .text import parse_constraints

        eqs, ineqs = parse_constraints(text, allowed=set(space.names))
        return cls(space, eqs, ineqs)

    @property
    def equalities(self) -> list[AffineExpr]:
        return [AffineExpr.from_row(self.space, r) for r in self.eqs]

    @property
    def inequalities(self) -> list[AffineExpr]:
        return [AffineExpr.from_row(self.space, r) for r in self.ineqs]

    @property
    def system(self):
        return self.eqs, self.ineqs

    def is_universe(self) -> bool:
        return not self.eqs and not self.ineqs

    def constrain(self, equalities: Iterable = (), inequalities: Iterable = ()) -> ConvexPolyhedron:
        eqs = list(self.eqs) + [_as_row(self.space, e) for e in equalities]
        ineqs = list(self.ineqs) + [_as_row(self.space, e) for e in inequalities]
        return ConvexPolyhedron(self.space, eqs, ineqs)

    def intersect(self, other: ConvexPolyhedron) -> ConvexPolyhedron:
        _check_space(self.space, other.space)
        return ConvexPolyhedron(self.space, self.eqs + other.eqs, self.ineqs + other.ineqs)

    def is_empty(self, param_min: int | None = DEFAULT_PARAM_MIN) -> bool:
        if self._trivially_empty:
            return True
        return not fm.feasible(self.eqs, self.ineqs + param_rows(self.space, param_min))

    def contains(self, point: Mapping[str, int] | Sequence[int]) -> bool:
        values = self._point_values(point)
        for r in self.eqs:
            if sum(a * v for a, v in zip(r, values)) + r[-1] != 0:
                return False
        for r in self.ineqs:
            if sum(a * v for a, v in zip(r, values)) + r[-1] < 0:
                return False
        return True

    def _point_values(self, point):
        if isinstance(point, Mapping):
            return [point[n] for n in self.space.names]
        values = list(point)
        if len(values) != self.space.width:
            raise ValueError(f"point {point} does not match space {self.space}")
        return values

    def embed(self, space: VarSpace, rename: Mapping[str, str] | None = None) -> ConvexPolyhedron:
        """Re-express in ``space``; every (renamed) column must exist there."""
        rename = rename or {}
        cols = [space.column(rename.get(n, n)) for n in self.space.names]

        def move(r):
            out = [0] * (space.width + 1)
            for c, a in zip(cols, r):
                out[c] += a
            out[-1] = r[-1]
            return tuple(out)

        return ConvexPolyhedron(space, [move(r) for r in self.eqs], [move(r) for r in self.ineqs])

    def substitute_params(self, binding: Mapping[str, int]) -> ConvexPolyhedron:
        """Fix parameters to values; the result lives over the iteration variables only."""
        missing = [p for p in self.space.params if p not in binding]
        if missing:
            raise EnumerationError(f"no binding for parameter(s) {', '.join(missing)}")
        space = VarSpace(self.space.iteration_vars)
        n = self.space.n_vars
        vals = [binding[p] for p in self.space.params]

        def fix(r):
            const = r[-1] + sum(a * v for a, v in zip(r[n:-1], vals))
            return r[:n] + (const,)

        return ConvexPolyhedron(space, [fix(r) for r in self.eqs], [fix(r) for r in self.ineqs])

    def project_out(self, names: Iterable[str]) -> tuple[ConvexPolyhedron, bool]:
        """Existentially quantify ``names``; returns the projection and an exactness flag."""
        names = list(names)
        space = VarSpace(
            [v for v in self.space.iteration_vars if v not in names],
            [p for p in self.space.params if p not in names],
        )
        if self._trivially_empty:
            return ConvexPolyhedron(space, [], [(0,) * space.width + (-1,)]), True
        cols = [self.space.column(n) for n in names]
        res, exact = fm.project(self.system, cols)
        if res is None:
            return ConvexPolyhedron(space, [], [(0,) * space.width + (-1,)]), exact
        keep = [i for i in range(self.space.width) if i not in cols] + [self.space.width]
        eqs = [tuple(r[i] for i in keep) for r in res[0]]
        ineqs = [tuple(r[i] for i in keep) for r in res[1]]
        return ConvexPolyhedron(space, eqs, ineqs), exact

    def with_implicit_equalities(self) -> ConvexPolyhedron:
        if self._trivially_empty:
            return self
        pr = param_rows(self.space, DEFAULT_PARAM_MIN)
        res = fm.implicit_equalities(self.eqs, self.ineqs + pr)
        if res is None:
            return ConvexPolyhedron(self.space, [], [(0,) * self.space.width + (-1,)])
        # the parameter floor rows are context, not part of the set
        ineqs = [r for r in res[1] if r not in pr]
        return ConvexPolyhedron(self.space, res[0], ineqs)

    def without_redundancy(self) -> ConvexPolyhedron:
        if self._trivially_empty:
            return self
        res = fm.remove_redundant(self.eqs, self.ineqs)
        if res is None:
            return ConvexPolyhedron(self.space, [], [(0,) * self.space.width + (-1,)])
        return ConvexPolyhedron(self.space, *res)

    def dump(self) -> str:
        lines = [f"{e} = 0" for e in self.equalities]
        lines += [f"{e} >= 0" for e in self.inequalities]
        return "\n".join(lines) if lines else "true"

    def __eq__(self, other):
        if not isinstance(other, ConvexPolyhedron):
            return NotImplemented
        return self.space == other.space and self.eqs == other.eqs and self.ineqs == other.ineqs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.space, self.eqs, self.ineqs))
        return self._hash

    def __repr__(self):
        body = "; ".join(self.dump().splitlines())
        return f"ConvexPolyhedron({self.space}: {body})"


def _check_space(a: VarSpace, b: VarSpace):
    if a != b:
        raise SpaceMismatchError(f"space mismatch: {a} vs {b}")


class PolySet:
    """Finite union of convex polyhedra over one space.  No pieces == empty set."""

    __slots__ = ("space", "pieces")

    def __init__(self, space: VarSpace, pieces: Iterable[ConvexPolyhedron] = ()):
        self.space = space
        out = []
        seen = set()
        for p in pieces:
            _check_space(space, p.space)
            if p._trivially_empty or p in seen:
                continue
            seen.add(p)
            out.append(p)
        self.pieces = tuple(out)

    @classmethod
    def universe(cls, space: VarSpace) -> PolySet:
        return cls(space, [ConvexPolyhedron(space)])

    @classmethod
    def empty(cls, space: VarSpace) -> PolySet:
        return cls(space, [])

    @classmethod
    def of(cls, piece: ConvexPolyhedron) -> PolySet:
        return cls(piece.space, [piece])

    @classmethod
    def from_text(cls, space: VarSpace, text: str) -> PolySet:
        """Pieces separated by ``|``, constraints inside a piece by ``,`` or ``and``."""
        return cls(space, [ConvexPolyhedron.from_text(space, t) for t in text.split("|")])

    def contains(self, point) -> bool:
        return any(p.contains(point) for p in self.pieces)

    def is_empty(self, param_min: int | None = DEFAULT_PARAM_MIN) -> bool:
        return all(p.is_empty(param_min) for p in self.pieces)

    def drop_empty(self, param_min: int | None = DEFAULT_PARAM_MIN) -> PolySet:
        return PolySet(self.space, [p for p in self.pieces if not p.is_empty(param_min)])

    def embed(self, space: VarSpace, rename: Mapping[str, str] | None = None) -> PolySet:
        return PolySet(space, [p.embed(space, rename) for p in self.pieces])

    def constrain(self, equalities: Iterable = (), inequalities: Iterable = ()) -> PolySet:
        equalities, inequalities = list(equalities), list(inequalities)
        return PolySet(self.space, [p.constrain(equalities, inequalities) for p in self.pieces])

    def union(self, other: PolySet) -> PolySet:
        _check_space(self.space, other.space)
        return PolySet(self.space, self.pieces + other.pieces)

    def project_out(self, names: Iterable[str]) -> tuple[PolySet, bool]:
        names = list(names)
        exact = True
        pieces = []
        space = None
        for p in self.pieces:
            q, ex = p.project_out(names)
            exact = exact and ex
            space = q.space
            pieces.append(q)
        if space is None:
            space = VarSpace(
                [v for v in self.space.iteration_vars if v not in names],
                [v for v in self.space.params if v not in names],
            )
        return PolySet(space, pieces), exact

    def dump(self) -> str:
        if not self.pieces:
            return "false"
        if len(self.pieces) == 1:
            return self.pieces[0].dump()
        blocks = []
        for k, p in enumerate(self.pieces):
            blocks.append(f"# piece {k}\n{p.dump()}")
        return "\n".join(blocks)

    def __eq__(self, other):
        if not isinstance(other, PolySet):
            return NotImplemented
        return self.space == other.space and set(self.pieces) == set(other.pieces)

    def __hash__(self):
        return hash((self.space, frozenset(self.pieces)))

    def __len__(self):
        return len(self.pieces)

    def __iter__(self):
        return iter(self.pieces)

    def __repr__(self):
        return f"PolySet({self.space}, {len(self.pieces)} piece(s))"


def _lift_set(x) -> PolySet:
    if isinstance(x, ConvexPolyhedron):
        return PolySet.of(x)
    return x


def intersect(a, b, param_min: int | None = DEFAULT_PARAM_MIN) -> PolySet:
    """Pointwise intersection; empty pieces are dropped."""
    a, b = _lift_set(a), _lift_set(b)
    _check_space(a.space, b.space)
    pieces = []
    for p in a.pieces:
        for q in b.pieces:
            r = p.intersect(q)
            if not r.is_empty(param_min):
                pieces.append(r)
    return PolySet(a.space, pieces)


def _negate(row):
    return tuple(-x for x in row[:-1]) + (-row[-1] - 1,)


def _subtract_convex(p: ConvexPolyhedron, q: ConvexPolyhedron, param_min) -> list[ConvexPolyhedron]:
    # complement of q split into disjoint parts: c1 & ... & c(j-1) & not cj
    constraints = []
    for e in q.eqs:
        constraints.append(e)
        constraints.append(tuple(-x for x in e))
    constraints.extend(q.ineqs)
    out = []
    cur = p
    for c in constraints:
        part = cur.constrain(inequalities=[_negate(c)])
        if not part.is_empty(param_min):
            out.append(part)
        cur = cur.constrain(inequalities=[c])
        if cur.is_empty(param_min):
            break
    return out


def subtract(a, b, param_min: int | None = DEFAULT_PARAM_MIN) -> PolySet:
    """Pointwise set difference ``a \\ b``."""
    a, b = _lift_set(a), _lift_set(b)
    _check_space(a.space, b.space)
    pieces = [p for p in a.pieces if not p.is_empty(param_min)]
    for q in b.pieces:
        if q.is_empty(param_min):
            continue
        nxt = []
        for p in pieces:
            if p.intersect(q).is_empty(param_min):
                nxt.append(p)
            else:
                nxt.extend(_subtract_convex(p, q, param_min))
        pieces = nxt
    return PolySet(a.space, pieces)


def is_empty(p, param_min: int | None = DEFAULT_PARAM_MIN) -> bool:
    """Rational emptiness (after integer tightening), with parameters floored at ``param_min``."""
    return _lift_set(p).is_empty(param_min)


def _enumerate_piece(piece: ConvexPolyhedron, names: tuple[str, ...]) -> list[tuple[int, ...]]:
    n = len(names)
    if piece._trivially_empty:
        return []
    if n == 0:
        return [()] if fm.feasible(piece.eqs, piece.ineqs) else []
    # proj[k]: system over columns 0..k with the later columns eliminated
    proj = [None] * n
    system = fm.normalize(piece.eqs, piece.ineqs)
    if system is None:
        return []
    proj[n - 1] = system
    for k in range(n - 1, 0, -1):
        res, _ = fm.eliminate(proj[k][0], proj[k][1], k)
        if res is None:
            return []
        proj[k - 1] = res
    if not fm.feasible(*proj[0]):
        return []

    points = []
    values = [0] * n

    def bounds(k):
        lo, hi = None, None
        eqs, ineqs = proj[k]
        for r in eqs:
            rest = r[-1] + sum(r[j] * values[j] for j in range(k))
            a = r[k]
            if a == 0:
                if rest != 0:
                    return 1, 0
                continue
            if rest % a:
                return 1, 0
            v = -rest // a
            lo = v if lo is None else max(lo, v)
            hi = v if hi is None else min(hi, v)
        for r in ineqs:
            rest = r[-1] + sum(r[j] * values[j] for j in range(k))
            a = r[k]
            if a == 0:
                if rest < 0:
                    return 1, 0
                continue
            if a > 0:
                v = ceil(-rest / a) if rest % a else -rest // a
                lo = v if lo is None else max(lo, v)
            else:
                v = floor(rest / -a) if rest % -a else rest // -a
                hi = v if hi is None else min(hi, v)
        if lo is None or hi is None:
            raise EnumerationError(f"variable {names[k]!r} is unbounded")
        return lo, hi

    def rec(k):
        lo, hi = bounds(k)
        for v in range(lo, hi + 1):
            values[k] = v
            if k == n - 1:
                points.append(tuple(values))
            else:
                rec(k + 1)

    rec(0)
    return points


def enumerate_points(p, binding: Mapping[str, int] | None = None) -> list[tuple[int, ...]]:
    """All integer points (iteration-variable tuples), duplicate-free and sorted."""
    p = _lift_set(p)
    binding = binding or {}
    names = p.space.iteration_vars
    out = set()
    for piece in p.pieces:
        fixed = piece.substitute_params(binding)
        out.update(_enumerate_piece(fixed, names))
    return sorted(out)


def count_points(p, binding: Mapping[str, int] | None = None) -> int:
    return len(enumerate_points(p, binding))


def lex_less(left: Sequence[AffineExpr], right: Sequence[AffineExpr], space: VarSpace) -> PolySet:
    """Pieces encoding ``left <_lex right`` (one piece per strict depth)."""
    if len(left) != len(right):
        raise ValueError("lexicographic comparison of vectors of different lengths")
    pieces = []
    prefix = []
    for a, b in zip(left, right):
        d = b - a
        if d.is_constant():
            if d.constant > 0:
                pieces.append(ConvexPolyhedron(space, prefix, []))
                break
            if d.constant < 0:
                break
            continue
        pieces.append(ConvexPolyhedron(space, prefix, [d - 1]))
        prefix = prefix + [d]
    return PolySet(space, pieces)
