"""Dependences and I/O sharing opportunities between block accesses.

For every ordered pair of accesses to one array, the extent is the set of
instance pairs ``(x, x')`` touching the same block with ``x`` executing first
in the original program.  Extents are pruned so that only consecutive
accesses remain (no write to the block in between), and sharing
opportunities are narrowed to one-one form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .ir import READ, WRITE, Access, Program, original_order_vectors
from .polyhedra import (
    AffineExpr,
    ConvexPolyhedron,
    PolySet,
    VarSpace,
    enumerate_points,
    lex_less,
    subtract,
)
from .polyhedra import fm
from .polyhedra.linalg import rank, rref

log = logging.getLogger(__name__)

DEPENDENCE, OPPORTUNITY = "dependence", "opportunity"
ONE_ONE, ONE_MANY, MANY_ONE, MANY_MANY = "one-one", "one-many", "many-one", "many-many"

ROLES = {
    ("R", "W"): frozenset({DEPENDENCE}),
    ("R", "R"): frozenset({OPPORTUNITY}),
    ("W", "R"): frozenset({DEPENDENCE, OPPORTUNITY}),
    ("W", "W"): frozenset({DEPENDENCE, OPPORTUNITY}),
}

#: offsets tried when pairing free variables of a many-many opportunity
PAIRING_OFFSETS = (0, 1, -1, 2, -2, 3, -3)


class IrreducibleError(ValueError):
    """An opportunity whose multiplicity cannot be reduced to one-one."""


def prime(name: str, times: int = 1) -> str:
    return name + "'" * times


@dataclass(frozen=True)
class ProductSpace:
    """Column layout ``(x, x')`` for a pair of statements; ``x'`` names are primed."""

    space: VarSpace
    src_vars: Mapping[str, str]
    tgt_vars: Mapping[str, str]

    @classmethod
    def of(cls, program: Program, src_stmt: str, tgt_stmt: str) -> "ProductSpace":
        s, t = program.statement(src_stmt), program.statement(tgt_stmt)
        src = {v: v for v in s.loop_vars}
        tgt = {v: prime(v) for v in t.loop_vars}
        space = VarSpace(tuple(src.values()) + tuple(tgt.values()), program.params)
        return cls(space, src, tgt)

    @property
    def src_cols(self) -> tuple[str, ...]:
        return tuple(self.src_vars.values())

    @property
    def tgt_cols(self) -> tuple[str, ...]:
        return tuple(self.tgt_vars.values())


@dataclass(frozen=True)
class SharingRelation:
    source: Access
    target: Access
    roles: frozenset
    extent: PolySet
    pspace: ProductSpace
    multiplicity: str | None = None
    original_extent: PolySet | None = field(default=None, compare=False)

    @property
    def id(self) -> str:
        return f"{self.source.id}->{self.target.id}"

    @property
    def kind(self) -> str:
        return f"{self.source.kind}->{self.target.kind}"

    @property
    def is_self(self) -> bool:
        return self.source.stmt == self.target.stmt

    @property
    def is_dependence(self) -> bool:
        return DEPENDENCE in self.roles

    @property
    def is_opportunity(self) -> bool:
        return OPPORTUNITY in self.roles

    def pairs(self, binding: Mapping[str, int]) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        """Enumerated ``(x, x')`` instance pairs under a binding."""
        n = len(self.pspace.src_vars)
        return [(p[:n], p[n:]) for p in enumerate_points(self.extent, binding)]

    def __repr__(self):
        return f"SharingRelation({self.id}, {sorted(self.roles)}, {self.multiplicity})"


def co_accesses(program: Program) -> list[tuple[Access, Access]]:
    """Ordered pairs of accesses to one array, self pairs included."""
    return [(a, b) for a in program.accesses for b in program.accesses if a.array == b.array]


def _instance_vectors(program: Program, access: Access, rename: Mapping[str, str], slot: int | None):
    vec = [e.rename(rename) for e in original_order_vectors(program)[access.stmt]]
    if slot is not None:
        vec.append(AffineExpr.const(slot))
    return vec


def _access_slot(access: Access) -> int:
    # a statement instance performs its reads before its write
    return 1 if access.is_write else 0


def extent(program: Program, src: Access, tgt: Access) -> tuple[PolySet, ProductSpace]:
    """Instance pairs with equal block subscripts, both guards true, source first."""
    ps = ProductSpace.of(program, src.stmt, tgt.stmt)
    space = ps.space
    pm = program.param_min
    src_guard = src.guard.embed(space, ps.src_vars)
    tgt_guard = tgt.guard.embed(space, ps.tgt_vars)
    same_block = [a.rename(ps.src_vars) - b.rename(ps.tgt_vars) for a, b in zip(src.phi, tgt.phi)]
    order = lex_less(
        _instance_vectors(program, src, ps.src_vars, None),
        _instance_vectors(program, tgt, ps.tgt_vars, None),
        space,
    )
    pieces = []
    for g in src_guard.pieces:
        for h in tgt_guard.pieces:
            base = g.intersect(h).constrain(equalities=same_block)
            if base.is_empty(pm):
                continue
            for o in order.pieces:
                p = base.intersect(o)
                if not p.is_empty(pm):
                    pieces.append(p.with_implicit_equalities())
    return PolySet(space, pieces), ps


def classify(src: Access, tgt: Access, ext: PolySet, ps: ProductSpace, param_min: int = 1):
    """A relation with roles by co-access kind, or None for an empty extent."""
    if ext.is_empty(param_min):
        return None
    return SharingRelation(src, tgt, ROLES[(src.kind, tgt.kind)], ext, ps)


@dataclass
class PruneInfo:
    exact: bool = True


def prune_nwib(program: Program, rel: SharingRelation, info: PruneInfo | None = None) -> SharingRelation:
    """Drop pairs with a write to the same block strictly between them."""
    info = info if info is not None else PruneInfo()
    pm = program.param_min
    ps = rel.pspace
    src, tgt = rel.source, rel.target
    covered = []
    for w in program.accesses:
        if not w.is_write or w.array != src.array:
            continue
        wstmt = program.statement(w.stmt)
        ycols = {v: prime(v, 2) for v in wstmt.loop_vars}
        space3 = VarSpace(ps.space.iteration_vars + tuple(ycols.values()), program.params)
        ext3 = rel.extent.embed(space3)
        guard3 = w.guard.embed(space3, ycols)
        same_block = [e.rename(ycols) - a.rename(ps.src_vars) for e, a in zip(w.phi, src.phi)]
        before = lex_less(
            _instance_vectors(program, src, ps.src_vars, _access_slot(src)),
            _instance_vectors(program, w, ycols, 1),
            space3,
        )
        after = lex_less(
            _instance_vectors(program, w, ycols, 1),
            _instance_vectors(program, tgt, ps.tgt_vars, _access_slot(tgt)),
            space3,
        )
        for e in ext3.pieces:
            for g in guard3.pieces:
                base = e.intersect(g).constrain(equalities=same_block)
                if base.is_empty(pm):
                    continue
                for b in before.pieces:
                    p1 = base.intersect(b)
                    if p1.is_empty(pm):
                        continue
                    for a in after.pieces:
                        p2 = p1.intersect(a)
                        if p2.is_empty(pm):
                            continue
                        proj, exact = p2.project_out(ycols.values())
                        info.exact = info.exact and exact
                        covered.append(proj)
    if not covered:
        return rel
    remaining = subtract(rel.extent, PolySet(ps.space, covered), pm)
    pieces = [p.with_implicit_equalities() for p in remaining.pieces if not p.is_empty(pm)]
    return replace(rel, extent=PolySet(ps.space, pieces))


# -- multiplicity -----------------------------------------------------------


def _eq_matrix(piece: ConvexPolyhedron, cols: Sequence[int]):
    full = piece.with_implicit_equalities()
    return [[r[c] for c in cols] for r in full.eqs]


def _determined(piece: ConvexPolyhedron, side_cols: Sequence[int]) -> bool:
    """Do the piece's equalities fix ``side_cols`` once all other columns are known?"""
    if not side_cols:
        return True
    return rank(_eq_matrix(piece, side_cols)) == len(side_cols)


def _symbolic_multiplicity(rel: SharingRelation) -> str:
    space = rel.pspace.space
    src = [space.column(c) for c in rel.pspace.src_cols]
    tgt = [space.column(c) for c in rel.pspace.tgt_cols]
    piece = rel.extent.pieces[0]
    tgt_fixed = _determined(piece, tgt)
    src_fixed = _determined(piece, src)
    return _class_of(src_fixed, tgt_fixed)


def _class_of(src_fixed_by_tgt: bool, tgt_fixed_by_src: bool) -> str:
    if src_fixed_by_tgt and tgt_fixed_by_src:
        return ONE_ONE
    if tgt_fixed_by_src:
        return MANY_ONE
    if src_fixed_by_tgt:
        return ONE_MANY
    return MANY_MANY


def counted_multiplicity(rel: SharingRelation, binding: Mapping[str, int]) -> str:
    """Multiplicity decided by enumerating the extent under a binding."""
    by_src: dict = {}
    by_tgt: dict = {}
    for x, y in rel.pairs(binding):
        by_src.setdefault(x, set()).add(y)
        by_tgt.setdefault(y, set()).add(x)
    tgt_fixed = all(len(v) <= 1 for v in by_src.values())
    src_fixed = all(len(v) <= 1 for v in by_tgt.values())
    return _class_of(src_fixed, tgt_fixed)


def default_test_binding(program: Program, value: int = 3) -> dict[str, int]:
    return {p: max(value, program.param_min) for p in program.params}


def multiplicity(rel: SharingRelation, test_binding: Mapping[str, int], notes: list | None = None) -> str:
    """Symbolic decision for convex extents, checked by counting; counting decides for unions."""
    counted = counted_multiplicity(rel, test_binding)
    if len(rel.extent.pieces) != 1:
        return counted
    symbolic = _symbolic_multiplicity(rel)
    if symbolic != counted and notes is not None:
        notes.append(f"{rel.id}: multiplicity {symbolic} symbolically, {counted} when counted at {dict(test_binding)}")
    return symbolic


# -- reduction --------------------------------------------------------------


def _side_rank(piece: ConvexPolyhedron, side: Sequence[str], other: Sequence[str]) -> int:
    proj, _ = piece.project_out(other)
    if proj.is_empty():
        return 0
    cols = [proj.space.column(c) for c in side]
    return len(side) - rank(_eq_matrix(proj, cols))


def side_rank(ext: PolySet, side: Sequence[str], other: Sequence[str]) -> int:
    """Affine dimension of the projection of ``ext`` onto one side (parameters symbolic)."""
    return max((_side_rank(p, side, other) for p in ext.pieces if not p.is_empty()), default=0)


def _free_vars(ext: PolySet, side: Sequence[str], other: Sequence[str]) -> list[str]:
    """Side variables left free by the projection's equalities (outer loops preferred)."""
    best = []
    for piece in ext.pieces:
        proj, _ = piece.project_out(other)
        if proj.is_empty():
            continue
        # reversed order makes inner variables the pivots, so outer ones stay free
        cols = [proj.space.column(c) for c in reversed(side)]
        m = _eq_matrix(proj, cols)
        pivots = set(rref(m)[1]) if m else set()
        free = [c for k, c in enumerate(reversed(side)) if k not in pivots]
        free = [c for c in side if c in free]
        if len(free) > len(best):
            best = free
    return best


def _pin_piece(piece: ConvexPolyhedron, var: str, later: Sequence[str], lower: bool) -> list[ConvexPolyhedron]:
    space = piece.space
    col = space.column(var)
    unknown = [space.column(c) for c in later]
    m_all = _eq_matrix(piece, unknown + [col])
    m_later = _eq_matrix(piece, unknown)
    if unknown and rank(m_all) > rank(m_later) or not unknown and rank(m_all) == 1:
        return [piece]  # already fixed by the other columns
    rows, _ = fm.project(piece.system, unknown)
    if rows is None:
        return []
    reduced = ConvexPolyhedron(space, *rows).without_redundancy()
    bounds = []
    for r in reduced.ineqs:
        a = r[col]
        if (a > 0) != lower or a == 0:
            continue
        if abs(a) != 1:
            raise IrreducibleError(f"bound on {var} has a non-unit coefficient")
        rest = list(r)
        rest[col] = 0
        expr = AffineExpr.from_row(space, rest)
        bounds.append(-expr if lower else expr)
    if not bounds:
        raise IrreducibleError(f"{var} has no {'lower' if lower else 'upper'} bound")
    out = []
    for m, b in enumerate(bounds):
        eq = AffineExpr.var(var) - b
        dominance = [(b - o) if lower else (o - b) for k, o in enumerate(bounds) if k != m]
        p = piece.constrain(equalities=[eq], inequalities=dominance)
        if not p.is_empty():
            out.append(p.with_implicit_equalities())
    return out


def _drop_dominated(ext: PolySet, side: Sequence[str], lower: bool) -> PolySet:
    """Across pieces, keep a pair only if no pair with the same other side is more extreme."""
    if len(ext.pieces) <= 1:
        return ext
    space = ext.space
    alt = {c: prime(c, 2) for c in side}
    space3 = VarSpace(space.iteration_vars + tuple(alt.values()), space.params)
    mine = ext.embed(space3)
    theirs = ext.embed(space3, alt)
    a = [AffineExpr.var(c) for c in side]
    b = [AffineExpr.var(alt[c]) for c in side]
    better = lex_less(b, a, space3) if lower else lex_less(a, b, space3)
    covered = []
    for p in mine.pieces:
        for q in theirs.pieces:
            base = p.intersect(q)
            if base.is_empty():
                continue
            for o in better.pieces:
                r = base.intersect(o)
                if not r.is_empty():
                    covered.append(r.project_out(alt.values())[0])
    if not covered:
        return ext
    rest = subtract(ext, PolySet(space, covered))
    return PolySet(space, [p.with_implicit_equalities() for p in rest.pieces if not p.is_empty()])


def pin_extreme(ext: PolySet, side: Sequence[str], lower: bool) -> PolySet:
    """Keep, for each instance of the other side, the lexicographically extreme ``side`` instance."""
    pieces = list(ext.pieces)
    for k, var in enumerate(side):
        later = side[k + 1:]
        nxt = []
        for p in pieces:
            nxt.extend(_pin_piece(p, var, later, lower))
        pieces = nxt
    return _drop_dominated(PolySet(ext.space, pieces), side, lower)


def _pair_free_variables(rel: SharingRelation) -> PolySet:
    ps = rel.pspace
    src, tgt = ps.src_cols, ps.tgt_cols
    ext = rel.extent
    need = min(side_rank(ext, src, tgt), side_rank(ext, tgt, src))
    src_free = _free_vars(ext, src, tgt)
    tgt_free = _free_vars(ext, tgt, src)
    used: set[str] = set()
    for k, a in enumerate(src_free):
        # the positional partner first, then any other unused target variable
        partners = tgt_free[k:k + 1] + [b for b in tgt_free if b not in tgt_free[k:k + 1]]
        done = False
        for b in partners:
            if b in used:
                continue
            for delta in PAIRING_OFFSETS:
                cand = ext.constrain(equalities=[AffineExpr.var(b) - AffineExpr.var(a) - delta]).drop_empty()
                if not cand.pieces:
                    continue
                if side_rank(cand, src, tgt) >= need and side_rank(cand, tgt, src) >= need:
                    ext = cand
                    used.add(b)
                    done = True
                    break
            if done:
                break
    return ext


def reduce_multiplicity(rel: SharingRelation, test_binding: Mapping[str, int], notes: list | None = None) -> SharingRelation:
    """Narrow an opportunity to one-one form; raises IrreducibleError if impossible."""
    cls = rel.multiplicity or multiplicity(rel, test_binding, notes)
    if cls == ONE_ONE:
        return replace(rel, multiplicity=ONE_ONE)
    ps = rel.pspace
    ext = rel.extent
    if cls == MANY_MANY:
        ext = _pair_free_variables(rel)
        cls = multiplicity(replace(rel, extent=ext), test_binding, notes)
    if cls == ONE_MANY:
        # each source feeds many targets: keep its earliest target
        ext = pin_extreme(ext, ps.tgt_cols, lower=True)
    elif cls == MANY_ONE:
        # each target follows many sources: keep its latest source
        ext = pin_extreme(ext, ps.src_cols, lower=False)
    elif cls == MANY_MANY:
        raise IrreducibleError(f"{rel.id} stays many-many after pairing")
    out = replace(rel, extent=ext, original_extent=rel.original_extent or rel.extent)
    final = multiplicity(out, test_binding, notes)
    if final != ONE_ONE:
        raise IrreducibleError(f"{rel.id} reduced to {final}, not one-one")
    return replace(out, multiplicity=ONE_ONE)


# -- pipeline ---------------------------------------------------------------


@dataclass
class AnalysisResult:
    program: Program
    dependences: list[SharingRelation]
    opportunities: list[SharingRelation]
    excluded: list[tuple[str, str]] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    test_binding: dict = field(default_factory=dict)

    def opportunity(self, rid: str) -> SharingRelation:
        for o in self.opportunities:
            if o.id == rid:
                return o
        raise KeyError(rid)

    def dependence(self, rid: str) -> SharingRelation:
        for d in self.dependences:
            if d.id == rid:
                return d
        raise KeyError(rid)


def analyze(program: Program, test_binding: Mapping[str, int] | None = None) -> AnalysisResult:
    """Extract pruned dependences and one-one sharing opportunities."""
    tb = dict(test_binding) if test_binding else default_test_binding(program)
    program.check_binding(tb)
    pm = program.param_min
    deps, opps = [], []
    result = AnalysisResult(program, deps, opps, test_binding=tb)
    notes = result.diagnostics
    for src, tgt in co_accesses(program):
        ext, ps = extent(program, src, tgt)
        rel = classify(src, tgt, ext, ps, pm)
        if rel is None:
            continue
        info = PruneInfo()
        rel = prune_nwib(program, rel, info)
        if not info.exact:
            notes.append(f"{rel.id}: interfering-write projection is inexact (non-unit coefficients)")
        if rel.extent.is_empty(pm):
            log.debug("%s pruned to the empty set", rel.id)
            continue
        if not rel.pairs(tb):
            notes.append(f"{rel.id}: rationally nonempty but no integer pairs at {tb}")
        rel = replace(rel, original_extent=rel.extent)
        if rel.is_dependence:
            deps.append(rel)
        if rel.is_opportunity:
            try:
                cls = multiplicity(rel, tb, notes)
                reduced = reduce_multiplicity(replace(rel, multiplicity=cls), tb, notes)
            except IrreducibleError as exc:
                log.warning("excluding opportunity %s: %s", rel.id, exc)
                result.excluded.append((rel.id, str(exc)))
                continue
            opps.append(replace(reduced, multiplicity=ONE_ONE, original_extent=rel.extent))
            if cls != ONE_ONE:
                log.debug("%s reduced from %s", rel.id, cls)
            object.__setattr__(opps[-1], "_original_multiplicity", cls)
    return result


def original_multiplicity(rel: SharingRelation) -> str:
    return getattr(rel, "_original_multiplicity", rel.multiplicity)
