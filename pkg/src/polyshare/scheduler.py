"""Schedule search realizing sets of sharing opportunities.

Each candidate set is scheduled row by row: dependence, sharing and
dimensionality constraints are linearized into one polyhedron over the
schedule coefficients of every statement, and the smallest member is
sampled.  The last schedule dimension is a per-statement constant found
by topological sort.  Feasible sets are enumerated level by level,
extending only sets whose every subset was feasible.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .analysis import AnalysisResult, SharingRelation
from .ir import Program, Schedule
from .polyhedra import AffineExpr, ConvexPolyhedron, PolySet, VarSpace, sample_point
from .polyhedra.farkas import DELTA, EQUAL, STRICT, WEAK, coeff_name, lex_order_constraints, row_difference
from .polyhedra.linalg import nullspace, rank
from .polyhedra.sample import DEFAULT_BOUND

log = logging.getLogger(__name__)

DEPENDENT, INDEPENDENT = 0, 1


def enum_row(d_bar: int, d_s: int, j: int, k: int) -> list[int]:
    """Independence choices for row ``j`` (1-based) when ``k`` independent rows exist."""
    if not (1 <= j <= d_bar and 0 <= k <= d_s):
        raise ValueError(f"row {j} of {d_bar} with {k} of {d_s} independent rows is out of range")
    if k == d_s:
        return [DEPENDENT]
    if d_bar - j + 1 == d_s - k:
        return [INDEPENDENT]
    return [DEPENDENT, INDEPENDENT]


@dataclass(frozen=True)
class PlanSchedule:
    schedule: Schedule
    realized: frozenset
    satisfied_at: Mapping[str, int] = field(default_factory=dict, compare=False)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.realized))


def coefficient_space(program: Program) -> VarSpace:
    names = []
    for s in program.statements:
        names += [coeff_name(s.id, c) for c in s.loop_vars + program.params + ("1",)]
    return VarSpace(tuple(names))


def _difference(program: Program, rel: SharingRelation):
    return row_difference(rel.source.stmt, rel.pspace.src_vars, rel.target.stmt, rel.pspace.tgt_vars, program.params)


def _row_of(program: Program, sid: str, values: Mapping[str, int]) -> AffineExpr:
    s = program.statement(sid)
    coeffs = {c: values[coeff_name(sid, c)] for c in s.loop_vars + program.params}
    return AffineExpr(coeffs, values[coeff_name(sid, "1")])


def _iter_part(program: Program, sid: str, row: AffineExpr) -> list[int]:
    return [row.coeff(v) for v in program.statement(sid).loop_vars]


def _intersect(a: PolySet, b) -> PolySet:
    other = [b] if isinstance(b, ConvexPolyhedron) else list(b.pieces)
    return PolySet(a.space, [p.intersect(q) for p in a.pieces for q in other]).drop_empty(None)


def residual_pairs(program: Program, dep: SharingRelation, rows: Mapping[str, Sequence[AffineExpr]]) -> PolySet:
    """Pairs of ``dep`` not separated by any of the given schedule rows."""
    ps = dep.pspace
    eqs = []
    for a, b in zip(rows[dep.source.stmt], rows[dep.target.stmt]):
        eqs.append(b.rename(ps.tgt_vars) - a.rename(ps.src_vars))
    return dep.extent.constrain(equalities=eqs).drop_empty(program.param_min)


def last_dim_constants(
    program: Program,
    rows: Mapping[str, Sequence[AffineExpr]],
    residual_deps: Iterable[SharingRelation],
    non_self_opps: Iterable[SharingRelation],
) -> dict[str, int] | None:
    """Distinct constants ordering tied dependences and realized same-instant pairs; None on a cycle."""
    order = [s.id for s in program.statements]
    edges = {s: set() for s in order}
    for dep in residual_deps:
        if residual_pairs(program, dep, rows).is_empty(program.param_min):
            continue
        if dep.is_self:
            return None
        edges[dep.source.stmt].add(dep.target.stmt)
    for opp in non_self_opps:
        if opp.source.is_write:
            edges[opp.source.stmt].add(opp.target.stmt)
        # R->R only needs distinct constants, which every assignment below gives
    indeg = {s: 0 for s in order}
    for s in order:
        for t in edges[s]:
            indeg[t] += 1
    ready = [s for s in order if indeg[s] == 0]
    out = {}
    while ready:
        s = min(ready, key=order.index)
        ready.remove(s)
        out[s] = len(out)
        for t in sorted(edges[s], key=order.index):
            indeg[t] -= 1
            if indeg[t] == 0:
                ready.append(t)
    if len(out) != len(order):
        return None
    return out


class Scheduler:
    """Schedule construction against one analysis result; Farkas systems are cached."""

    def __init__(self, analysis: AnalysisResult, bound: int = DEFAULT_BOUND):
        self.analysis = analysis
        self.program = analysis.program
        self.bound = bound
        self.space = coefficient_space(self.program)
        self._cache: dict = {}
        self._opps = {o.id: o for o in analysis.opportunities}

    def _constraint(self, rel: SharingRelation, role: str, mode: str, delta: int = 0) -> ConvexPolyhedron:
        key = (rel.id, role, mode, delta)
        if key not in self._cache:
            self._cache[key] = lex_order_constraints(
                _difference(self.program, rel), rel.extent, mode, delta,
                self.space.iteration_vars, self.program.param_min,
            )
        return self._cache[key]

    def _self_last(self, opp: SharingRelation) -> PolySet:
        if opp.kind == "R->R":
            return PolySet(self.space, [
                self._constraint(opp, "opp", DELTA, -1),
                self._constraint(opp, "opp", DELTA, 1),
            ])
        return PolySet.of(self._constraint(opp, "opp", DELTA, 1))

    def _dimensionality(self, sid: str, choice: int, prior: list[list[int]]) -> PolySet:
        s = self.program.statement(sid)
        names = [coeff_name(sid, v) for v in s.loop_vars]
        if not names:
            return PolySet.universe(self.space)
        if choice == DEPENDENT:
            basis = nullspace(prior, len(names)) if prior else [[int(i == k) for i in range(len(names))] for k in range(len(names))]
            eqs = [AffineExpr(dict(zip(names, z))) for z in basis]
            return PolySet.of(ConvexPolyhedron(self.space, eqs, []))
        eqs = [AffineExpr(dict(zip(names, r))) for r in prior if any(r)]
        pieces = []
        for n in names:
            pieces.append(ConvexPolyhedron(self.space, eqs, [AffineExpr.var(n) - 1]))
            pieces.append(ConvexPolyhedron(self.space, eqs, [-AffineExpr.var(n) - 1]))
        return PolySet(self.space, pieces)

    def find_schedule(self, q: Iterable[str]) -> PlanSchedule | None:
        prog = self.program
        q = sorted(set(q))
        opps = [self._opps[i] for i in q]
        deps = list(self.analysis.dependences)
        d_bar = prog.d_bar
        stmts = [s.id for s in prog.statements]
        rows: dict[str, list[AffineExpr]] = {s: [] for s in stmts}
        indep = {s: 0 for s in stmts}
        satisfied: dict[str, int] = {}
        for d in range(1, d_bar + 1):
            base = PolySet.universe(self.space)
            for dep in deps:
                if dep.id not in satisfied:
                    base = _intersect(base, self._constraint(dep, "dep", WEAK))
            for opp in opps:
                if not opp.is_self or d < d_bar:
                    base = _intersect(base, self._constraint(opp, "opp", EQUAL))
                else:
                    base = _intersect(base, self._self_last(opp))
            if base.is_empty(None):
                return None
            chosen = None
            choice_lists = [enum_row(d_bar, prog.statement(s).depth, d, indep[s]) for s in stmts]
            for combo in itertools.product(*choice_lists):
                cand = base
                for sid, ch in zip(stmts, combo):
                    prior = [_iter_part(prog, sid, r) for r in rows[sid]]
                    cand = _intersect(cand, self._dimensionality(sid, ch, prior))
                    if not cand.pieces:
                        break
                if cand.pieces:
                    chosen = (combo, cand)
                    break
            if chosen is None:
                return None
            combo, cand = chosen
            strict_now = []
            for dep in deps:
                if dep.id in satisfied:
                    continue
                nxt = _intersect(cand, self._constraint(dep, "dep", STRICT))
                if nxt.pieces:
                    cand = nxt
                    strict_now.append(dep.id)
            values = sample_point(cand, self.bound)
            if values is None:
                return None
            for dep_id in strict_now:
                satisfied[dep_id] = d
            for sid, ch in zip(stmts, combo):
                rows[sid].append(_row_of(prog, sid, values))
                indep[sid] += ch
        residual = [dep for dep in deps if dep.id not in satisfied]
        consts = last_dim_constants(prog, rows, residual, [o for o in opps if not o.is_self])
        if consts is None:
            return None
        sched = Schedule({s: tuple(r) for s, r in rows.items()}, consts)
        return PlanSchedule(sched, frozenset(q), satisfied)

    def apriori_search(self, max_size: int | None = None) -> list[PlanSchedule]:
        """All feasible candidate sets, level by level; the empty set comes first."""
        ids = [o.id for o in self.analysis.opportunities]
        out = []
        empty = self.find_schedule(())
        if empty is not None:
            out.append(empty)
        else:
            log.warning("no schedule exists even without sharing")
            return out
        level = []
        for i in ids:
            plan = self.find_schedule((i,))
            if plan is not None:
                level.append(plan)
        k = 1
        limit = len(ids) if max_size is None else max_size
        while level and k <= limit:
            out.extend(level)
            if k == limit:
                break
            feasible = {frozenset(p.realized) for p in level}
            candidates = set()
            for a, b in itertools.combinations(sorted(feasible, key=lambda s: sorted(map(ids.index, s))), 2):
                u = a | b
                if len(u) != k + 1:
                    continue
                if all(frozenset(sub) in feasible for sub in itertools.combinations(u, k)):
                    candidates.add(u)
            level = []
            for c in sorted(candidates, key=lambda s: sorted(map(ids.index, s))):
                plan = self.find_schedule(c)
                if plan is not None:
                    level.append(plan)
            k += 1
        return out


def find_schedule(analysis: AnalysisResult, q: Iterable[str], bound: int = DEFAULT_BOUND) -> PlanSchedule | None:
    return Scheduler(analysis, bound).find_schedule(q)


def apriori_search(analysis: AnalysisResult, bound: int = DEFAULT_BOUND, max_size: int | None = None) -> list[PlanSchedule]:
    return Scheduler(analysis, bound).apriori_search(max_size)


def check_rank(program: Program, schedule: Schedule) -> dict[str, int]:
    """Rank of each statement's schedule rows restricted to its loop variables."""
    out = {}
    for s in program.statements:
        mat = [[r.coeff(v) for v in s.loop_vars] for r in schedule.rows[s.id]]
        out[s.id] = rank(mat) if s.loop_vars and mat else 0
    return out


class PlanFormatError(ValueError):
    pass


PLAN_FORMAT = "polyshare-plan/1"


def plan_to_dict(program: Program, plan: PlanSchedule) -> dict:
    stmts = {}
    for s in program.statements:
        cols = list(s.loop_vars) + list(program.params) + ["1"]
        rows = []
        for r in plan.schedule.rows[s.id]:
            rows.append([r.coeff(c) for c in cols[:-1]] + [r.constant])
        stmts[s.id] = {"columns": cols, "rows": rows, "constant": plan.schedule.constants[s.id]}
    return {"format": PLAN_FORMAT, "realized": list(plan.ids), "statements": stmts}


def plan_from_dict(program: Program, doc) -> PlanSchedule:
    if not isinstance(doc, dict) or doc.get("format") != PLAN_FORMAT:
        raise PlanFormatError(f"not a plan document (expected format {PLAN_FORMAT!r})")
    try:
        realized = doc["realized"]
        entries = doc["statements"]
        rows, consts = {}, {}
        for s in program.statements:
            if s.id not in entries:
                raise PlanFormatError(f"plan has no schedule for statement {s.id}")
            e = entries[s.id]
            cols = list(s.loop_vars) + list(program.params) + ["1"]
            if e["columns"] != cols:
                raise PlanFormatError(f"statement {s.id}: columns {e['columns']} do not match {cols}")
            out = []
            for r in e["rows"]:
                if len(r) != len(cols) or not all(isinstance(v, int) for v in r):
                    raise PlanFormatError(f"statement {s.id}: each row needs {len(cols)} integers")
                out.append(AffineExpr(dict(zip(cols[:-1], r[:-1])), r[-1]))
            rows[s.id] = tuple(out)
            if not isinstance(e["constant"], int):
                raise PlanFormatError(f"statement {s.id}: constant must be an integer")
            consts[s.id] = e["constant"]
    except (KeyError, TypeError) as exc:
        raise PlanFormatError(f"malformed plan document: {exc}") from None
    sched = Schedule(rows, consts)
    try:
        sched.validate(program)
    except ValueError as exc:
        raise PlanFormatError(str(exc)) from None
    return PlanSchedule(sched, frozenset(realized))
