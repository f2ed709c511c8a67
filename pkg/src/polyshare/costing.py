"""Predicted I/O volume, peak memory and time of a plan under a binding.

Everything here is counted from the relation extents and statement
domains; the buffer simulation in ``executor`` is the independent check.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .analysis import AnalysisResult, SharingRelation
from .ir import Program
from .polyhedra import count_points, enumerate_points
from .scheduler import PlanSchedule

MB = 10**6
DEFAULT_READ_RATE = 96 * MB
DEFAULT_WRITE_RATE = 60 * MB


class InfeasibleCapError(Exception):
    """No plan fits the memory cap; ``fallback`` is the plan needing the least memory."""

    def __init__(self, cap: int, fallback: "CostedPlan"):
        self.cap = cap
        self.fallback = fallback
        super().__init__(f"no plan fits a memory cap of {cap} bytes (smallest peak is {fallback.peak_bytes})")


def _zero(program: Program) -> dict[str, int]:
    return {a.name: 0 for a in program.arrays}


def baseline_io(program: Program, binding: Mapping[str, int]) -> tuple[dict[str, int], dict[str, int]]:
    """Per-array read and write bytes of the untransformed program."""
    program.check_binding(binding)
    reads, writes = _zero(program), _zero(program)
    for acc in program.accesses:
        n = count_points(acc.guard, binding) * program.array(acc.array).block_bytes
        (writes if acc.is_write else reads)[acc.array] += n
    return reads, writes


def _point(program: Program, sid: str, it: Sequence[int], binding) -> dict[str, int]:
    d = dict(zip(program.statement(sid).loop_vars, it))
    d.update(binding)
    return d


def _instances(program: Program, binding):
    for s in program.statements:
        for it in enumerate_points(s.domain, binding):
            yield s.id, it


@dataclass
class Savings:
    reads: dict[str, int]
    writes: dict[str, int]
    elided: dict[str, int]
    saved_read_keys: set = field(default_factory=set)
    saved_write_keys: set = field(default_factory=set)


def _realized(analysis: AnalysisResult, plan: PlanSchedule) -> list[SharingRelation]:
    return [analysis.opportunity(i) for i in sorted(plan.realized)]


def plan_savings(analysis: AnalysisResult, plan: PlanSchedule, binding: Mapping[str, int]) -> Savings:
    """Saved bytes per array; each (access, instance) is saved at most once."""
    program = analysis.program
    sched = plan.schedule
    saved_reads: set = set()
    saved_writes: set = set()
    served_by: dict = {}
    for opp in _realized(analysis, plan):
        for x, y in opp.pairs(binding):
            src = (opp.source.id, x)
            tgt = (opp.target.id, y)
            if opp.kind == "W->R":
                saved_reads.add(tgt)
                served_by.setdefault(src, set()).add(tgt)
            elif opp.kind == "W->W":
                saved_writes.add(src)
            else:
                ts = sched.time(opp.source.stmt, _point(program, opp.source.stmt, x, binding))
                tt = sched.time(opp.target.stmt, _point(program, opp.target.stmt, y, binding))
                saved_reads.add(tgt if tt > ts else src)

    # reads after a write and before the next one are the W->R dependence
    # pairs; a write followed by another write is W->W territory, not dead
    consumers: dict = {}
    overwritten: set = set()
    for dep in analysis.dependences:
        if dep.kind == "W->W":
            overwritten.update((dep.source.id, x) for x, _ in dep.pairs(binding))
        if dep.kind != "W->R":
            continue
        for x, y in dep.pairs(binding):
            consumers.setdefault((dep.source.id, x), set()).add((dep.target.id, y))
    elided = _zero(program)
    dead = set()
    for key, reads in consumers.items():
        if key in saved_writes or key in overwritten:
            continue
        if reads and reads <= served_by.get(key, set()):
            dead.add(key)
            acc = program.access(key[0])
            elided[acc.array] += program.array(acc.array).block_bytes

    r, w = _zero(program), _zero(program)
    for aid, _ in saved_reads:
        acc = program.access(aid)
        r[acc.array] += program.array(acc.array).block_bytes
    for aid, _ in saved_writes | dead:
        acc = program.access(aid)
        w[acc.array] += program.array(acc.array).block_bytes
    return Savings(r, w, elided, saved_reads, saved_writes | dead)


def memory_requirement(analysis: AnalysisResult, plan: PlanSchedule, binding: Mapping[str, int]) -> int:
    """Peak bytes over schedule instants: touched blocks plus blocks pinned across the instant."""
    program = analysis.program
    sched = plan.schedule
    d_bar = program.d_bar
    touched: dict[tuple, set] = {}
    for sid, it in _instances(program, binding):
        pt = _point(program, sid, it, binding)
        instant = sched.time(sid, pt)[:d_bar]
        blocks = touched.setdefault(instant, set())
        for acc in program.accesses_of(sid):
            if acc.guard.contains(pt):
                blocks.add((acc.array, acc.block(pt)))
    instants = sorted(touched)
    index = {t: k for k, t in enumerate(instants)}
    pinned: dict[int, set] = {}
    for opp in _realized(analysis, plan):
        if opp.kind == "W->W":
            continue
        for x, y in opp.pairs(binding):
            ps = _point(program, opp.source.stmt, x, binding)
            pt = _point(program, opp.target.stmt, y, binding)
            a = index[sched.time(opp.source.stmt, ps)[:d_bar]]
            b = index[sched.time(opp.target.stmt, pt)[:d_bar]]
            block = (opp.source.array, opp.source.block(ps))
            for k in range(min(a, b), max(a, b) + 1):
                pinned.setdefault(k, set()).add(block)
    peak = 0
    for k, t in enumerate(instants):
        live = touched[t] | pinned.get(k, set())
        peak = max(peak, sum(program.array(arr).block_bytes for arr, _ in live))
    return peak


def estimate_time(reads_bytes: int, writes_bytes: int, read_rate=DEFAULT_READ_RATE, write_rate=DEFAULT_WRITE_RATE) -> Fraction:
    if read_rate <= 0 or write_rate <= 0:
        raise ValueError("transfer rates must be positive")
    return Fraction(reads_bytes) / Fraction(read_rate) + Fraction(writes_bytes) / Fraction(write_rate)


@dataclass
class CostedPlan:
    plan: PlanSchedule
    reads: dict[str, int]
    writes: dict[str, int]
    est_seconds: Fraction
    peak_bytes: int
    cap: int | None = None
    elided_writes: dict[str, int] = field(default_factory=dict)
    plan_id: str = ""

    @property
    def feasible(self) -> bool:
        return self.cap is None or self.peak_bytes <= self.cap

    @property
    def reads_total(self) -> int:
        return sum(self.reads.values())

    @property
    def writes_total(self) -> int:
        return sum(self.writes.values())

    @property
    def ids(self) -> tuple[str, ...]:
        return self.plan.ids

    def row(self) -> dict:
        return {
            "plan": self.plan_id,
            "realized": list(self.ids),
            "reads_bytes": dict(self.reads),
            "writes_bytes": dict(self.writes),
            "reads_total": self.reads_total,
            "writes_total": self.writes_total,
            "est_seconds": float(self.est_seconds),
            "est_seconds_exact": str(self.est_seconds),
            "peak_bytes": self.peak_bytes,
            "feasible": self.feasible,
        }


def cost_plan(
    analysis: AnalysisResult,
    plan: PlanSchedule,
    binding: Mapping[str, int],
    cap: int | None = None,
    read_rate=DEFAULT_READ_RATE,
    write_rate=DEFAULT_WRITE_RATE,
    plan_id: str = "",
) -> CostedPlan:
    program = analysis.program
    base_r, base_w = baseline_io(program, binding)
    sav = plan_savings(analysis, plan, binding)
    reads = {a: base_r[a] - sav.reads[a] for a in base_r}
    writes = {a: base_w[a] - sav.writes[a] for a in base_w}
    secs = estimate_time(sum(reads.values()), sum(writes.values()), read_rate, write_rate)
    peak = memory_requirement(analysis, plan, binding)
    return CostedPlan(plan, reads, writes, secs, peak, cap, sav.elided, plan_id)


def cost_family(analysis, plans: Iterable[PlanSchedule], binding, cap=None, read_rate=DEFAULT_READ_RATE,
                write_rate=DEFAULT_WRITE_RATE) -> list[CostedPlan]:
    return [cost_plan(analysis, p, binding, cap, read_rate, write_rate, f"P{k}") for k, p in enumerate(plans)]


def select_best(costed: Sequence[CostedPlan], mem_cap: int) -> CostedPlan:
    """Cheapest plan within the cap; ties prefer less memory, then the smaller id list."""
    if not costed:
        raise ValueError("no plans to select from")
    fits = [c for c in costed if c.peak_bytes <= mem_cap]
    if not fits:
        fallback = min(costed, key=lambda c: (c.peak_bytes, c.est_seconds, c.ids))
        raise InfeasibleCapError(mem_cap, fallback)
    return min(fits, key=lambda c: (c.est_seconds, c.peak_bytes, c.ids))


CSV_FIELDS = ["plan", "realized", "reads_total", "writes_total", "est_seconds", "est_seconds_exact", "peak_bytes", "feasible"]


def to_csv(costed: Sequence[CostedPlan]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for c in costed:
        row = c.row()
        row["realized"] = ";".join(row["realized"])
        w.writerow({k: row[k] for k in CSV_FIELDS})
    return buf.getvalue()


def to_json(costed: Sequence[CostedPlan]) -> str:
    return json.dumps([c.row() for c in costed], indent=2, sort_keys=True)
