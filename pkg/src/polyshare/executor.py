"""Trace-driven execution of a plan through an explicit block buffer.

The simulator walks the schedule-ordered instance trace, pins blocks for
the plan's realized opportunities and counts the I/O that is left.  It
shares no counting code with ``costing``, so agreement between the two is
a real check.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .analysis import AnalysisResult
from .ir import Program, Schedule
from .polyhedra import enumerate_points
from .scheduler import PlanSchedule

log = logging.getLogger(__name__)


class InjectivityError(ValueError):
    """Two statement instances were mapped to the same time."""


@dataclass(frozen=True)
class TraceInstance:
    time: tuple[int, ...]
    stmt: str
    iter: tuple[int, ...]


def schedule_trace(program: Program, schedule: Schedule, binding: Mapping[str, int]) -> list[TraceInstance]:
    program.check_binding(binding)
    schedule.validate(program)
    trace = []
    for s in program.statements:
        for it in enumerate_points(s.domain, binding):
            point = dict(zip(s.loop_vars, it))
            point.update(binding)
            trace.append(TraceInstance(schedule.time(s.id, point), s.id, it))
    trace.sort(key=lambda t: t.time)
    for a, b in zip(trace, trace[1:]):
        if a.time == b.time:
            raise InjectivityError(
                f"{a.stmt}{list(a.iter)} and {b.stmt}{list(b.iter)} share schedule time {list(a.time)}"
            )
    return trace


@dataclass
class IOReport:
    reads: dict[str, int]
    writes: dict[str, int]
    peak_bytes: int
    violation: dict | None = None
    anomalies: list[str] = field(default_factory=list)
    log: list[str] = field(default_factory=list)

    @property
    def reads_total(self) -> int:
        return sum(self.reads.values())

    @property
    def writes_total(self) -> int:
        return sum(self.writes.values())

    def to_dict(self) -> dict:
        arrays = sorted(set(self.reads) | set(self.writes))
        return {
            "arrays": {a: {"reads_bytes": self.reads.get(a, 0), "writes_bytes": self.writes.get(a, 0)} for a in arrays},
            "reads_total": self.reads_total,
            "writes_total": self.writes_total,
            "peak_bytes": self.peak_bytes,
            "violation": self.violation,
            "anomalies": list(self.anomalies),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass
class _Event:
    instant: tuple[int, ...]
    seq: int
    access: str
    iter: tuple[int, ...]
    block: tuple
    is_write: bool
    bytes: int


def _events(program: Program, trace: Sequence[TraceInstance], binding) -> list[_Event]:
    d_bar = program.d_bar
    out = []
    for seq, t in enumerate(trace):
        point = dict(zip(program.statement(t.stmt).loop_vars, t.iter))
        point.update(binding)
        for acc in program.accesses_of(t.stmt):
            if not acc.guard.contains(point):
                continue
            out.append(_Event(
                t.time[:d_bar], seq, acc.id, t.iter, (acc.array, acc.block(point)),
                acc.is_write, program.array(acc.array).block_bytes,
            ))
    return out


def simulate(
    trace: Sequence[TraceInstance],
    plan: PlanSchedule,
    analysis: AnalysisResult,
    binding: Mapping[str, int],
    cap: int | None = None,
    record: bool = False,
) -> IOReport:
    """Run the trace, exploiting exactly the plan's realized opportunities."""
    program = analysis.program
    realized = [analysis.opportunity(i) for i in sorted(plan.realized)]
    events = _events(program, trace, binding)
    position = {(e.access, e.iter): k for k, e in enumerate(events)}

    # hit -> the earlier event whose block it reuses
    served: dict[int, int] = {}
    ww_sources: set[int] = set()
    for opp in realized:
        for x, y in opp.pairs(binding):
            a = position.get((opp.source.id, x))
            b = position.get((opp.target.id, y))
            if a is None or b is None:
                continue
            if opp.kind == "W->W":
                ww_sources.add(a)
            else:
                first, second = min(a, b), max(a, b)
                served[second] = first

    # a block's last write is dead if it is read again and every such read
    # is served straight from that write
    dead: set[int] = set()
    by_block: dict[tuple, list[int]] = {}
    for k, e in enumerate(events):
        by_block.setdefault(e.block, []).append(k)
    for seq in by_block.values():
        writes_at = [n for n, k in enumerate(seq) if events[k].is_write]
        if not writes_at:
            continue
        n = writes_at[-1]
        k = seq[n]
        later = seq[n + 1:]
        if k not in ww_sources and later and all(served.get(m) == k for m in later):
            dead.add(k)

    reads = {a.name: 0 for a in program.arrays}
    writes = {a.name: 0 for a in program.arrays}
    pins: dict[tuple, tuple] = {}  # block -> instant at which it may be released
    release_at: dict[int, tuple] = {}
    for second, first in served.items():
        # a block serving several later hits stays until the last of them
        release_at[first] = max(release_at.get(first, events[second].instant), events[second].instant)
    report = IOReport(reads, writes, 0)
    current = None
    touched: set = set()

    def close_instant(instant):
        live = touched | set(pins)
        size = sum(program.array(arr).block_bytes for arr, _ in live)
        if size > report.peak_bytes:
            report.peak_bytes = size
        if cap is not None and size > cap and report.violation is None:
            report.violation = {"instant": list(instant), "bytes": size, "cap": cap}
        for blk, until in list(pins.items()):
            if until <= instant:
                del pins[blk]

    for k, e in enumerate(events):
        if e.instant != current:
            if current is not None:
                close_instant(current)
            current = e.instant
            touched = set()
        touched.add(e.block)
        arr = e.block[0]
        if not e.is_write:
            if k in served:
                if e.block not in pins:
                    report.anomalies.append(f"{e.access}{list(e.iter)}: shared block {e.block} not resident")
                    reads[arr] += e.bytes
                    action = "read(miss)"
                else:
                    action = "hit"
            else:
                reads[arr] += e.bytes
                action = "read"
        else:
            if k in ww_sources:
                action = "write(deferred)"
            elif k in dead:
                action = "write(dead)"
            else:
                writes[arr] += e.bytes
                action = "write"
        if k in release_at:
            until = release_at[k]
            if e.block not in pins or pins[e.block] < until:
                pins[e.block] = until
        if record:
            report.log.append(f"{list(e.instant)} {e.access}{list(e.iter)} {arr}{list(e.block[1])} {action}")
    if current is not None:
        close_instant(current)
    return report


@dataclass
class Verdict:
    ok: bool
    diffs: list[dict]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "diffs": self.diffs}


def verify(costed, report: IOReport) -> Verdict:
    """Exact per-array and peak comparison of a prediction with a simulation."""
    diffs = []
    for kind, pred, sim in (("reads_bytes", costed.reads, report.reads), ("writes_bytes", costed.writes, report.writes)):
        for arr in sorted(set(pred) | set(sim)):
            p, s = pred.get(arr, 0), sim.get(arr, 0)
            if p != s:
                diffs.append({"field": kind, "array": arr, "predicted": p, "simulated": s})
    if costed.peak_bytes != report.peak_bytes:
        diffs.append({"field": "peak_bytes", "array": None, "predicted": costed.peak_bytes, "simulated": report.peak_bytes})
    return Verdict(not diffs, diffs)


def run_plan(analysis: AnalysisResult, plan: PlanSchedule, binding, cap=None, record=False) -> IOReport:
    trace = schedule_trace(analysis.program, plan.schedule, binding)
    return simulate(trace, plan, analysis, binding, cap, record)


def illegal_pairs(analysis: AnalysisResult, schedule: Schedule, binding, limit: int = 5) -> list[str]:
    """Dependence pairs the schedule does not order source first (at most ``limit``)."""
    program = analysis.program
    bad = []
    for dep in analysis.dependences:
        for x, y in dep.pairs(binding):
            px = dict(zip(program.statement(dep.source.stmt).loop_vars, x), **binding)
            py = dict(zip(program.statement(dep.target.stmt).loop_vars, y), **binding)
            if not schedule.time(dep.source.stmt, px) < schedule.time(dep.target.stmt, py):
                bad.append(f"{dep.id}: {list(x)} -> {list(y)}")
                if len(bad) >= limit:
                    return bad
    return bad
