"""``polyshare`` command line: analyze, optimize, simulate.

Exit codes: 0 ok, 1 input error, 2 no plan fits the memory cap,
3 prediction and simulation disagree, 4 memory cap exceeded in simulation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .analysis import AnalysisResult, analyze, original_multiplicity
from .costing import (
    DEFAULT_READ_RATE,
    DEFAULT_WRITE_RATE,
    InfeasibleCapError,
    cost_family,
    cost_plan,
    select_best,
    to_csv,
    to_json as costs_to_json,
)
from .executor import InjectivityError, illegal_pairs, run_plan, verify
from .ir import Program, ProgramError, SchemaError, from_json, parse
from .polyhedra import EnumerationError, ParseError, count_points
from .scheduler import PlanFormatError, Scheduler, plan_from_dict, plan_to_dict

OK, INPUT_ERROR, INFEASIBLE, MISMATCH, CAPACITY = 0, 1, 2, 3, 4

log = logging.getLogger("polyshare")


class InputError(Exception):
    pass


def _configure_logging():
    level = os.environ.get("POLYSHARE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def load_program(path: str) -> Program:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        if path.endswith(".json"):
            return from_json(text)
        return parse(text)
    except (ParseError, SchemaError, ProgramError) as exc:
        raise InputError(f"{path}: {exc}") from None


def parse_bindings(items) -> dict[str, int]:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise InputError(f"--param expects name=value, got {item!r}")
        try:
            out[name.strip()] = int(value)
        except ValueError:
            raise InputError(f"--param {name}: {value!r} is not an integer") from None
    return out


def _full_binding(program: Program, binding: dict[str, int]) -> dict[str, int]:
    unknown = sorted(set(binding) - set(program.params))
    if unknown:
        raise InputError(f"unknown parameter(s): {', '.join(unknown)}")
    try:
        program.check_binding(binding)
    except ProgramError as exc:
        raise InputError(str(exc)) from None
    return {p: binding[p] for p in program.params}


def _positive(name: str, value) -> int:
    if value is None or value <= 0:
        raise InputError(f"{name} must be positive")
    return value


def _relation_doc(rel, binding, opportunity: bool) -> dict:
    doc = {
        "id": rel.id,
        "source": rel.source.id,
        "target": rel.target.id,
        "kind": rel.kind,
        "roles": sorted(rel.roles),
        "extent": rel.extent.dump(),
    }
    if opportunity:
        doc["multiplicity"] = original_multiplicity(rel)
        doc["reduced_multiplicity"] = rel.multiplicity
    if binding is not None:
        doc["pairs"] = count_points(rel.extent, binding)
        if opportunity and rel.original_extent is not None:
            doc["pairs_before_reduction"] = count_points(rel.original_extent, binding)
    return doc


def analysis_report(result: AnalysisResult, binding) -> dict:
    return {
        "binding": binding,
        "dependences": [_relation_doc(d, binding, False) for d in result.dependences],
        "opportunities": [_relation_doc(o, binding, True) for o in result.opportunities],
        "excluded": [{"id": i, "reason": r} for i, r in result.excluded],
        "diagnostics": list(result.diagnostics),
    }


def cmd_analyze(args, out) -> int:
    program = load_program(args.file)
    binding = parse_bindings(args.param)
    full = None
    if binding:
        full = _full_binding(program, binding)
    result = analyze(program)
    report = analysis_report(result, full)
    if args.json:
        out.write(json.dumps(report, indent=2) + "\n")
        return OK
    out.write(f"{len(report['dependences'])} dependences, {len(report['opportunities'])} sharing opportunities\n")
    for d in report["dependences"]:
        extra = f"  pairs={d['pairs']}" if "pairs" in d else ""
        out.write(f"dependence   {d['id']:<18} {d['kind']}{extra}\n")
    for o in report["opportunities"]:
        extra = f"  pairs={o['pairs']}" if "pairs" in o else ""
        out.write(f"opportunity  {o['id']:<18} {o['kind']}  {o['multiplicity']} -> one-one"
                  f"  roles={','.join(o['roles'])}{extra}\n")
    for e in report["excluded"]:
        out.write(f"excluded     {e['id']}: {e['reason']}\n")
    for note in report["diagnostics"]:
        out.write(f"note: {note}\n")
    return OK


def _write(path, text: str, out):
    if path in (None, "-"):
        out.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_optimize(args, out) -> int:
    program = load_program(args.file)
    binding = _full_binding(program, parse_bindings(args.param))
    cap = args.mem_cap
    if cap < 0:
        raise InputError("--mem-cap must be nonnegative")
    rr = _positive("--read-rate", args.read_rate)
    wr = _positive("--write-rate", args.write_rate)
    bound = _positive("--bound", args.bound)
    result = analyze(program)
    plans = Scheduler(result, bound).apriori_search()
    costed = cost_family(result, plans, binding, cap, rr, wr)
    if args.plan_space:
        text = costs_to_json(costed) + "\n" if args.plan_space.endswith(".json") else to_csv(costed)
        _write(args.plan_space, text, out)
    try:
        best = select_best(costed, cap)
    except InfeasibleCapError as exc:
        out.write(f"infeasible: {exc}\n")
        out.write(f"least-memory plan {exc.fallback.plan_id}: {list(exc.fallback.ids)} needs {exc.fallback.peak_bytes} bytes\n")
        return INFEASIBLE
    doc = plan_to_dict(program, best.plan)
    doc["binding"] = binding
    doc["predicted"] = {
        "reads_bytes": best.reads,
        "writes_bytes": best.writes,
        "peak_bytes": best.peak_bytes,
        "est_seconds": str(best.est_seconds),
    }
    if args.out:
        _write(args.out, json.dumps(doc, indent=2) + "\n", out)
    out.write(f"{len(costed)} candidate plans; selected {best.plan_id} realizing {list(best.ids)}\n")
    out.write(f"reads {best.reads_total} B, writes {best.writes_total} B, "
              f"peak {best.peak_bytes} B, est {float(best.est_seconds):.6g} s\n")
    return OK


def cmd_simulate(args, out) -> int:
    program = load_program(args.file)
    binding = _full_binding(program, parse_bindings(args.param))
    cap = args.mem_cap
    if cap is None or cap < 0:
        raise InputError("--mem-cap must be nonnegative")
    try:
        doc = json.loads(Path(args.plan).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {args.plan}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.plan}: invalid JSON: {exc}") from None
    try:
        plan = plan_from_dict(program, doc)
    except PlanFormatError as exc:
        raise InputError(f"{args.plan}: {exc}") from None
    result = analyze(program)
    known = {o.id for o in result.opportunities}
    unknown = sorted(plan.realized - known)
    if unknown:
        raise InputError(f"{args.plan}: unknown opportunities {unknown}")
    try:
        report = run_plan(result, plan, binding, cap, record=args.trace)
    except InjectivityError as exc:
        raise InputError(f"schedule is not injective: {exc}") from None
    bad = illegal_pairs(result, plan.schedule, binding)
    if bad:
        raise InputError("schedule violates dependences: " + "; ".join(bad))
    costed = cost_plan(result, plan, binding, cap)
    verdict = verify(costed, report)
    stored = doc.get("predicted")
    if stored and doc.get("binding") == binding:
        for kind in ("reads_bytes", "writes_bytes"):
            want = stored.get(kind, {})
            got = report.reads if kind == "reads_bytes" else report.writes
            for arr in sorted(set(want) | set(got)):
                if want.get(arr, 0) != got.get(arr, 0):
                    verdict.diffs.append({"field": kind, "array": arr, "predicted": want.get(arr, 0),
                                          "simulated": got.get(arr, 0), "source": "plan file"})
        if stored.get("peak_bytes", report.peak_bytes) != report.peak_bytes:
            verdict.diffs.append({"field": "peak_bytes", "array": None, "predicted": stored["peak_bytes"],
                                  "simulated": report.peak_bytes, "source": "plan file"})
        verdict.ok = not verdict.diffs
    if args.trace:
        for line in report.log:
            out.write(line + "\n")
    out.write(f"{'array':<8}{'reads':>10}{'writes':>10}\n")
    for arr in sorted(report.reads):
        out.write(f"{arr:<8}{report.reads[arr]:>10}{report.writes[arr]:>10}\n")
    out.write(f"{'total':<8}{report.reads_total:>10}{report.writes_total:>10}\n")
    out.write(f"peak {report.peak_bytes} B (cap {cap} B)\n")
    if args.json:
        out.write(json.dumps({"report": report.to_dict(), "verdict": verdict.to_dict()}, indent=2) + "\n")
    if report.violation is not None:
        v = report.violation
        out.write(f"capacity violation at instant {v['instant']}: {v['bytes']} B > {v['cap']} B\n")
        return CAPACITY
    if not verdict.ok:
        for d in verdict.diffs:
            out.write(f"mismatch {d['field']} {d['array']}: predicted {d['predicted']}, simulated {d['simulated']}\n")
        return MISMATCH
    out.write("verdict: ok (prediction equals simulation)\n")
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyshare", description="I/O sharing optimizer for blocked loop programs")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="program in the loop DSL or JSON (.json)")
        p.add_argument("--param", action="append", metavar="NAME=VALUE", help="parameter binding (repeatable)")

    a = sub.add_parser("analyze", help="list dependences and sharing opportunities")
    common(a)
    a.add_argument("--json", action="store_true", help="machine-readable output")
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("optimize", help="search plans and select the best under a memory cap")
    common(o)
    o.add_argument("--mem-cap", type=int, required=True, metavar="BYTES")
    o.add_argument("--read-rate", type=int, default=DEFAULT_READ_RATE, metavar="BYTES_PER_S")
    o.add_argument("--write-rate", type=int, default=DEFAULT_WRITE_RATE, metavar="BYTES_PER_S")
    o.add_argument("--bound", type=int, default=3, help="schedule coefficient bound")
    o.add_argument("--out", help="write the selected plan JSON here ('-' for stdout)")
    o.add_argument("--plan-space", help="write the costed plan table (CSV, or JSON for *.json)")
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("simulate", help="execute a plan in the buffer simulator and verify the prediction")
    common(s)
    s.add_argument("--plan", required=True)
    s.add_argument("--mem-cap", type=int, required=True, metavar="BYTES")
    s.add_argument("--trace", action="store_true", help="print one line per block access")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None, out=None) -> int:
    _configure_logging()
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code == 0 else INPUT_ERROR
    try:
        return args.func(args, out)
    except (InputError, EnumerationError) as exc:
        sys.stderr.write(f"polyshare: error: {exc}\n")
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
