import json

import pytest

from polyshare import programs
from polyshare.ir import (
    ProgramError,
    SchemaError,
    from_json,
    original_order,
    parse,
    print_program,
    to_json,
)
from polyshare.ir.serialize import to_dict
from polyshare.polyhedra import ParseError, enumerate_points

from oracles import original_trace

HEADER = "param n;\narray A[n] block 1;\narray B[n] block 1;\n"


@pytest.mark.parametrize("name", ["example1", "two_matmul", "opposite"])
def test_dsl_round_trip(name):
    p = programs.load(name)
    again = parse(print_program(p))
    assert again == p
    assert print_program(again) == print_program(p)


@pytest.mark.parametrize("name", ["example1", "two_matmul", "opposite"])
def test_json_round_trip(name):
    p = programs.load(name)
    assert from_json(to_json(p)) == p


def test_example1_structure(ex1):
    assert ex1.d_bar == 3
    assert [a.id for a in ex1.accesses] == ["s1RA", "s1RB", "s1WC", "s2RE", "s2RC", "s2RD", "s2WE"]
    s2 = ex1.statement("s2")
    assert s2.loop_vars == ("i", "j", "k") and s2.textual_path == (1, 0, 0, 0)
    guard = ex1.access("s2RE").guard
    assert len(enumerate_points(guard, {"n1": 2, "n2": 3, "n3": 2})) == 8


def test_identical_reads_merge_into_one_access():
    p = parse(HEADER + "for i in 0 .. n { s: write B[i] <- A[i] when i >= 1, A[i]; }")
    reads = [a for a in p.accesses if not a.is_write]
    assert len(reads) == 1
    assert len(enumerate_points(reads[0].guard, {"n": 4})) == 4


def test_second_write_is_rejected():
    with pytest.raises(ParseError, match="more than one write"):
        parse(HEADER + "for i in 0 .. n { s: write B[i] <- A[i] write A[i]; }")


@pytest.mark.parametrize("body, message", [
    ("s: write Z[i] <- A[i];", "unknown array"),
    ("s: write B[i] <- A[j];", "unknown name"),
    ("s: write B[i][i] <- A[i];", "dimension"),
    ("s: write B[i] <- A[i * i];", "non-affine"),
    ("block: write B[i] <- A[i];", "keyword"),
])
def test_parse_errors_are_positioned(body, message):
    with pytest.raises(ParseError, match=message) as info:
        parse(HEADER + "for i in 0 .. n {\n  " + body + "\n}")
    assert info.value.line >= 4


def test_shadowing_and_duplicate_labels():
    with pytest.raises(ParseError, match="shadows"):
        parse(HEADER + "for i in 0 .. n { for i in 0 .. n { s: nowrite <- A[i]; } }")
    with pytest.raises(ParseError, match="duplicate statement label"):
        parse(HEADER + "for i in 0 .. n { s: nowrite <- A[i]; s: nowrite <- B[i]; }")


def test_primes_are_reserved():
    with pytest.raises(ParseError, match="prime"):
        parse(HEADER + "for i' in 0 .. n { s: nowrite <- A[i']; }")


def test_empty_program_parses():
    p = parse("")
    assert p.statements == () and p.d_bar == 0


def test_schema_errors_carry_pointers(ex1):
    doc = to_dict(ex1)
    doc["accesses"][0]["array"] = "Z"
    with pytest.raises(SchemaError) as info:
        from_json(json.dumps(doc))
    assert info.value.pointer == "/accesses/0/array"
    doc = to_dict(ex1)
    doc["accesses"][0]["kind"] = "X"
    with pytest.raises(SchemaError, match="/accesses/0/kind"):
        from_json(json.dumps(doc))
    doc = to_dict(ex1)
    doc["d_bar"] = 7
    with pytest.raises(SchemaError, match="/d_bar"):
        from_json(json.dumps(doc))
    with pytest.raises(SchemaError, match="invalid JSON"):
        from_json("{")


def test_guard_outside_domain_is_rejected(ex1):
    doc = to_dict(ex1)
    doc["accesses"][3]["guard"] = [["k + 5 >= 0"]]
    with pytest.raises(SchemaError, match="not contained"):
        from_json(json.dumps(doc))


def test_two_writes_rejected_in_json(ex1):
    doc = to_dict(ex1)
    extra = dict(doc["accesses"][2], id="s1WC2")
    doc["accesses"].append(extra)
    with pytest.raises(SchemaError, match="only one"):
        from_json(json.dumps(doc))


@pytest.mark.parametrize("name, binding", [
    ("example1", {"n1": 2, "n2": 2, "n3": 2}),
    ("opposite", {"n": 4}),
    ("two_matmul", {"n1": 2, "n2": 1, "n3": 2, "n4": 2}),
])
def test_original_order_matches_textual_execution(name, binding):
    p = programs.load(name)
    order = original_order(p)
    trace = original_trace(p, binding)
    times = [order.time(sid, it) for sid, it in trace]
    assert times == sorted(times)
    assert len(set(times)) == len(times)


def test_opposite_order_vectors(opposite):
    order = original_order(opposite)
    assert [str(e) for e in order.vectors["s1"]] == ["0", "i", "0"]
    assert [str(e) for e in order.vectors["s2"]] == ["0", "i", "1"]
    assert order.precedes(("s2", (0,)), ("s1", (1,)))


def test_binding_checks(ex1):
    with pytest.raises(ProgramError, match="missing"):
        ex1.check_binding({"n1": 1})
    with pytest.raises(ProgramError, match="at least"):
        ex1.check_binding({"n1": 0, "n2": 1, "n3": 1})
