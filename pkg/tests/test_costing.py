import copy
from fractions import Fraction

import pytest

from polyshare import programs
from polyshare.analysis import analyze
from polyshare.costing import (
    CSV_FIELDS,
    DEFAULT_READ_RATE,
    DEFAULT_WRITE_RATE,
    MB,
    InfeasibleCapError,
    baseline_io,
    cost_family,
    cost_plan,
    estimate_time,
    plan_savings,
    select_best,
    to_csv,
    to_json,
)
from polyshare.ir import parse
from polyshare.scheduler import find_schedule

from conftest import EX1_BINDING, TRIPLE
from oracles import nested_counts


def plan_for(family, ids):
    return next(p for p in family if p.realized == frozenset(ids))


# -- baseline -----------------------------------------------------------------


@pytest.mark.parametrize("name, binding", [
    ("example1", EX1_BINDING),
    ("example1", {"n1": 3, "n2": 1, "n3": 4}),
    ("two_matmul", {"n1": 2, "n2": 3, "n3": 2, "n4": 1}),
    ("opposite", {"n": 6}),
])
def test_baseline_matches_nested_loops(name, binding):
    p = programs.load(name)
    assert baseline_io(p, binding) == nested_counts(p, binding)


def test_baseline_closed_form_counts(ex1):
    reads, writes = baseline_io(ex1, EX1_BINDING)
    n1, n2, n3 = 2, 3, 2
    assert reads == {"A": n1 * n2, "B": n1 * n2, "C": n1 * n2 * n3, "D": n1 * n2 * n3, "E": n1 * n3 * (n2 - 1)}
    assert writes == {"A": 0, "B": 0, "C": n1 * n2, "D": 0, "E": n1 * n3 * n2}


def test_baseline_all_ones(ex1):
    reads, writes = baseline_io(ex1, {"n1": 1, "n2": 1, "n3": 1})
    assert reads == {"A": 1, "B": 1, "C": 1, "D": 1, "E": 0}
    assert writes == {"A": 0, "B": 0, "C": 1, "D": 0, "E": 1}


def test_zero_statement_program():
    p = parse("param n;\narray A[n] block 4;")
    a = analyze(p)
    plan = find_schedule(a, ())
    c = cost_plan(a, plan, {"n": 3})
    assert c.reads == {"A": 0} and c.writes == {"A": 0}
    assert c.peak_bytes == 0 and c.est_seconds == 0


# -- savings ------------------------------------------------------------------


def test_empty_plan_saves_nothing(ex1_analysis, ex1_family):
    s = plan_savings(ex1_analysis, ex1_family[0], EX1_BINDING)
    assert not any(s.reads.values()) and not any(s.writes.values())


def test_triple_plan_savings(ex1_analysis, ex1_family):
    plan = plan_for(ex1_family, TRIPLE)
    s = plan_savings(ex1_analysis, plan, EX1_BINDING)
    assert s.reads["C"] == 6 and s.reads["E"] == 8 and s.writes["E"] == 8
    c = cost_plan(ex1_analysis, plan, EX1_BINDING)
    assert (c.reads_total, c.writes_total) == (30, 10)
    assert c.peak_bytes == 5


def test_triple_plan_elides_c_when_read_once(ex1_analysis, ex1_family):
    plan = plan_for(ex1_family, TRIPLE)
    c = cost_plan(ex1_analysis, plan, {"n1": 2, "n2": 3, "n3": 1})
    assert c.writes == {"A": 0, "B": 0, "C": 0, "D": 0, "E": 2}
    assert c.elided_writes["C"] == 6


@pytest.mark.parametrize("binding", [EX1_BINDING, {"n1": 1, "n2": 2, "n3": 1}])
def test_cost_is_baseline_minus_savings(ex1, ex1_analysis, ex1_family, binding):
    base_r, base_w = baseline_io(ex1, binding)
    for plan in ex1_family:
        c = cost_plan(ex1_analysis, plan, binding)
        s = plan_savings(ex1_analysis, plan, binding)
        for arr in base_r:
            assert c.reads[arr] == base_r[arr] - s.reads[arr] >= 0
            assert c.writes[arr] == base_w[arr] - s.writes[arr] >= 0
        assert c.reads_total == sum(c.reads.values())
        assert c.est_seconds == estimate_time(c.reads_total, c.writes_total)


def test_baseline_peak(ex1_analysis, ex1_family):
    assert cost_plan(ex1_analysis, ex1_family[0], EX1_BINDING).peak_bytes == 3


def test_single_block_peak():
    p = parse("param n;\narray A[1] block 7;\nfor i in 0 .. n { s: nowrite <- A[0]; }")
    a = analyze(p)
    assert cost_plan(a, find_schedule(a, ()), {"n": 4}).peak_bytes == 7


# -- time ---------------------------------------------------------------------


def test_estimate_time():
    assert estimate_time(96 * MB, 0) == 1
    assert estimate_time(0, 0) == 0
    assert estimate_time(0, 60 * MB) == 1
    assert isinstance(estimate_time(1, 1), Fraction)
    assert estimate_time(3, 2, 2, 4) == Fraction(2)
    assert (DEFAULT_READ_RATE, DEFAULT_WRITE_RATE) == (96_000_000, 60_000_000)
    for bad in [(0, 1), (1, -1)]:
        with pytest.raises(ValueError):
            estimate_time(1, 1, *bad)


# -- selection ----------------------------------------------------------------


@pytest.fixture(scope="module")
def ex1_costed(ex1_analysis, ex1_family):
    return cost_family(ex1_analysis, ex1_family, EX1_BINDING)


def test_generous_cap_selects_triple(ex1_costed):
    best = select_best(ex1_costed, 10**6)
    assert best.plan.realized == TRIPLE
    base = ex1_costed[0]
    assert best.est_seconds < base.est_seconds


def test_middle_cap_avoids_triple(ex1_costed):
    triple = next(c for c in ex1_costed if c.plan.realized == TRIPLE)
    base = ex1_costed[0]
    assert base.peak_bytes < triple.peak_bytes
    for cap in range(base.peak_bytes, triple.peak_bytes):
        best = select_best(ex1_costed, cap)
        assert best.peak_bytes <= cap and best.plan.realized != TRIPLE
        assert best.est_seconds > triple.est_seconds


def test_cap_below_every_peak(ex1_costed):
    low = min(c.peak_bytes for c in ex1_costed)
    with pytest.raises(InfeasibleCapError) as info:
        select_best(ex1_costed, low - 1)
    assert info.value.fallback.peak_bytes == low
    with pytest.raises(ValueError):
        select_best([], 10)


@pytest.mark.parametrize("cap", [3, 4, 5, 6, 100])
def test_selection_is_pareto_undominated(ex1_costed, cap):
    best = select_best(ex1_costed, cap)
    for c in ex1_costed:
        if c.peak_bytes > cap:
            continue
        no_worse = c.est_seconds <= best.est_seconds and c.peak_bytes <= best.peak_bytes
        strictly = c.est_seconds < best.est_seconds or c.peak_bytes < best.peak_bytes
        assert not (no_worse and strictly)


def test_ties_prefer_less_memory_then_ids(ex1_costed):
    a, b = copy.copy(ex1_costed[1]), copy.copy(ex1_costed[2])
    a.est_seconds = b.est_seconds = Fraction(1)
    a.peak_bytes, b.peak_bytes = 9, 4
    assert select_best([a, b], 10) is b
    b.peak_bytes = 9
    assert select_best([b, a], 10).ids == min(a.ids, b.ids)


# -- output -------------------------------------------------------------------


def test_outputs_are_deterministic(ex1_analysis, ex1_family, ex1_costed):
    again = cost_family(ex1_analysis, ex1_family, EX1_BINDING)
    assert to_csv(again) == to_csv(ex1_costed)
    assert to_json(again) == to_json(ex1_costed)
    head, *rows = to_csv(ex1_costed).splitlines()
    assert head.split(",") == CSV_FIELDS
    assert len(rows) == len(ex1_family)
    assert [c.plan_id for c in ex1_costed] == [f"P{k}" for k in range(len(ex1_family))]
