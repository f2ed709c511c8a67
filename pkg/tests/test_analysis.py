from collections import Counter

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from polyshare import programs
from polyshare.analysis import (
    DEPENDENCE,
    MANY_MANY,
    MANY_ONE,
    ONE_MANY,
    ONE_ONE,
    OPPORTUNITY,
    analyze,
    classify,
    co_accesses,
    counted_multiplicity,
    extent,
    multiplicity,
    original_multiplicity,
    prune_nwib,
    reduce_multiplicity,
)
from polyshare.ir import parse
from polyshare.polyhedra import enumerate_points

from oracles import access_events, extent_pairs

EXPECTED_ROLES = {
    "R->W": {DEPENDENCE},
    "R->R": {OPPORTUNITY},
    "W->R": {DEPENDENCE, OPPORTUNITY},
    "W->W": {DEPENDENCE, OPPORTUNITY},
}


def raw_relation(program, src_id, tgt_id):
    src, tgt = program.access(src_id), program.access(tgt_id)
    ext, ps = extent(program, src, tgt)
    return classify(src, tgt, ext, ps, program.param_min)


def pair_set(rel, binding, which="extent"):
    n = len(rel.pspace.src_vars)
    pts = enumerate_points(getattr(rel, which), binding)
    return {(p[:n], p[n:]) for p in pts}


def check_against_oracle(program, binding):
    """Every co-access, raw and pruned, against the trace oracle; returns the analysis."""
    result = analyze(program)
    by_id = {r.id: r for r in result.dependences}
    by_id.update({o.id: o for o in result.opportunities})
    excluded = {i for i, _ in result.excluded}
    for src, tgt in co_accesses(program):
        rid = f"{src.id}->{tgt.id}"
        raw = raw_relation(program, src.id, tgt.id)
        want_raw = extent_pairs(program, src.id, tgt.id, binding)
        if raw is None:
            assert not want_raw, rid
            continue
        assert pair_set(raw, binding) == want_raw, rid
        want = extent_pairs(program, src.id, tgt.id, binding, pruned=True)
        if rid in excluded:
            continue
        rel = by_id.get(rid)
        if rel is None:
            assert not want, rid
            continue
        which = "original_extent" if rel.is_opportunity else "extent"
        assert pair_set(rel, binding, which) == want, rid
    return result


# -- extents ---------------------------------------------------------------


@pytest.mark.parametrize("binding", [
    {"n1": 3, "n2": 4, "n3": 2},
    {"n1": 2, "n2": 3, "n3": 2},
    {"n1": 1, "n2": 2, "n3": 1},
])
def test_example1_extents_match_oracle(ex1, binding):
    check_against_oracle(ex1, binding)


def test_two_matmul_extents_match_oracle(mm):
    check_against_oracle(mm, {"n1": 2, "n2": 2, "n3": 2, "n4": 1})


@pytest.mark.parametrize("n", [1, 2, 5, 7])
def test_opposite_extents_match_oracle(opposite, n):
    check_against_oracle(opposite, {"n": n})


def test_example1_w_to_r_closed_form(ex1):
    rel = raw_relation(ex1, "s1WC", "s2RC")
    b = {"n1": 2, "n2": 3, "n3": 2}
    want = {((i, k), (i, j, k)) for i in range(2) for k in range(3) for j in range(2)}
    assert pair_set(rel, b) == want
    assert raw_relation(ex1, "s2RC", "s1WC") is None


def test_opposite_closed_forms(opposite):
    b = {"n": 7}
    fwd = raw_relation(opposite, "s1WA", "s2RA")
    back = raw_relation(opposite, "s2RA", "s1WA")
    assert pair_set(fwd, b) == {((i,), (6 - i,)) for i in range(4)}
    assert pair_set(back, b) == {((i,), (6 - i,)) for i in range(3)}


def test_disjoint_arrays_give_only_self_pairs():
    p = parse("param n;\narray A[n] block 1;\narray B[n] block 1;\n"
              "for i in 0 .. n { s1: write A[i] <- A[i]; }\n"
              "for i in 0 .. n { s2: write B[i] <- B[i]; }")
    assert all(a.stmt == b.stmt for a, b in co_accesses(p))


def test_cross_pairs_in_both_directions(mm):
    ids = {(a.id, b.id) for a, b in co_accesses(mm)}
    assert ("s1RA", "s2RA") in ids and ("s2RA", "s1RA") in ids


# -- roles -----------------------------------------------------------------


@pytest.mark.parametrize("name", ["example1", "two_matmul", "opposite"])
def test_roles_follow_kind_table(name):
    result = analyze(programs.load(name))
    for rel in result.dependences + result.opportunities:
        assert set(rel.roles) == EXPECTED_ROLES[rel.kind]
        assert rel.source.array == rel.target.array
    for d in result.dependences:
        assert d.kind != "R->R"
    for o in result.opportunities:
        assert o.kind != "R->W"


def test_example1_relations(ex1_analysis):
    assert [d.id for d in ex1_analysis.dependences] == ["s1WC->s2RC", "s2WE->s2RE", "s2WE->s2WE"]
    assert [o.id for o in ex1_analysis.opportunities] == [
        "s1WC->s2RC", "s2RC->s2RC", "s2RD->s2RD", "s2WE->s2RE", "s2WE->s2WE",
    ]


# -- pruning ---------------------------------------------------------------

THREE_READS = "param n;\narray X[1] block 1;\nfor i in 0 .. n { s: nowrite <- X[0]; }"


def test_three_consecutive_reads_share_twice():
    p = parse(THREE_READS)
    b = {"n": 3}
    result = analyze(p)
    (opp,) = result.opportunities
    assert len(pair_set(opp, b, "original_extent")) == 3
    assert pair_set(opp, b) == {((0,), (1,)), ((1,), (2,))}


def test_matmul_reread_of_accumulator_is_pruned(mm):
    raw = raw_relation(mm, "s1RC", "s1RC")
    assert raw is not None
    assert prune_nwib(mm, raw).extent.is_empty(mm.param_min)
    ids = {o.id for o in analyze(mm).opportunities}
    assert "s1RC->s1RC" not in ids and "s2RE->s2RE" not in ids


def test_unwritten_array_is_left_alone(ex1):
    raw = raw_relation(ex1, "s2RD", "s2RD")
    pruned = prune_nwib(ex1, raw)
    b = {"n1": 2, "n2": 2, "n3": 2}
    assert pair_set(pruned, b) == pair_set(raw, b)


# -- multiplicity ------------------------------------------------------------

EX1_SMALL = {"n1": 2, "n2": 2, "n3": 3}


def test_example1_multiplicities(ex1_analysis):
    assert original_multiplicity(ex1_analysis.opportunity("s1WC->s2RC")) == ONE_MANY
    assert original_multiplicity(ex1_analysis.opportunity("s2WE->s2WE")) == ONE_ONE
    assert all(o.multiplicity == ONE_ONE for o in ex1_analysis.opportunities)


def test_w_to_r_reduction_keeps_earliest_read(ex1, ex1_analysis):
    opp = ex1_analysis.opportunity("s1WC->s2RC")
    before = pair_set(opp, EX1_SMALL, "original_extent")
    after = pair_set(opp, EX1_SMALL)
    assert len(before) == 12 and len(after) == 4
    assert all(y[1] == 0 for _, y in after)
    assert after == closest_in_time(ex1, opp, before, EX1_SMALL, ONE_MANY)


def closest_in_time(program, rel, pairs, binding, cls):
    """Keep, per one-side instance, the many-side partner nearest in the original trace."""
    pos = {}
    for acc, it, _, n in access_events(program, binding):
        pos.setdefault((acc.stmt, it), n)
    best = {}
    for x, y in pairs:
        key, other = (x, y) if cls == ONE_MANY else (y, x)
        dist = abs(pos[(rel.target.stmt, y)] - pos[(rel.source.stmt, x)])
        if key not in best or dist < best[key][0]:
            best[key] = (dist, other)
    if cls == ONE_MANY:
        return {(k, v) for k, (_, v) in best.items()}
    return {(v, k) for k, (_, v) in best.items()}


TWO_READ_NESTS = ("param n;\narray X[1] block 1;\narray Y[n] block 1;\n"
        "for i in 0 .. n { s1: write Y[i] <- X[0]; }\n"
        "for i in 0 .. n { s2: nowrite <- X[0]; }")


def test_many_many_pairs_by_identity():
    p = parse(TWO_READ_NESTS)
    b = {"n": 2}
    raw = raw_relation(p, "s1RX", "s2RX")
    assert counted_multiplicity(raw, b) == MANY_MANY
    opp = analyze(p).opportunity("s1RX->s2RX")
    assert original_multiplicity(opp) == MANY_MANY
    assert pair_set(opp, b) == {((0,), (0,)), ((1,), (1,))}
    assert pair_set(opp, {"n": 4}) == {((i,), (i,)) for i in range(4)}


def test_many_one_keeps_latest_source():
    # every read of X[0] in the first nest precedes the single later read
    p = parse("param n;\narray X[1] block 1;\narray Y[n] block 1;\n"
              "for i in 0 .. n { s1: write Y[i] <- X[0]; }\n"
              "for j in 0 .. 1 { s2: nowrite <- X[0]; }")
    b = {"n": 3}
    rel = prune_nwib(p, raw_relation(p, "s1RX", "s2RX"))
    tb = {"n": 3}
    assert multiplicity(rel, tb) == MANY_ONE
    red = reduce_multiplicity(rel, tb)
    assert pair_set(red, b) == {((2,), (0,))}
    assert pair_set(red, b) == closest_in_time(p, rel, pair_set(rel, b), b, MANY_ONE)


def test_many_many_pairs_a_non_positional_free_variable():
    # the only free partner of the source's j is the target's i
    p = parse("param n;\narray X[n] block 1;\narray Y[n] block 1;\n"
              "for i in 0 .. n { for j in 0 .. n { s1: nowrite <- X[i]; } }\n"
              "for i in 0 .. n { for j in 0 .. n { s2: nowrite <- X[j]; } }")
    result = analyze(p)
    assert not result.excluded
    opp = result.opportunity("s1RX->s2RX")
    assert original_multiplicity(opp) == MANY_MANY
    b = {"n": 3}
    assert pair_set(opp, b) == {((i, j), (j, i)) for i in range(3) for j in range(3)}


def test_one_many_over_a_union_extent_pins_across_pieces():
    # s1 at i=0 meets Y[0] in two pieces (same i, later i'); only the
    # earliest target may survive
    p = parse("param n;\narray X[n] block 1;\narray Y[n] block 1;\n"
              "for i in 0 .. n { s1: nowrite <- Y[i]; s2: nowrite <- Y[0]; }")
    result = analyze(p)
    assert not result.excluded
    opp = result.opportunity("s1RY->s2RY")
    assert original_multiplicity(opp) == ONE_MANY
    for n in (2, 4):
        b = {"n": n}
        rel = prune_nwib(p, raw_relation(p, "s1RY", "s2RY"))
        assert pair_set(opp, b) == closest_in_time(p, rel, pair_set(rel, b), b, ONE_MANY)
        assert pair_set(opp, b) == {((0,), (0,))}


@pytest.mark.parametrize("name, binding", [
    ("example1", {"n1": 2, "n2": 2, "n3": 3}),
    ("two_matmul", {"n1": 2, "n2": 2, "n3": 2, "n4": 2}),
    ("opposite", {"n": 5}),
])
def test_reduction_is_sound(name, binding):
    result = analyze(programs.load(name))
    for opp in result.opportunities:
        before = pair_set(opp, binding, "original_extent")
        after = pair_set(opp, binding)
        assert after <= before
        srcs = Counter(x for x, _ in after)
        tgts = Counter(y for _, y in after)
        assert all(c == 1 for c in srcs.values()) and all(c == 1 for c in tgts.values())
        cls = original_multiplicity(opp)
        if cls == ONE_MANY:
            assert len(after) == len({x for x, _ in before})
        elif cls == MANY_ONE:
            assert len(after) == len({y for _, y in before})
        elif cls == ONE_ONE:
            assert after == before


def test_dependences_are_not_reduced(ex1_analysis):
    dep = ex1_analysis.dependence("s1WC->s2RC")
    assert len(pair_set(dep, EX1_SMALL)) == 12


# -- random programs -----------------------------------------------------------

SUBSCRIPTS_1 = ["i", "0", "n - 1 - i"]
SUBSCRIPTS_2 = ["i", "j", "0"]


@st.composite
def small_programs(draw):
    lines = ["param n;", "array X[n] block 1;", "array Y[n] block 1;"]
    nests = draw(st.integers(1, 2))
    label = 0
    for _ in range(nests):
        depth = draw(st.integers(1, 2))
        subs = SUBSCRIPTS_1 if depth == 1 else SUBSCRIPTS_2
        body = []
        for _ in range(draw(st.integers(1, 2))):
            label += 1
            write = draw(st.one_of(st.none(), st.tuples(st.sampled_from("XY"), st.sampled_from(subs))))
            reads = draw(st.lists(st.tuples(st.sampled_from("XY"), st.sampled_from(subs),
                                            st.booleans()), min_size=0 if write else 1, max_size=2))
            head = f"write {write[0]}[{write[1]}]" if write else "nowrite"
            parts = [f"{a}[{s}]" + (" when i >= 1" if g else "") for a, s, g in reads]
            body.append(f"s{label}: {head} <- {', '.join(parts)};")
        inner = " ".join(body)
        if depth == 1:
            lines.append(f"for i in 0 .. n {{ {inner} }}")
        else:
            lines.append(f"for i in 0 .. n {{ for j in 0 .. n {{ {inner} }} }}")
    return "\n".join(lines)


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_programs(), st.integers(1, 3))
def test_random_programs_match_oracle(text, n):
    p = parse(text)
    result = check_against_oracle(p, {"n": n})
    for opp in result.opportunities:
        after = pair_set(opp, {"n": n})
        assert after <= pair_set(opp, {"n": n}, "original_extent")
        assert len({x for x, _ in after}) == len(after) == len({y for _, y in after})
