"""Brute-force reference computations over concrete bindings.

These walk the loop structure with Python ranges and never touch the
polyhedral machinery, so they can check it.
"""

from __future__ import annotations

from itertools import product

from polyshare.ir import Loop


def _env(binding, names, values):
    env = dict(binding)
    env.update(zip(names, values))
    return env


def original_trace(program, binding):
    """Statement instances ``(sid, iter)`` in textual execution order."""
    out = []

    def walk(node, names, values):
        if isinstance(node, Loop):
            env = _env(binding, names, values)
            lo, hi = node.lower.evaluate(env), node.upper.evaluate(env)
            for v in range(lo, hi):
                for child in node.body:
                    walk(child, names + [node.var], values + [v])
        else:
            out.append((node, tuple(values)))

    for nest in program.loops:
        walk(nest, [], [])
    return out


def access_events(program, binding):
    """``(access, iter, block, instance_index)`` in access order (reads before the write)."""
    out = []
    for n, (sid, it) in enumerate(original_trace(program, binding)):
        env = _env(binding, program.statement(sid).loop_vars, it)
        for acc in program.accesses_of(sid):
            if acc.guard.contains(env):
                out.append((acc, it, (acc.array, acc.block(env)), n))
    return out


def extent_pairs(program, src_id, tgt_id, binding, pruned=False):
    """All (x, x') of the co-access, optionally without an intervening write."""
    ev = access_events(program, binding)
    out = set()
    for a in range(len(ev)):
        acc_a, it_a, blk_a, n_a = ev[a]
        if acc_a.id != src_id:
            continue
        for b in range(a + 1, len(ev)):
            acc_b, it_b, blk_b, n_b = ev[b]
            if acc_b.id != tgt_id or blk_b != blk_a or n_b <= n_a:
                continue
            if pruned and any(ev[m][0].is_write and ev[m][2] == blk_a for m in range(a + 1, b)):
                continue
            out.add((it_a, it_b))
    return out


def dependence_pairs(program, binding):
    """Every (source, target) instance pair touching one block with at least one write."""
    ev = access_events(program, binding)
    out = []
    for a in range(len(ev)):
        for b in range(a + 1, len(ev)):
            if ev[a][2] == ev[b][2] and ev[a][3] < ev[b][3] and (ev[a][0].is_write or ev[b][0].is_write):
                out.append(((ev[a][0].stmt, ev[a][1]), (ev[b][0].stmt, ev[b][1])))
    return out


def nested_counts(program, binding):
    """Per-array read and write counts (in bytes) of the original program."""
    reads = {a.name: 0 for a in program.arrays}
    writes = {a.name: 0 for a in program.arrays}
    for acc, _, _, _ in access_events(program, binding):
        size = program.array(acc.array).block_bytes
        (writes if acc.is_write else reads)[acc.array] += size
    return reads, writes


def box_points(names, bound):
    return [dict(zip(names, v)) for v in product(range(-bound, bound + 1), repeat=len(names))]


def rank_feasible(d_bar, d_s, prefix):
    """Can a 0/1 independence prefix be completed to exactly ``d_s`` independent rows?"""
    k = sum(prefix)
    rest = d_bar - len(prefix)
    return k <= d_s and k + rest >= d_s


def schedule_time(plan, program, sid, it, binding):
    env = _env(binding, program.statement(sid).loop_vars, it)
    return plan.schedule.time(sid, env)


def instance_times(program, plan, binding):
    """Schedule time of every statement instance, keyed by ``(sid, iter)``."""
    out = {}
    for sid, it in original_trace(program, binding):
        out[(sid, it)] = schedule_time(plan, program, sid, it, binding)
    return out


def realization_holds(program, opp, plan, binding):
    """Do all pairs of ``opp`` show the time difference its realization demands?"""
    d_bar = program.d_bar
    for x, y in opp.pairs(binding):
        tx = schedule_time(plan, program, opp.source.stmt, x, binding)
        ty = schedule_time(plan, program, opp.target.stmt, y, binding)
        diff = [b - a for a, b in zip(tx, ty)]
        if opp.is_self:
            allowed = {1, -1} if opp.kind == "R->R" else {1}
            if any(diff[:d_bar - 1]) or diff[d_bar - 1] not in allowed or diff[d_bar]:
                return False
        else:
            if any(diff[:d_bar]):
                return False
            if opp.kind == "R->R" and diff[d_bar] == 0:
                return False
            if opp.kind != "R->R" and diff[d_bar] <= 0:
                return False
    return True
