"""Program model: arrays, statements, guarded block accesses, schedules."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence, Union

from ..polyhedra import AffineExpr, ConvexPolyhedron, PolySet, VarSpace, subtract
from ..polyhedra.sets import DEFAULT_PARAM_MIN

READ, WRITE = "R", "W"


class ProgramError(ValueError):
    """A structurally invalid program (bad reference, second write, ...)."""


@dataclass(frozen=True)
class ArrayDecl:
    name: str
    grid_dims: tuple[AffineExpr, ...]
    block_bytes: int = 1

    def __post_init__(self):
        object.__setattr__(self, "grid_dims", tuple(AffineExpr.lift(d) for d in self.grid_dims))
        if self.block_bytes < 1:
            raise ProgramError(f"array {self.name}: block size must be positive")

    @property
    def ndim(self) -> int:
        return len(self.grid_dims)


@dataclass(frozen=True)
class Statement:
    id: str
    label: str
    loop_vars: tuple[str, ...]
    domain: PolySet
    textual_path: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "loop_vars", tuple(self.loop_vars))
        object.__setattr__(self, "textual_path", tuple(self.textual_path))
        if self.domain.space.iteration_vars != self.loop_vars:
            raise ProgramError(f"statement {self.id}: domain space does not match its loops")
        if len(self.textual_path) != len(self.loop_vars) + 1:
            raise ProgramError(f"statement {self.id}: textual path needs depth + 1 entries")

    @property
    def depth(self) -> int:
        return len(self.loop_vars)

    @property
    def space(self) -> VarSpace:
        return self.domain.space


@dataclass(frozen=True)
class Access:
    id: str
    stmt: str
    kind: str
    array: str
    phi: tuple[AffineExpr, ...]
    guard: PolySet

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(AffineExpr.lift(e) for e in self.phi))
        if self.kind not in (READ, WRITE):
            raise ProgramError(f"access {self.id}: kind must be R or W")

    @property
    def is_write(self) -> bool:
        return self.kind == WRITE

    def block(self, point: Mapping[str, int]) -> tuple[int, ...]:
        return tuple(e.evaluate(point) for e in self.phi)


@dataclass(frozen=True)
class Loop:
    """Loop AST node kept for printing; ``body`` holds Loops and statement ids."""

    var: str
    lower: AffineExpr
    upper: AffineExpr
    body: tuple[Union["Loop", str], ...]


@dataclass(frozen=True)
class Program:
    params: tuple[str, ...]
    arrays: tuple[ArrayDecl, ...]
    statements: tuple[Statement, ...]
    accesses: tuple[Access, ...]
    param_min: int = DEFAULT_PARAM_MIN
    loops: tuple[Loop, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("params", "arrays", "statements", "accesses"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.loops is not None:
            object.__setattr__(self, "loops", tuple(self.loops))
        self.validate()

    def validate(self):
        if len(set(self.params)) != len(self.params):
            raise ProgramError("duplicate parameter names")
        names = [a.name for a in self.arrays]
        if len(set(names)) != len(names):
            raise ProgramError("duplicate array names")
        ids = [s.id for s in self.statements]
        if len(set(ids)) != len(ids):
            raise ProgramError("duplicate statement ids")
        labels = [s.label for s in self.statements]
        if len(set(labels)) != len(labels):
            raise ProgramError("duplicate statement labels")
        paths = [s.textual_path for s in self.statements]
        if len(set(paths)) != len(paths):
            raise ProgramError("two statements share a textual position")
        arrays = {a.name: a for a in self.arrays}
        for a in self.arrays:
            for d in a.grid_dims:
                bad = d.variables - set(self.params)
                if bad:
                    raise ProgramError(f"array {a.name}: grid size uses non-parameters {sorted(bad)}")
        stmts = {s.id: s for s in self.statements}
        for s in self.statements:
            if s.space.params != self.params:
                raise ProgramError(f"statement {s.id}: domain parameters differ from the program's")
        acc_ids = [a.id for a in self.accesses]
        if len(set(acc_ids)) != len(acc_ids):
            raise ProgramError("duplicate access ids")
        writes: dict[str, str] = {}
        for acc in self.accesses:
            if acc.stmt not in stmts:
                raise ProgramError(f"access {acc.id}: unknown statement {acc.stmt!r}")
            if acc.array not in arrays:
                raise ProgramError(f"access {acc.id}: unknown array {acc.array!r}")
            stmt = stmts[acc.stmt]
            if len(acc.phi) != arrays[acc.array].ndim:
                raise ProgramError(
                    f"access {acc.id}: {len(acc.phi)} subscripts for {arrays[acc.array].ndim}-d array {acc.array}"
                )
            allowed = set(stmt.loop_vars) | set(self.params)
            for e in acc.phi:
                bad = e.variables - allowed
                if bad:
                    raise ProgramError(f"access {acc.id}: subscript uses unknown names {sorted(bad)}")
            if acc.guard.space != stmt.space:
                raise ProgramError(f"access {acc.id}: guard space does not match statement {stmt.id}")
            if not subtract(acc.guard, stmt.domain, self.param_min).is_empty(self.param_min):
                raise ProgramError(f"access {acc.id}: guard is not contained in the statement domain")
            if acc.is_write:
                if acc.stmt in writes:
                    raise ProgramError(
                        f"statement {acc.stmt} has more than one write access; each statement can have only one"
                    )
                writes[acc.stmt] = acc.id

    @property
    def d_bar(self) -> int:
        return max((s.depth for s in self.statements), default=0)

    @cached_property
    def _stmt_index(self) -> dict[str, Statement]:
        return {s.id: s for s in self.statements}

    @cached_property
    def _access_index(self) -> dict[str, Access]:
        return {a.id: a for a in self.accesses}

    @cached_property
    def _array_index(self) -> dict[str, ArrayDecl]:
        return {a.name: a for a in self.arrays}

    def statement(self, sid: str) -> Statement:
        return self._stmt_index[sid]

    def access(self, aid: str) -> Access:
        return self._access_index[aid]

    def array(self, name: str) -> ArrayDecl:
        return self._array_index[name]

    def accesses_of(self, sid: str) -> list[Access]:
        """Accesses of one statement, reads first, then the write."""
        accs = [a for a in self.accesses if a.stmt == sid]
        return [a for a in accs if not a.is_write] + [a for a in accs if a.is_write]

    def write_of(self, sid: str) -> Access | None:
        return next((a for a in self.accesses if a.stmt == sid and a.is_write), None)

    def check_binding(self, binding: Mapping[str, int]):
        missing = [p for p in self.params if p not in binding]
        if missing:
            raise ProgramError(f"missing parameter binding for {', '.join(missing)}")
        for p in self.params:
            if binding[p] < self.param_min:
                raise ProgramError(f"parameter {p} must be at least {self.param_min}")


def original_order_vectors(program: Program) -> dict[str, tuple[AffineExpr, ...]]:
    """Interleaved ``(p0, v1, p1, ..., vd, pd)`` time vectors, zero-padded to ``2*d_bar + 1``."""
    width = 2 * program.d_bar + 1
    out = {}
    for s in program.statements:
        vec = [AffineExpr.const(s.textual_path[0])]
        for v, p in zip(s.loop_vars, s.textual_path[1:]):
            vec.append(AffineExpr.var(v))
            vec.append(AffineExpr.const(p))
        vec += [AffineExpr.const(0)] * (width - len(vec))
        out[s.id] = tuple(vec)
    return out


class OriginalOrder:
    """The program's textual execution order as per-statement time vectors."""

    def __init__(self, program: Program):
        self.program = program
        self.vectors = original_order_vectors(program)

    def time(self, sid: str, point: Mapping[str, int] | Sequence[int]) -> tuple[int, ...]:
        if not isinstance(point, Mapping):
            point = dict(zip(self.program.statement(sid).loop_vars, point))
        return tuple(e.evaluate(point) for e in self.vectors[sid])

    def precedes(self, a: tuple[str, Sequence[int]], b: tuple[str, Sequence[int]]) -> bool:
        return self.time(*a) < self.time(*b)


def original_order(program: Program) -> OriginalOrder:
    return OriginalOrder(program)


@dataclass(frozen=True)
class Schedule:
    """Per statement: ``d_bar`` affine rows over its extended iteration vector and a constant."""

    rows: Mapping[str, tuple[AffineExpr, ...]]
    constants: Mapping[str, int]

    def time(self, sid: str, point: Mapping[str, int]) -> tuple[int, ...]:
        return tuple(e.evaluate(point) for e in self.rows[sid]) + (self.constants[sid],)

    def dims(self) -> int:
        return 1 + max((len(r) for r in self.rows.values()), default=0)

    def validate(self, program: Program):
        d_bar = program.d_bar
        for s in program.statements:
            if s.id not in self.rows or s.id not in self.constants:
                raise ProgramError(f"schedule has no entry for statement {s.id}")
            if len(self.rows[s.id]) != d_bar:
                raise ProgramError(f"statement {s.id}: schedule needs {d_bar} affine rows")
            allowed = set(s.loop_vars) | set(program.params)
            for e in self.rows[s.id]:
                if e.variables - allowed:
                    raise ProgramError(f"statement {s.id}: schedule row uses unknown names")


def domain_piece(space: VarSpace, eqs=(), ineqs=()) -> PolySet:
    return PolySet.of(ConvexPolyhedron(space, eqs, ineqs))
