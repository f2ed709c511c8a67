"""Frontend for the loop-nest DSL and the matching pretty-printer.

Example::

    param n1 n2;
    array A[n1][n2] block 1;
    array C[n1][n2] block 1;
    for i in 0 .. n1 {
      for k in 0 .. n2 {
        s1: write C[i][k] <- A[i][k], C[i][k] when k >= 1;
      }
    }
"""

from __future__ import annotations

from dataclasses import dataclass

from ..polyhedra import AffineExpr, ConvexPolyhedron, PolySet, VarSpace
from ..polyhedra.text import (
    ParseError,
    TokenStream,
    parse_affine,
    parse_relation_chain,
    tokenize,
)
from .program import READ, WRITE, Access, ArrayDecl, Loop, Program, ProgramError, Statement

KEYWORDS = {"param", "array", "block", "for", "in", "write", "nowrite", "when", "and"}


@dataclass
class _RawAccess:
    kind: str
    array: str
    phi: tuple[AffineExpr, ...]
    when: tuple[list, list]
    tok: object


class _Parser:
    def __init__(self, text: str):
        self.ts = TokenStream(tokenize(text))
        self.params: list[str] = []
        self.arrays: dict[str, ArrayDecl] = {}
        self.statements: list[Statement] = []
        self.accesses: list[Access] = []
        self.labels: set[str] = set()

    def ident(self, what: str) -> str:
        tok = self.ts.expect_kind("IDENT", what)
        if tok.value in KEYWORDS:
            raise self.ts.error(f"{tok.value!r} is a keyword, expected {what}", tok)
        if "'" in tok.value:
            raise self.ts.error(f"{what} may not contain a prime: {tok.value!r}", tok)
        return tok.value

    def program(self) -> Program:
        ts = self.ts
        while ts.at("param") or ts.at("array"):
            if ts.accept("param"):
                self.param_decl()
            else:
                ts.next()
                self.array_decl()
        nests = []
        while ts.at("for"):
            nests.append(self.nest([], [len(nests)]))
        if ts.peek.kind != "EOF":
            raise ts.error(f"expected 'for', 'param' or 'array', found {ts.peek.value!r}")
        try:
            return Program(
                tuple(self.params), tuple(self.arrays.values()), tuple(self.statements),
                tuple(self.accesses), loops=tuple(nests),
            )
        except ProgramError as exc:
            raise ParseError(str(exc)) from None

    def param_decl(self):
        tok = self.ts.peek
        names = [self.ident("parameter name")]
        while self.ts.peek.kind == "IDENT" and self.ts.peek.value not in KEYWORDS:
            names.append(self.ident("parameter name"))
        self.ts.expect(";")
        for n in names:
            if n in self.params:
                raise self.ts.error(f"duplicate parameter {n!r}", tok)
            self.params.append(n)

    def subscripts(self, allowed) -> tuple[AffineExpr, ...]:
        out = []
        self.ts.expect("[")
        while True:
            out.append(parse_affine(self.ts, allowed))
            if self.ts.accept(","):
                continue
            self.ts.expect("]")
            if not self.ts.accept("["):
                break
        return tuple(out)

    def array_decl(self):
        tok = self.ts.peek
        name = self.ident("array name")
        if name in self.arrays:
            raise self.ts.error(f"duplicate array {name!r}", tok)
        dims = self.subscripts(set(self.params))
        self.ts.expect("block")
        size = int(self.ts.expect_kind("INT", "block size in bytes").value)
        self.ts.expect(";")
        try:
            self.arrays[name] = ArrayDecl(name, dims, size)
        except ProgramError as exc:
            raise self.ts.error(str(exc), tok) from None

    def nest(self, enclosing, path) -> Loop:
        ts = self.ts
        ts.expect("for")
        tok = ts.peek
        var = self.ident("loop variable")
        if var in self.params or var in [v for v, _, _ in enclosing]:
            raise ts.error(f"loop variable {var!r} shadows an enclosing name", tok)
        ts.expect("in")
        allowed = set(self.params) | {v for v, _, _ in enclosing}
        lo = parse_affine(ts, allowed)
        ts.expect("..")
        hi = parse_affine(ts, allowed)
        ts.expect("{")
        inner = enclosing + [(var, lo, hi)]
        body = []
        while not ts.at("}"):
            pos = path + [len(body)]
            if ts.at("for"):
                body.append(self.nest(inner, pos))
            else:
                body.append(self.statement(inner, pos))
        ts.expect("}")
        return Loop(var, lo, hi, tuple(body))

    def access(self, allowed, kind) -> _RawAccess:
        tok = self.ts.peek
        name = self.ident("array name")
        if name not in self.arrays:
            raise self.ts.error(f"unknown array {name!r}", tok)
        phi = self.subscripts(allowed)
        if len(phi) != self.arrays[name].ndim:
            raise self.ts.error(
                f"{name} has {self.arrays[name].ndim} dimension(s), got {len(phi)} subscript(s)", tok
            )
        return _RawAccess(kind, name, phi, ([], []), tok)

    def statement(self, loops, path) -> str:
        ts = self.ts
        tok = ts.peek
        label = self.ident("statement label")
        if label in self.labels:
            raise ts.error(f"duplicate statement label {label!r}", tok)
        self.labels.add(label)
        ts.expect(":")
        loop_vars = tuple(v for v, _, _ in loops)
        allowed = set(loop_vars) | set(self.params)
        raw = []
        if ts.accept("write"):
            raw.append(self.access(allowed, WRITE))
        elif not ts.accept("nowrite"):
            raise ts.error("expected 'write' or 'nowrite'")
        ts.expect("<-")
        if not ts.at(";"):
            while True:
                acc = self.access(allowed, READ)
                if ts.accept("when"):
                    eqs, ineqs = [], []
                    while True:
                        e, i = parse_relation_chain(ts, allowed)
                        eqs += e
                        ineqs += i
                        if not ts.accept("and"):
                            break
                    acc.when = (eqs, ineqs)
                raw.append(acc)
                if not ts.accept(","):
                    break
        if ts.at("write"):
            raise ts.error(f"statement {label} has more than one write access; each statement can have only one")
        ts.expect(";")

        space = VarSpace(loop_vars, tuple(self.params))
        bounds = []
        for v, lo, hi in loops:
            bounds.append(AffineExpr.var(v) - lo)
            bounds.append(hi - AffineExpr.var(v) - 1)
        domain_piece = ConvexPolyhedron(space, [], bounds)
        domain = PolySet.of(domain_piece)
        self.statements.append(Statement(label, label, loop_vars, domain, tuple(path)))

        # identical (kind, array, subscripts) reads are one access with the union of guards
        merged: dict[tuple, list[ConvexPolyhedron]] = {}
        order = []
        for r in raw:
            key = (r.kind, r.array, r.phi)
            guard = domain_piece.constrain(r.when[0], r.when[1])
            if key not in merged:
                merged[key] = []
                order.append(key)
            merged[key].append(guard)
        counts: dict[str, int] = {}
        reads = [k for k in order if k[0] == READ]
        writes = [k for k in order if k[0] == WRITE]
        for kind, array, phi in reads + writes:
            base = f"{label}{kind}{array}"
            counts[base] = counts.get(base, 0) + 1
            aid = base if counts[base] == 1 else f"{base}{counts[base]}"
            pieces = merged[(kind, array, phi)]
            if domain_piece in pieces:
                pieces = [domain_piece]
            guard = PolySet(space, pieces)
            self.accesses.append(Access(aid, label, kind, array, phi, guard))
        return label


def parse(text: str) -> Program:
    """Parse DSL text into a validated Program."""
    return _Parser(text).program()


def _fmt_subscripts(phi) -> str:
    return "".join(f"[{e}]" for e in phi)


def _guard_text(piece: ConvexPolyhedron, domain: ConvexPolyhedron) -> str:
    dom_eqs, dom_ineqs = set(domain.eqs), set(domain.ineqs)
    parts = [f"{AffineExpr.from_row(piece.space, r)} = 0" for r in piece.eqs if r not in dom_eqs]
    parts += [f"{AffineExpr.from_row(piece.space, r)} >= 0" for r in piece.ineqs if r not in dom_ineqs]
    return " and ".join(parts)


def print_program(program: Program) -> str:
    """Pretty-print a program that carries its loop structure."""
    if program.loops is None:
        raise ProgramError("program has no loop structure to print")
    lines = []
    if program.params:
        lines.append(f"param {' '.join(program.params)};")
    for a in program.arrays:
        lines.append(f"array {a.name}{_fmt_subscripts(a.grid_dims)} block {a.block_bytes};")

    def stmt_line(sid: str, indent: str) -> str:
        stmt = program.statement(sid)
        domain = stmt.domain.pieces[0] if stmt.domain.pieces else ConvexPolyhedron(stmt.space)
        write = program.write_of(sid)
        head = f"write {write.array}{_fmt_subscripts(write.phi)}" if write else "nowrite"
        reads = []
        for acc in program.accesses_of(sid):
            if acc.is_write:
                continue
            text = f"{acc.array}{_fmt_subscripts(acc.phi)}"
            if not acc.guard.pieces:
                reads.append(f"{text} when 0 >= 1")
            for piece in acc.guard.pieces:
                cond = _guard_text(piece, domain)
                reads.append(f"{text} when {cond}" if cond else text)
        tail = f" {', '.join(reads)}" if reads else ""
        return f"{indent}{stmt.label}: {head} <-{tail};"

    def emit(loop: Loop, depth: int):
        indent = "  " * depth
        lines.append(f"{indent}for {loop.var} in {loop.lower} .. {loop.upper} {{")
        for item in loop.body:
            if isinstance(item, Loop):
                emit(item, depth + 1)
            else:
                lines.append(stmt_line(item, "  " * (depth + 1)))
        lines.append(f"{indent}}}")

    for loop in program.loops:
        emit(loop, 0)
    return "\n".join(lines) + "\n"
