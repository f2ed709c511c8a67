"""Tokenizer and recursive-descent parser for affine expressions and relations.

Shared by the constraint fixtures (``"0 <= i < n, j = i + 1"``) and the
program DSL.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .affine import AffineExpr


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class Token:
    kind: str  # INT, IDENT, OP, EOF
    value: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)"
    r"|(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*'*)"
    r"|(?P<op>\.\.|<-|<=|>=|==|[-+*/()\[\]{}<>=,;:|])"
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "int":
            tokens.append(Token("INT", m.group(), line, col))
        elif kind == "ident":
            tokens.append(Token("IDENT", m.group(), line, col))
        elif kind == "op":
            tokens.append(Token("OP", m.group(), line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


RELATIONS = ("<", "<=", "=", "==", ">=", ">")


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, value: str) -> bool:
        tok = self.peek
        return tok.kind in ("OP", "IDENT") and tok.value == value

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.next()
            return True
        return False

    def expect(self, value: str) -> Token:
        tok = self.peek
        if not self.at(value):
            shown = tok.value or "end of input"
            raise ParseError(f"expected {value!r}, found {shown!r}", tok.line, tok.col)
        return self.next()

    def expect_kind(self, kind: str, what: str) -> Token:
        tok = self.peek
        if tok.kind != kind:
            shown = tok.value or "end of input"
            raise ParseError(f"expected {what}, found {shown!r}", tok.line, tok.col)
        return self.next()

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek
        return ParseError(message, tok.line, tok.col)


def parse_affine(ts: TokenStream, allowed: set[str] | None = None) -> AffineExpr:
    """``expr := term (("+"|"-") term)*``; products need a constant factor."""
    expr = _parse_term(ts, allowed)
    while ts.peek.kind == "OP" and ts.peek.value in "+-":
        op = ts.next().value
        rhs = _parse_term(ts, allowed)
        expr = expr + rhs if op == "+" else expr - rhs
    return expr


def _parse_term(ts: TokenStream, allowed) -> AffineExpr:
    start = ts.peek
    value = _parse_unary(ts, allowed)
    while ts.at("*"):
        ts.next()
        rhs = _parse_unary(ts, allowed)
        if value.is_constant():
            value = rhs * value.constant
        elif rhs.is_constant():
            value = value * rhs.constant
        else:
            raise ts.error("non-affine product of two variables", start)
    if ts.at("/"):
        raise ts.error("division is not affine")
    return value


def _parse_unary(ts: TokenStream, allowed) -> AffineExpr:
    if ts.accept("-"):
        return -_parse_unary(ts, allowed)
    if ts.accept("+"):
        return _parse_unary(ts, allowed)
    tok = ts.peek
    if tok.kind == "INT":
        ts.next()
        return AffineExpr.const(int(tok.value))
    if tok.kind == "IDENT":
        if allowed is not None and tok.value not in allowed:
            raise ts.error(f"unknown name {tok.value!r}", tok)
        ts.next()
        return AffineExpr.var(tok.value)
    if ts.accept("("):
        expr = parse_affine(ts, allowed)
        ts.expect(")")
        return expr
    shown = tok.value or "end of input"
    raise ts.error(f"expected an affine expression, found {shown!r}", tok)


def relation_to_constraints(lhs: AffineExpr, op: str, rhs: AffineExpr):
    """``(equalities, inequalities)`` for ``lhs op rhs`` over integers."""
    if op in ("=", "=="):
        return [lhs - rhs], []
    if op == "<=":
        return [], [rhs - lhs]
    if op == "<":
        return [], [rhs - lhs - 1]
    if op == ">=":
        return [], [lhs - rhs]
    if op == ">":
        return [], [lhs - rhs - 1]
    raise ValueError(f"unknown relation {op!r}")


def parse_relation_chain(ts: TokenStream, allowed=None):
    """``a op b (op c)*``; chains like ``0 <= i < n`` expand pairwise."""
    eqs, ineqs = [], []
    lhs = parse_affine(ts, allowed)
    tok = ts.peek
    if not (tok.kind == "OP" and tok.value in RELATIONS):
        raise ts.error("expected a comparison operator")
    while ts.peek.kind == "OP" and ts.peek.value in RELATIONS:
        op = ts.next().value
        rhs = parse_affine(ts, allowed)
        e, i = relation_to_constraints(lhs, op, rhs)
        eqs += e
        ineqs += i
        lhs = rhs
    return eqs, ineqs


def parse_constraints(text: str, allowed: set[str] | None = None):
    """Parse ``"c1, c2 and c3"`` into ``(equalities, inequalities)``.

    ``"true"`` or an empty string is the unconstrained system.
    """
    ts = TokenStream(tokenize(text))
    eqs, ineqs = [], []
    if ts.peek.kind == "EOF" or (ts.at("true") and ts.tokens[ts.pos + 1].kind == "EOF"):
        return eqs, ineqs
    while True:
        e, i = parse_relation_chain(ts, allowed)
        eqs += e
        ineqs += i
        if ts.accept(",") or ts.accept("and"):
            continue
        break
    if ts.peek.kind != "EOF":
        raise ts.error(f"unexpected {ts.peek.value!r}")
    return eqs, ineqs
