"""JSON interchange form of programs.

Constraint systems are stored as lists of pieces, each piece a list of
strings ``"expr >= 0"`` or ``"expr = 0"``; affine expressions are strings.
"""

from __future__ import annotations

import json

import jsonschema

from ..polyhedra import AffineExpr, ConvexPolyhedron, PolySet, VarSpace
from ..polyhedra.text import ParseError, TokenStream, parse_affine, parse_constraints, tokenize
from .program import Access, ArrayDecl, Loop, Program, ProgramError, Statement


class SchemaError(ValueError):
    """JSON input that does not describe a valid program; ``pointer`` locates the problem."""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer or "/"
        super().__init__(f"{self.pointer}: {message}")


_PIECES = {"type": "array", "items": {"type": "array", "items": {"type": "string"}}}
_NAME = {"type": "string", "pattern": "^[A-Za-z_][A-Za-z0-9_]*$"}

_LOOP = {
    "type": "object",
    "required": ["var", "lower", "upper", "body"],
    "additionalProperties": False,
    "properties": {
        "var": _NAME,
        "lower": {"type": "string"},
        "upper": {"type": "string"},
        "body": {
            "type": "array",
            "items": {"anyOf": [{"type": "string"}, {"$ref": "#/$defs/loop"}]},
        },
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["params", "arrays", "statements", "accesses"],
    "additionalProperties": False,
    "$defs": {"loop": _LOOP},
    "properties": {
        "format": {"const": "polyshare-program/1"},
        "params": {"type": "array", "items": _NAME},
        "param_min": {"type": "integer"},
        "d_bar": {"type": "integer", "minimum": 0},
        "arrays": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "grid_dims", "block_bytes"],
                "additionalProperties": False,
                "properties": {
                    "name": _NAME,
                    "grid_dims": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                    "block_bytes": {"type": "integer", "minimum": 1},
                },
            },
        },
        "statements": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "label", "depth", "loop_vars", "domain", "textual_path"],
                "additionalProperties": False,
                "properties": {
                    "id": _NAME,
                    "label": _NAME,
                    "depth": {"type": "integer", "minimum": 0},
                    "loop_vars": {"type": "array", "items": _NAME},
                    "domain": _PIECES,
                    "textual_path": {"type": "array", "items": {"type": "integer"}},
                },
            },
        },
        "accesses": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "stmt", "kind", "array", "phi", "guard"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "stmt": {"type": "string"},
                    "kind": {"enum": ["R", "W"]},
                    "array": {"type": "string"},
                    "phi": {"type": "array", "items": {"type": "string"}},
                    "guard": _PIECES,
                },
            },
        },
        "loops": {"type": "array", "items": {"$ref": "#/$defs/loop"}},
    },
}


def _pieces_to_json(ps: PolySet) -> list[list[str]]:
    out = []
    for p in ps.pieces:
        out.append([f"{e} = 0" for e in p.equalities] + [f"{e} >= 0" for e in p.inequalities])
    return out


def _loop_to_json(loop: Loop) -> dict:
    return {
        "var": loop.var,
        "lower": str(loop.lower),
        "upper": str(loop.upper),
        "body": [_loop_to_json(b) if isinstance(b, Loop) else b for b in loop.body],
    }


def to_dict(p: Program) -> dict:
    doc = {
        "format": "polyshare-program/1",
        "params": list(p.params),
        "param_min": p.param_min,
        "d_bar": p.d_bar,
        "arrays": [
            {"name": a.name, "grid_dims": [str(d) for d in a.grid_dims], "block_bytes": a.block_bytes}
            for a in p.arrays
        ],
        "statements": [
            {
                "id": s.id,
                "label": s.label,
                "depth": s.depth,
                "loop_vars": list(s.loop_vars),
                "domain": _pieces_to_json(s.domain),
                "textual_path": list(s.textual_path),
            }
            for s in p.statements
        ],
        "accesses": [
            {
                "id": a.id,
                "stmt": a.stmt,
                "kind": a.kind,
                "array": a.array,
                "phi": [str(e) for e in a.phi],
                "guard": _pieces_to_json(a.guard),
            }
            for a in p.accesses
        ],
    }
    if p.loops is not None:
        doc["loops"] = [_loop_to_json(l) for l in p.loops]
    return doc


def to_json(p: Program, indent: int | None = 2) -> str:
    return json.dumps(to_dict(p), indent=indent)


def _affine(text: str, allowed: set[str], pointer: str) -> AffineExpr:
    try:
        ts = TokenStream(tokenize(text))
        expr = parse_affine(ts, allowed)
        if ts.peek.kind != "EOF":
            raise ts.error(f"unexpected {ts.peek.value!r}")
        return expr
    except ParseError as exc:
        raise SchemaError(pointer, f"bad affine expression {text!r}: {exc}") from None


def _polyset(pieces, space: VarSpace, pointer: str) -> PolySet:
    out = []
    allowed = set(space.names)
    for k, piece in enumerate(pieces):
        try:
            eqs, ineqs = parse_constraints(", ".join(piece), allowed)
        except ParseError as exc:
            raise SchemaError(f"{pointer}/{k}", f"bad constraint: {exc}") from None
        out.append(ConvexPolyhedron(space, eqs, ineqs))
    return PolySet(space, out)


def _loop_from_json(doc, allowed: set[str], pointer: str) -> Loop:
    inner = allowed | {doc["var"]}
    body = []
    for k, b in enumerate(doc["body"]):
        body.append(b if isinstance(b, str) else _loop_from_json(b, inner, f"{pointer}/body/{k}"))
    return Loop(
        doc["var"],
        _affine(doc["lower"], allowed, f"{pointer}/lower"),
        _affine(doc["upper"], allowed, f"{pointer}/upper"),
        tuple(body),
    )


def from_dict(doc) -> Program:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(x) for x in err.absolute_path)
        raise SchemaError(pointer, err.message)

    params = tuple(doc["params"])
    pset = set(params)
    arrays = []
    names = set()
    for k, a in enumerate(doc["arrays"]):
        ptr = f"/arrays/{k}"
        dims = tuple(_affine(d, pset, f"{ptr}/grid_dims/{j}") for j, d in enumerate(a["grid_dims"]))
        arrays.append(ArrayDecl(a["name"], dims, a["block_bytes"]))
        names.add(a["name"])

    statements = []
    stmt_space = {}
    for k, s in enumerate(doc["statements"]):
        ptr = f"/statements/{k}"
        if s["depth"] != len(s["loop_vars"]):
            raise SchemaError(f"{ptr}/depth", "depth differs from the number of loop variables")
        if len(s["textual_path"]) != s["depth"] + 1:
            raise SchemaError(f"{ptr}/textual_path", "textual path needs depth + 1 entries")
        try:
            space = VarSpace(tuple(s["loop_vars"]), params)
        except ValueError as exc:
            raise SchemaError(f"{ptr}/loop_vars", str(exc)) from None
        domain = _polyset(s["domain"], space, f"{ptr}/domain")
        statements.append(Statement(s["id"], s["label"], space.iteration_vars, domain, s["textual_path"]))
        stmt_space[s["id"]] = space

    accesses = []
    for k, a in enumerate(doc["accesses"]):
        ptr = f"/accesses/{k}"
        if a["stmt"] not in stmt_space:
            raise SchemaError(f"{ptr}/stmt", f"unknown statement {a['stmt']!r}")
        if a["array"] not in names:
            raise SchemaError(f"{ptr}/array", f"unknown array {a['array']!r}")
        space = stmt_space[a["stmt"]]
        allowed = set(space.names)
        phi = tuple(_affine(e, allowed, f"{ptr}/phi/{j}") for j, e in enumerate(a["phi"]))
        guard = _polyset(a["guard"], space, f"{ptr}/guard")
        accesses.append(Access(a["id"], a["stmt"], a["kind"], a["array"], phi, guard))

    loops = None
    if "loops" in doc:
        loops = tuple(_loop_from_json(l, pset, f"/loops/{k}") for k, l in enumerate(doc["loops"]))
    try:
        program = Program(params, tuple(arrays), tuple(statements), tuple(accesses),
                          doc.get("param_min", 1), loops)
    except ProgramError as exc:
        raise SchemaError("/", str(exc)) from None
    if "d_bar" in doc and doc["d_bar"] != program.d_bar:
        raise SchemaError("/d_bar", f"declared {doc['d_bar']}, but the deepest statement has depth {program.d_bar}")
    return program


def from_json(text: str) -> Program:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"invalid JSON: {exc}") from None
    return from_dict(doc)
