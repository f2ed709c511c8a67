"""Exact integer polyhedra: affine expressions, convex sets, unions, Farkas linearization."""

from .affine import AffineExpr, SpaceMismatchError, VarSpace, lin
from .farkas import (
    DELTA,
    EQUAL,
    STRICT,
    WEAK,
    ParametricForm,
    coeff_name,
    farkas_linearize,
    lex_order_constraints,
    row_difference,
)
from .sample import DEFAULT_BOUND, sample_point
from .sets import (
    DEFAULT_PARAM_MIN,
    ConvexPolyhedron,
    EnumerationError,
    PolySet,
    count_points,
    enumerate_points,
    intersect,
    is_empty,
    lex_less,
    subtract,
)
from .text import ParseError, parse_constraints

__all__ = [
    "AffineExpr", "VarSpace", "SpaceMismatchError", "lin",
    "ConvexPolyhedron", "PolySet", "EnumerationError", "DEFAULT_PARAM_MIN",
    "intersect", "subtract", "is_empty", "enumerate_points", "count_points", "lex_less",
    "ParametricForm", "farkas_linearize", "lex_order_constraints", "row_difference", "coeff_name",
    "STRICT", "WEAK", "EQUAL", "DELTA",
    "sample_point", "DEFAULT_BOUND",
    "ParseError", "parse_constraints",
]
