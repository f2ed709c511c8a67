"""Program representation, DSL frontend, JSON interchange."""

from .parser import parse, print_program
from .program import (
    READ,
    WRITE,
    Access,
    ArrayDecl,
    Loop,
    OriginalOrder,
    Program,
    ProgramError,
    Schedule,
    Statement,
    original_order,
    original_order_vectors,
)
from .serialize import SchemaError, from_json, to_json

__all__ = [
    "READ", "WRITE", "Access", "ArrayDecl", "Loop", "OriginalOrder", "Program", "ProgramError",
    "Schedule", "Statement", "original_order", "original_order_vectors",
    "parse", "print_program", "SchemaError", "from_json", "to_json",
]
