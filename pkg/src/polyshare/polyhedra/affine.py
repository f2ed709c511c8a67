"""Variable spaces and integer affine expressions."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping


class SpaceMismatchError(ValueError):
    """Two operands live in different variable spaces."""


@dataclass(frozen=True)
class VarSpace:
    """Ordered iteration variables followed by ordered parameters.

    Constraint rows over a space are integer tuples laid out as
    ``iteration_vars + params + (constant,)``.
    """

    iteration_vars: tuple[str, ...]
    params: tuple[str, ...] = ()
    has_constant: bool = True

    def __post_init__(self):
        object.__setattr__(self, "iteration_vars", tuple(self.iteration_vars))
        object.__setattr__(self, "params", tuple(self.params))
        names = self.iteration_vars + self.params
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate names in space {names}")
        if not self.has_constant:
            raise ValueError("a VarSpace always carries the constant column")

    @cached_property
    def names(self) -> tuple[str, ...]:
        return self.iteration_vars + self.params

    @cached_property
    def _index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    @property
    def width(self) -> int:
        """Number of non-constant columns."""
        return len(self.names)

    @property
    def n_vars(self) -> int:
        return len(self.iteration_vars)

    def column(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"{name!r} is not a column of {self}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def is_param(self, name: str) -> bool:
        return name in self._index and self._index[name] >= len(self.iteration_vars)

    def __str__(self):
        return f"[{', '.join(self.iteration_vars)}] -> [{', '.join(self.params)}]"


class AffineExpr:
    """``sum(coeffs[v] * v) + constant`` with integer coefficients.

    Instances are immutable and hashable; zero coefficients are never stored.
    """

    __slots__ = ("_coeffs", "constant", "_hash")

    def __init__(self, coeffs: Mapping[str, int] | None = None, constant: int = 0):
        items = {}
        for name, c in (coeffs or {}).items():
            if not isinstance(c, int):
                raise TypeError(f"coefficient of {name} must be an integer, got {c!r}")
            if c:
                items[name] = c
        if not isinstance(constant, int):
            raise TypeError(f"constant must be an integer, got {constant!r}")
        self._coeffs = items
        self.constant = constant
        self._hash = None

    @classmethod
    def var(cls, name: str, coeff: int = 1) -> AffineExpr:
        return cls({name: coeff})

    @classmethod
    def const(cls, value: int) -> AffineExpr:
        return cls({}, value)

    @classmethod
    def lift(cls, value) -> AffineExpr:
        if isinstance(value, AffineExpr):
            return value
        if isinstance(value, int):
            return cls.const(value)
        if isinstance(value, str):
            return cls.var(value)
        raise TypeError(f"cannot convert {value!r} to AffineExpr")

    @property
    def coeffs(self) -> dict[str, int]:
        return dict(self._coeffs)

    def coeff(self, name: str) -> int:
        return self._coeffs.get(name, 0)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(self._coeffs)

    def is_constant(self) -> bool:
        return not self._coeffs

    def __add__(self, other):
        other = AffineExpr.lift(other)
        coeffs = dict(self._coeffs)
        for n, c in other._coeffs.items():
            coeffs[n] = coeffs.get(n, 0) + c
        return AffineExpr(coeffs, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self):
        return AffineExpr({n: -c for n, c in self._coeffs.items()}, -self.constant)

    def __sub__(self, other):
        return self + (-AffineExpr.lift(other))

    def __rsub__(self, other):
        return AffineExpr.lift(other) - self

    def __mul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        return AffineExpr({n: c * k for n, c in self._coeffs.items()}, self.constant * k)

    __rmul__ = __mul__

    def evaluate(self, point: Mapping[str, int]) -> int:
        return self.constant + sum(c * point[n] for n, c in self._coeffs.items())

    def substitute(self, mapping: Mapping[str, AffineExpr | int]) -> AffineExpr:
        out = AffineExpr.const(self.constant)
        for n, c in self._coeffs.items():
            if n in mapping:
                out = out + AffineExpr.lift(mapping[n]) * c
            else:
                out = out + AffineExpr.var(n, c)
        return out

    def rename(self, mapping: Mapping[str, str]) -> AffineExpr:
        return AffineExpr({mapping.get(n, n): c for n, c in self._coeffs.items()}, self.constant)

    def to_row(self, space: VarSpace) -> tuple[int, ...]:
        row = [0] * (space.width + 1)
        for n, c in self._coeffs.items():
            row[space.column(n)] = c
        row[-1] = self.constant
        return tuple(row)

    @classmethod
    def from_row(cls, space: VarSpace, row: Iterable[int]) -> AffineExpr:
        row = tuple(row)
        return cls(dict(zip(space.names, row[:-1])), row[-1])

    def __eq__(self, other):
        if isinstance(other, int):
            other = AffineExpr.const(other)
        if not isinstance(other, AffineExpr):
            return NotImplemented
        return self.constant == other.constant and self._coeffs == other._coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self._coeffs.items()), self.constant))
        return self._hash

    def __repr__(self):
        return f"AffineExpr({self})"

    def __str__(self):
        parts = []
        for n, c in self._coeffs.items():
            mag = abs(c)
            term = n if mag == 1 else f"{mag}*{n}"
            if not parts:
                parts.append(term if c > 0 else f"-{term}")
            else:
                parts.append(f"+ {term}" if c > 0 else f"- {term}")
        if self.constant or not parts:
            if not parts:
                parts.append(str(self.constant))
            else:
                sign = "+" if self.constant > 0 else "-"
                parts.append(f"{sign} {abs(self.constant)}")
        return " ".join(parts)


def lin(**coeffs) -> AffineExpr:
    """Shorthand used in tests: ``lin(i=1, n=-1, _=3)`` is ``i - n + 3``."""
    const = coeffs.pop("_", 0)
    return AffineExpr(coeffs, const)
