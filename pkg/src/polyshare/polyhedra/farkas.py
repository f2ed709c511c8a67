"""Linearizing "affine form is nonnegative over a polyhedron" constraints.

A :class:`ParametricForm` is an affine function of a point ``x`` whose
coefficients are themselves affine in a vector of unknowns (schedule-row
coefficients).  ``farkas_linearize`` returns the set of unknown vectors for
which the form is nonnegative on the whole domain: the form must equal
``l0 + sum(l_k * row_k(x))`` with nonnegative multipliers on the domain's
inequalities and free ones on its equalities; the multipliers are then
eliminated.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from . import fm
from .affine import AffineExpr, VarSpace
from .sets import DEFAULT_PARAM_MIN, ConvexPolyhedron, param_rows


class ParametricForm:
    """``sum(coef[c](u) * x_c) + const(u)`` for domain columns ``c``, unknowns ``u``."""

    __slots__ = ("coeffs", "constant")

    def __init__(self, coeffs: Mapping[str, AffineExpr] | None = None, constant=0):
        self.coeffs = {k: AffineExpr.lift(v) for k, v in (coeffs or {}).items()}
        self.constant = AffineExpr.lift(constant)

    def unknowns(self) -> set[str]:
        names = set(self.constant.variables)
        for e in self.coeffs.values():
            names |= e.variables
        return names

    def __add__(self, other):
        if isinstance(other, ParametricForm):
            coeffs = dict(self.coeffs)
            for k, v in other.coeffs.items():
                coeffs[k] = coeffs.get(k, AffineExpr()) + v
            return ParametricForm(coeffs, self.constant + other.constant)
        return ParametricForm(self.coeffs, self.constant + AffineExpr.lift(other))

    def __sub__(self, other):
        return self + (-other if isinstance(other, ParametricForm) else -AffineExpr.lift(other))

    def __neg__(self):
        return ParametricForm({k: -v for k, v in self.coeffs.items()}, -self.constant)

    def instantiate(self, values: Mapping[str, int]) -> AffineExpr:
        """The plain affine form in ``x`` obtained by fixing the unknowns."""
        return AffineExpr(
            {k: v.evaluate(values) for k, v in self.coeffs.items()},
            self.constant.evaluate(values),
        )

    def evaluate(self, values: Mapping[str, int], point: Mapping[str, int]) -> int:
        return self.instantiate(values).evaluate(point)

    def __repr__(self):
        terms = [f"({v})*{k}" for k, v in self.coeffs.items()]
        return f"ParametricForm({' + '.join(terms + [f'({self.constant})'])})"


def _pivot_column(row, n_cols):
    for c in range(n_cols):
        if abs(row[c]) == 1:
            return c
    return None


def _substitute_unit_equalities(eqs, ineqs, form, width):
    """Use equalities with a unit coefficient to remove domain columns.

    ``form`` is a list of ``width + 1`` AffineExprs aligned with the rows.
    """
    eqs = [list(r) for r in eqs]
    ineqs = [list(r) for r in ineqs]
    form = list(form)
    kept = []
    while eqs:
        e = eqs.pop()
        v = _pivot_column(e, width)
        if v is None:
            kept.append(e)
            continue
        s = e[v]
        # x_v = -s * (e - s*x_v), valid because s = +-1

        def apply(r):
            a = r[v]
            if a:
                for c in range(width + 1):
                    if c != v:
                        r[c] -= a * s * e[c]
                r[v] = 0

        for r in eqs:
            apply(r)
        for r in kept:
            apply(r)
        for r in ineqs:
            apply(r)
        fv = form[v]
        if not fv.is_constant() or fv.constant:
            for c in range(width + 1):
                if c != v and e[c]:
                    form[c] = form[c] - fv * (s * e[c])
            form[v] = AffineExpr()
    return [tuple(r) for r in kept], [tuple(r) for r in ineqs], form


def _linearize_convex(form_cols, piece: ConvexPolyhedron, unknowns, param_min):
    space = piece.space
    width = space.width
    ineqs = piece.ineqs + param_rows(space, param_min)
    eqs, ineqs, form_cols = _substitute_unit_equalities(piece.eqs, ineqs, form_cols, width)
    norm = fm.normalize(eqs, ineqs)
    if norm is None:
        raise ValueError("the domain of a Farkas linearization must be nonempty")
    # no redundancy pruning here: it is decided over the integers, and a row
    # that is only integer-redundant still shapes the rational polytope
    if not fm.feasible(*norm):
        raise ValueError("the domain of a Farkas linearization must be nonempty")
    eqs, ineqs = norm

    nu = len(unknowns)
    ne, ni = len(eqs), len(ineqs)
    total = nu + ne + ni
    uidx = {u: i for i, u in enumerate(unknowns)}

    def unknown_row(expr: AffineExpr):
        r = [0] * (total + 1)
        for name, c in expr.coeffs.items():
            r[uidx[name]] = c
        r[-1] = expr.constant
        return r

    sys_eqs, sys_ineqs = [], []
    for c in range(width + 1):
        r = unknown_row(form_cols[c])
        for j, e in enumerate(eqs):
            r[nu + j] = -e[c]
        for k, a in enumerate(ineqs):
            r[nu + ne + k] = -a[c]
        if c < width:
            sys_eqs.append(tuple(r))
        else:
            # the constant column absorbs the free multiplier l0 >= 0
            sys_ineqs.append(tuple(r))
    for k in range(ni):
        r = [0] * (total + 1)
        r[nu + ne + k] = 1
        sys_ineqs.append(tuple(r))

    res, _ = fm.project((tuple(sys_eqs), tuple(sys_ineqs)), range(nu, total), integer=False)
    coeff_space = VarSpace(unknowns)
    if res is None:
        return ConvexPolyhedron(coeff_space, [], [(0,) * nu + (-1,)])
    strip = lambda r: r[:nu] + (r[-1],)
    return ConvexPolyhedron(coeff_space, [strip(r) for r in res[0]], [strip(r) for r in res[1]])


def farkas_linearize(
    form: ParametricForm,
    domain,
    unknowns: Sequence[str] | None = None,
    param_min: int | None = DEFAULT_PARAM_MIN,
) -> ConvexPolyhedron:
    """Unknown vectors ``u`` such that ``form(u, x) >= 0`` for every ``x`` in ``domain``.

    ``domain`` may be convex or a union; for a union the per-piece results are
    intersected.  Parameters of the domain are quantified too, with
    ``p >= param_min``.  Raises ``ValueError`` on an empty domain.
    """
    if unknowns is None:
        unknowns = sorted(form.unknowns())
    unknowns = tuple(unknowns)
    missing = form.unknowns() - set(unknowns)
    if missing:
        raise ValueError(f"form uses unknowns outside the coefficient space: {sorted(missing)}")
    pieces = [domain] if isinstance(domain, ConvexPolyhedron) else list(domain.pieces)
    pieces = [p for p in pieces if not p.is_empty(param_min)]
    if not pieces:
        raise ValueError("the domain of a Farkas linearization must be nonempty")
    space = pieces[0].space
    extra = set(form.coeffs) - set(space.names)
    if extra:
        raise ValueError(f"form refers to columns outside the domain: {sorted(extra)}")
    form_cols = [form.coeffs.get(n, AffineExpr()) for n in space.names] + [form.constant]
    result = ConvexPolyhedron(VarSpace(unknowns))
    for p in pieces:
        result = result.intersect(_linearize_convex(form_cols, p, unknowns, param_min))
    return result


def coeff_name(stmt: str, column: str) -> str:
    """Unknown naming: ``"s2.k"`` is statement s2's coefficient on k, ``"s2.1"`` its constant."""
    return f"{stmt}.{column}"


def row_difference(
    src_stmt: str,
    src_vars: Mapping[str, str],
    tgt_stmt: str,
    tgt_vars: Mapping[str, str],
    params: Iterable[str],
) -> ParametricForm:
    """``theta_tgt(x') - theta_src(x)`` over a product space.

    ``src_vars``/``tgt_vars`` map each statement's own loop variable to its
    column name in the product space.
    """
    coeffs: dict[str, AffineExpr] = {}
    for v, col in src_vars.items():
        coeffs[col] = coeffs.get(col, AffineExpr()) - AffineExpr.var(coeff_name(src_stmt, v))
    for v, col in tgt_vars.items():
        coeffs[col] = coeffs.get(col, AffineExpr()) + AffineExpr.var(coeff_name(tgt_stmt, v))
    for p in params:
        coeffs[p] = AffineExpr.var(coeff_name(tgt_stmt, p)) - AffineExpr.var(coeff_name(src_stmt, p))
    const = AffineExpr.var(coeff_name(tgt_stmt, "1")) - AffineExpr.var(coeff_name(src_stmt, "1"))
    return ParametricForm(coeffs, const)


STRICT, WEAK, EQUAL, DELTA = "strict", "weak", "equal", "delta"


def lex_order_constraints(
    form: ParametricForm,
    extent,
    mode: str,
    delta: int = 0,
    unknowns: Sequence[str] | None = None,
    param_min: int | None = DEFAULT_PARAM_MIN,
) -> ConvexPolyhedron:
    """Constraints making the row difference ``form`` strict (> 0), weak (>= 0),
    equal (= 0) or equal to ``delta`` on every pair of ``extent``."""
    if unknowns is None:
        unknowns = sorted(form.unknowns())
    if mode == STRICT:
        return farkas_linearize(form - 1, extent, unknowns, param_min)
    if mode == WEAK:
        return farkas_linearize(form, extent, unknowns, param_min)
    if mode == EQUAL:
        delta = 0
    elif mode != DELTA:
        raise ValueError(f"unknown order mode {mode!r}")
    lo = farkas_linearize(form - delta, extent, unknowns, param_min)
    hi = farkas_linearize(-form + delta, extent, unknowns, param_min)
    return lo.intersect(hi)

