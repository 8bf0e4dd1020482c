"""Vector fields, one-forms, distributions and the refined derived type."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .expr import ONE, ZERO, Expression, as_expr, differentiate
from .linalg import (Echelon, RankConfirmationError, Sampler, constant_combinations, nullspace,
                     row_reduce)
from .parse import Chart


class NotTotallyRegular(ArithmeticError):
    def __init__(self, level: int, detail: str):
        super().__init__(f"rank not constant at derived level {level}: {detail}")
        self.level = level


class _Vec:
    __slots__ = ("chart", "components", "_jac", "_bc")

    def __init__(self, chart: Chart, components):
        comps = tuple(as_expr(c) for c in components)
        if len(comps) != chart.dim:
            raise ValueError(f"expected {chart.dim} components, got {len(comps)}")
        self.chart = chart
        self.components = comps
        self._jac = None
        self._bc = {}

    def __getitem__(self, i):
        return self.components[i]

    def __len__(self):
        return len(self.components)

    def __eq__(self, other):
        return type(self) is type(other) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def is_zero(self) -> bool:
        return all(not c.num for c in self.components)

    def jacobian(self):
        """Sparse Jacobian: row i lists (j, d comp_i / d x_j) for nonzero entries."""
        if self._jac is None:
            names = self.chart.coordinates
            jac = []
            for c in self.components:
                row = []
                if c.num:
                    fs = c.free_symbols
                    for j, n in enumerate(names):
                        if n in fs:
                            d = differentiate(c, n)
                            if d.num:
                                row.append((j, d))
                jac.append(row)
            self._jac = jac
        return self._jac

    def _combine(self, other, a=ONE, b=ONE):
        return type(self)(self.chart, [a * x + b * y for x, y in zip(self.components, other.components)])

    def __add__(self, other):
        return self._combine(other)

    def __sub__(self, other):
        return type(self)(self.chart, [x - y for x, y in zip(self.components, other.components)])

    def scale(self, f) -> "_Vec":
        f = as_expr(f)
        return type(self)(self.chart, [f * x if x.num else x for x in self.components])

    def __neg__(self):
        return type(self)(self.chart, [-x for x in self.components])


def _pretty(v, prefix) -> str:
    out = ""
    for n, c in zip(v.chart.coordinates, v.components):
        if not c.num:
            continue
        neg = c.n_terms() == 1 and str(c).startswith("-")
        a = -c if neg else c
        if a == ONE:
            t = f"{prefix}{n}"
        elif a.n_terms() == 1 and a.is_polynomial():
            t = f"{a}*{prefix}{n}"
        else:
            t = f"({a})*{prefix}{n}"
        if not out:
            out = "-" + t if neg else t
        else:
            out += (" - " if neg else " + ") + t
    return out or "0"


class VectorField(_Vec):
    """Component vector X = sum X^i d/dx^i on a chart."""

    def __call__(self, f: Expression) -> Expression:
        """Directional derivative X(f)."""
        f = as_expr(f)
        out = ZERO
        fs = f.free_symbols
        for n, c in zip(self.chart.coordinates, self.components):
            if c.num and n in fs:
                out = out + c * differentiate(f, n)
        return out

    def pretty(self) -> str:
        return _pretty(self, "d/d")

    __str__ = pretty


class OneForm(_Vec):
    """Covector w = sum w_i dx^i on a chart."""

    def __call__(self, X: VectorField) -> Expression:
        out = ZERO
        for a, b in zip(self.components, X.components):
            if a.num and b.num:
                out = out + a * b
        return out

    def pretty(self) -> str:
        return _pretty(self, "d")

    __str__ = pretty


def coordinate_field(chart: Chart, name: str) -> VectorField:
    return VectorField(chart, [ONE if n == name else ZERO for n in chart.coordinates])


def exterior_derivative(chart: Chart, f) -> OneForm:
    f = as_expr(f)
    return OneForm(chart, [differentiate(f, n) for n in chart.coordinates])


def bracket(X: VectorField, Y: VectorField) -> VectorField:
    """Lie bracket [X, Y]^i = X^j d_j Y^i - Y^j d_j X^i."""
    key = id(Y)
    hit = X._bc.get(key)
    if hit is not None and hit[0] is Y:
        return hit[1]
    jx, jy = X.jacobian(), Y.jacobian()
    xc, yc = X.components, Y.components
    out = []
    for i in range(len(xc)):
        acc = ZERO
        for j, d in jy[i]:
            if xc[j].num:
                acc = acc + xc[j] * d
        for j, d in jx[i]:
            if yc[j].num:
                acc = acc - yc[j] * d
        out.append(acc)
    res = VectorField(X.chart, out)
    X._bc[key] = (Y, res)
    neg = -res
    Y._bc[id(X)] = (X, neg)
    return res


class _Span:
    """Row space over the function field, kept in reduced row-echelon form."""

    element = _Vec

    def __init__(self, chart: Chart, generators, echelon: Echelon, sampler: Sampler, n_closed: int = 0):
        self.chart = chart
        self.generators = list(generators)
        self.echelon = echelon
        self.sampler = sampler
        # the first n_closed generators have all mutual brackets inside the span
        self.n_closed = n_closed

    @classmethod
    def span(cls, chart: Chart, elements: Sequence, sampler: Sampler | None = None):
        sampler = sampler or Sampler()
        elements = list(elements)
        ech = row_reduce([e.components for e in elements], chart.dim, sampler)
        gens = [elements[i] for i in ech.source]
        ech.source = list(range(len(gens)))
        return cls(chart, gens, ech, sampler)

    @classmethod
    def full(cls, chart: Chart, sampler: Sampler | None = None):
        n = chart.dim
        rows = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
        ech = Echelon(n, rows, list(range(n)), list(range(n)), [ONE] * n)
        gens = [cls.element(chart, r) for r in rows]
        return cls(chart, gens, ech, sampler or Sampler(), n)

    @classmethod
    def zero(cls, chart: Chart, sampler: Sampler | None = None):
        return cls(chart, [], Echelon(chart.dim), sampler or Sampler())

    @property
    def rank(self) -> int:
        return self.echelon.rank

    @property
    def corank(self) -> int:
        return self.chart.dim - self.rank

    def basis(self) -> list:
        return [self.element(self.chart, r) for r in self.echelon.rows]

    def contains(self, v) -> bool:
        return self.echelon.contains(list(v.components))

    def contains_span(self, other: "_Span") -> bool:
        return all(self.contains(g) for g in other.basis())

    def same_as(self, other: "_Span") -> bool:
        return self.rank == other.rank and self.contains_span(other)

    def reduce(self, v) -> list:
        return self.echelon.reduce(list(v.components))

    def extend(self, elements):
        """Span of self plus elements; returns (new span, list of added elements)."""
        elements = list(elements)
        if not elements:
            return self, []
        ech = row_reduce([e.components for e in elements], self.chart.dim, self.sampler, base=self.echelon)
        added = [elements[s] for s in ech.source[self.rank:]]
        ech.source = list(range(ech.rank))
        return type(self)(self.chart, self.generators + added, ech, self.sampler, self.n_closed), added

    def pretty(self) -> str:
        return "{" + ", ".join(b.pretty() for b in self.basis()) + "}"

    def __str__(self):
        return self.pretty()


class Distribution(_Span):
    element = VectorField


class Codistribution(_Span):
    element = OneForm


def annihilator(D: _Span) -> _Span:
    """The complementary span: forms killing D, or fields killed by a codistribution."""
    ech = D.echelon
    out_cls = Codistribution if isinstance(D, Distribution) else Distribution
    rows = []
    for j in ech.nonpivots():
        v = [ZERO] * ech.ncols
        v[j] = ONE
        for r, p in zip(ech.rows, ech.pivots):
            if r[j].num:
                v[p] = -r[j]
        rows.append(v)
    piv = ech.nonpivots()
    new = Echelon(ech.ncols, rows, piv, list(range(len(rows))), [ONE] * len(rows))
    gens = [out_cls.element(D.chart, r) for r in rows]
    return out_cls(D.chart, gens, new, D.sampler)


annihilator_of = annihilator


def intersect(A: _Span, B: _Span) -> _Span:
    """Intersection through annihilators: (A cap B) = (A^perp + B^perp)^perp."""
    if A.contains_span(B):
        return B
    if B.contains_span(A):
        return A
    sa, sb = annihilator(A), annihilator(B)
    total, _ = sa.extend(sb.basis())
    return annihilator(total)


def sum_of(A: _Span, B: _Span) -> _Span:
    return A.extend(B.basis())[0]


def derived_bundle(D: Distribution) -> Distribution:
    """D + [D, D]; brackets among already-closed generators are skipped."""
    g = D.generators
    new = []
    for b in range(len(g)):
        for a in range(b):
            if b < D.n_closed:
                continue
            v = bracket(g[a], g[b])
            if not v.is_zero():
                new.append(v)
    out, added = D.extend(new)
    if added:
        # an added bracket may be replaced by its remainder modulo D, which
        # differs from it by an element of D and is often much smaller
        gens = list(D.generators)
        for v in added:
            r = VectorField(D.chart, D.reduce(v))
            gens.append(r if _size(r) < _size(v) else v)
        out.generators = gens
    out.n_closed = len(D.generators)
    return out


def _size(v) -> int:
    return sum(c.n_terms() for c in v.components if c.num)


def is_involutive(D: Distribution) -> bool:
    g = D.generators
    for b in range(len(g)):
        for a in range(b):
            if b < D.n_closed:
                continue
            if not D.contains(bracket(g[a], g[b])):
                return False
    return True


is_integrable = is_involutive


def structure_coefficients(D: Distribution):
    """c[(a, b)] = residual of [X_a, X_b] modulo D on the non-pivot columns."""
    g = D.generators
    cols = D.echelon.nonpivots()
    out = {}
    for b in range(len(g)):
        for a in range(b):
            if b < D.n_closed:
                out[(a, b)] = [ZERO] * len(cols)
                continue
            r = D.reduce(bracket(g[a], g[b]))
            out[(a, b)] = [r[j] for j in cols]
    return out, cols


def cauchy_bundle(D: Distribution) -> Distribution:
    """Char D = {X in D : [X, D] in D}, via the nullspace of the structure matrix."""
    if D.rank == D.chart.dim:
        return D
    g = D.generators
    n = len(g)
    c, cols = structure_coefficients(D)
    s = len(cols)
    rows = []
    for beta in range(n):
        for k in range(s):
            row = [ZERO] * n
            for alpha in range(n):
                if alpha == beta:
                    continue
                if alpha < beta:
                    row[alpha] = c[(alpha, beta)][k]
                else:
                    row[alpha] = -c[(beta, alpha)][k]
            if any(e.num for e in row):
                rows.append(row)
    if not rows:
        return D
    null = nullspace(rows, n, D.sampler)
    if not null:
        return Distribution.zero(D.chart, D.sampler)
    fields = []
    for f in null:
        comps = [ZERO] * D.chart.dim
        for coef, X in zip(f, g):
            if coef.num:
                comps = [a + coef * b if b.num else a for a, b in zip(comps, X.components)]
        fields.append(VectorField(D.chart, comps))
    out = Distribution.span(D.chart, fields, D.sampler)
    # canonical generators: the reduced basis rows
    return Distribution(D.chart, out.basis(), out.echelon, D.sampler)


@dataclass
class DerivedType:
    entries: list
    k: int
    derived: list = field(default_factory=list)
    cauchy: list = field(default_factory=list)
    intersections: dict = field(default_factory=dict)
    intersection_integrable: dict = field(default_factory=dict)

    @property
    def m(self) -> list:
        return [e[0] for e in self.entries]

    @property
    def chi(self) -> list:
        return [e[-1] for e in self.entries]

    def chi_low(self, i: int) -> int:
        """chi^i_{i-1} for 1 <= i <= k-1."""
        return self.entries[i][1]


def derived_flag(D: Distribution) -> list:
    levels = [D]
    while True:
        try:
            nxt = derived_bundle(levels[-1])
        except RankConfirmationError as exc:
            raise NotTotallyRegular(len(levels), str(exc)) from None
        if nxt.rank == levels[-1].rank:
            return levels
        levels.append(nxt)


def refined_derived_type(D: Distribution, check_integrability: bool = True) -> DerivedType:
    levels = derived_flag(D)
    k = len(levels) - 1
    cauchy = []
    for i, L in enumerate(levels):
        if i == k:
            cauchy.append(L)
            continue
        try:
            cauchy.append(cauchy_bundle(L))
        except RankConfirmationError as exc:
            raise NotTotallyRegular(i, f"Cauchy bundle: {exc}") from None
    inter = {}
    integ = {}
    for i in range(1, k):
        try:
            inter[i] = intersect(levels[i - 1], cauchy[i])
        except RankConfirmationError as exc:
            raise NotTotallyRegular(i, f"intersection: {exc}") from None
        if check_integrability:
            integ[i] = is_involutive(inter[i])
    entries = [[levels[0].rank, cauchy[0].rank]]
    for i in range(1, k):
        entries.append([levels[i].rank, inter[i].rank, cauchy[i].rank])
    if k >= 1:
        entries.append([levels[k].rank, cauchy[k].rank])
    return DerivedType(entries, k, levels, cauchy, inter, integ)


def first_integral_candidates(C: Codistribution) -> list:
    """Rational constant covectors in C; each one is d of a linear function."""
    rows = [list(r) for r in C.echelon.rows]
    return constant_combinations(rows, C.chart.dim, C.sampler)
