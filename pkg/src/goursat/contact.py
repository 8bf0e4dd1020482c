"""Construction of contact coordinates for a Goursat bundle.

Contact A (rho_k > 1) reads the top-order fundamental functions and the
independent variable off the annihilator of the resolvent bundle.  Contact B
(rho_k = 1) picks x among the first integrals of Char V^(k-1), builds the
bundle Pi^k and takes the remaining top-order function from its annihilator.
In both cases the lower orders come from the fundamental bundles of the
coframe filtration, and every chain is completed by repeated application of
the total derivative Z = Y / Y(x).
"""
from __future__ import annotations

import math

import itertools
from dataclasses import dataclass, field

import numpy as np

from .classifier import GoursatVerdict, TypeVector
from .expr import ONE, ZERO, Expression, as_expr, symbol
from .geometry import (Codistribution, Distribution, VectorField, annihilator, bracket,
                       exterior_derivative, intersect, is_involutive)
from .linalg import (RankConfirmationError, Sampler, constant_combinations, constant_envelope,
                     rationalize, sample_matrices, _numeric_rref)


class IntegralsNotFound(RuntimeError):
    def __init__(self, message: str, residual: Codistribution | None = None, needed: int = 0, found=()):
        super().__init__(message)
        self.residual = residual
        self.needed = needed
        self.found = list(found)


class ConstructionError(RuntimeError):
    pass


@dataclass
class FoundIntegral:
    func: Expression
    strategy: str


# ------------------------------------------------------------ integration


def antiderivative(e: Expression, name: str) -> Expression | None:
    """Term-by-term antiderivative in one variable, or None if a term is not covered."""
    if not e.is_polynomial():
        return None
    from .expr import COS, EXP, SIN, SYM, _atom_expr
    out = ZERO
    for m, c in e.num.items():
        const_part = as_expr(c)
        var_part = []
        for a, k in m:
            if name in a.free:
                var_part.append((a, k))
            else:
                const_part = const_part * _atom_expr(a, k)
        if not var_part:
            out = out + const_part * symbol(name)
            continue
        if len(var_part) != 1:
            return None
        a, k = var_part[0]
        if a.kind == SYM:
            out = out + const_part * symbol(name) ** (int(k) + 1) / (int(k) + 1)
        elif a.kind == EXP and a.arg == symbol(name):
            out = out + const_part * _atom_expr(a, k) / as_expr(k)
        elif a.kind == SIN and a.arg == symbol(name) and k == 1:
            out = out - const_part * _atom_expr(_cos_atom(a), 1)
        elif a.kind == COS and a.arg == symbol(name) and k == 1:
            from .expr import sin
            out = out + const_part * sin(a.arg)
        else:
            return None
    return out


def _cos_atom(a):
    from .expr import COS, _atom
    return _atom(COS, a.arg)


class IntegralFinder:
    """Strategy cascade for first integrals; counts every requested function."""

    def __init__(self, hints: dict | None = None, sampler: Sampler | None = None, poly_degree: int = 2):
        self.hints = dict(hints or {})
        self.sampler = sampler or Sampler()
        self.requests = 0
        self.calls = []
        self.poly_degree = poly_degree

    def find(self, C: Codistribution, count: int, modulo: Codistribution | None = None,
             prefer=(), accept=None, what: str = "") -> list:
        """Return `count` functions f with df in C, independent modulo `modulo`."""
        self.requests += count
        self.calls.append((what, count))
        chart = C.chart
        base = modulo if modulo is not None else Codistribution.zero(chart, C.sampler)
        state = {"span": base}
        found = []

        def consider(f, tag):
            if len(found) >= count:
                return
            f = as_expr(f)
            if f.is_constant():
                return
            if not (f.free_symbols <= set(chart.coordinates) | set(chart.parameters)):
                return
            df = exterior_derivative(chart, f)
            if df.is_zero() or not C.contains(df):
                return
            if state["span"].contains(df):
                return
            if accept is not None and not accept(f):
                return
            state["span"] = state["span"].extend([df])[0]
            found.append(FoundIntegral(f, tag))

        for f, tag in prefer:
            consider(f, tag)
        for label, h in self.hints.items():
            consider(h, f"hint {label}")
        for n in chart.coordinates:
            if len(found) >= count:
                break
            consider(symbol(n), "coordinate")
        if len(found) < count:
            for c in self._constant_combinations(C):
                consider(_linear(chart, c), "constant combination")
        if len(found) < count:
            for f in self._two_variable(C, state["span"]):
                consider(f, "two-variable integration")
        if len(found) < count:
            for f in self._polynomial_ansatz(C):
                consider(f, "polynomial ansatz")
        if len(found) < count:
            raise IntegralsNotFound(
                f"found {len(found)} of {count} first integrals for {what or 'a codistribution'}; "
                f"supply hints for the residual bundle", C, count, [x.func for x in found])
        return found

    def _constant_combinations(self, C):
        try:
            vecs = constant_combinations([list(r) for r in C.echelon.rows], C.chart.dim, self.sampler.spawn())
        except RankConfirmationError:
            return []
        out = []
        for v in vecs:
            nz = [i for i, x in enumerate(v) if x != 0]
            if not nz:
                continue
            last = v[nz[-1]]
            out.append([x / last for x in v])
        out.sort(key=lambda v: (sum(1 for x in v if x != 0), [abs(x) for x in v]))
        return out

    def _two_variable(self, C, span):
        chart = C.chart
        names = chart.coordinates
        out = []
        for row in C.echelon.rows:
            red = span.echelon.reduce(list(row)) if span.rank else list(row)
            active = [i for i, e in enumerate(red) if e.num]
            if not active or len(active) > 2:
                continue
            coeffs = [red[i] for i in active]
            for scale in [ONE] + [ONE / c for c in coeffs]:
                w = [c * scale for c in coeffs]
                f = _integrate_closed(w, [names[i] for i in active])
                if f is not None:
                    out.append(f)
                    break
        return out

    def _polynomial_ansatz(self, C):
        chart = C.chart
        ann = annihilator(C)
        if ann.rank == 0:
            return []
        active = sorted({n for X in ann.basis() for e in X.components for n in e.free_symbols
                         if n in chart.coordinates} |
                        {chart.coordinates[i] for X in ann.basis() for i, e in enumerate(X.components) if e.num})
        if len(active) > 14:
            return []
        monos = []
        for d in range(1, self.poly_degree + 1):
            for combo in itertools.combinations_with_replacement(active, d):
                e = ONE
                for n in combo:
                    e = e * symbol(n)
                monos.append(e)
        rows = [[X(m) for m in monos] for X in ann.basis()]
        try:
            mats, _ = sample_matrices(rows, self.sampler.spawn(), max(4, len(monos) // max(1, len(rows)) + 3))
        except RankConfirmationError:
            return []
        A = np.vstack(mats)
        u, s, vt = np.linalg.svd(A)
        rk = int(np.sum(s > 1e-9 * max(1.0, s[0])))
        null = vt[rk:]
        if null.shape[0] == 0 or null.shape[0] > 8:
            return []
        out = []
        for row in _numeric_rref(null):
            fr = [rationalize(float(x)) for x in row]
            if any(f is None for f in fr):
                continue
            f = ZERO
            for c, m in zip(fr, monos):
                if c:
                    f = f + as_expr(c) * m
            out.append(f)
        return out


def _integrate_closed(w, names):
    """Potential of the closed form w0 d(n0) + w1 d(n1), if the dictionary covers it."""
    if len(names) == 1:
        if w[0].free_symbols - {names[0]}:
            return None
        return antiderivative(w[0], names[0])
    a, b = w
    x, y = names
    if a.diff(y) != b.diff(x):
        return None
    F = antiderivative(a, x)
    if F is None:
        return None
    rest = b - F.diff(y)
    if rest.free_symbols & {x}:
        return None
    G = antiderivative(rest, y) if rest.num else ZERO
    if G is None:
        return None
    return F + G


def _linear(chart, c) -> Expression:
    f = ZERO
    for ci, n in zip(c, chart.coordinates):
        if ci:
            f = f + as_expr(ci) * symbol(n)
    return f


# ------------------------------------------------------------- structures


@dataclass
class FilterLevel:
    name: str
    bundle: Codistribution
    added: list  # generators added at this level (filtered basis)


@dataclass
class ContactChart:
    tau: TypeVector
    x: Expression
    Y_index: int
    Y: VectorField
    Z: VectorField
    functions: list  # (label, l, j, s, Expression)
    fundamentals: dict  # j -> list of FoundIntegral
    x_strategy: str
    algorithm: str
    filtration: list = field(default_factory=list)
    fundamental_bundles: dict = field(default_factory=dict)
    pi_k: Distribution | None = None
    side_conditions: list = field(default_factory=list)
    requests: int = 0

    def function_map(self) -> dict:
        return {lab: f for lab, l, j, s, f in self.functions}

    def towers(self) -> dict:
        out = {}
        for lab, l, j, s, f in self.functions:
            if j is not None:
                out.setdefault((l, j), []).append(f)
        return out


def z_label(l: int, j: int, s: int) -> str:
    return f"z^{{{l},{j}}}_{s}"


def _choose_section(D: Distribution, x: Expression):
    for i, Y in enumerate(D.generators):
        yx = Y(x)
        if yx.num:
            return i, Y, yx
    return None


def total_derivative(Y: VectorField, yx: Expression) -> VectorField:
    return Y.scale(ONE / yx)


def _codistribution_filtration(D: Distribution, verdict: GoursatVerdict, top: Codistribution, top_name: str):
    """The chain top = Upsilon (or Pi^k perp) in Xi^(k-1) in Xi^(k-1)_(k-2) ... in Xi^(1)_0."""
    dt = verdict.derived
    k = dt.k
    chain = [(top_name, top)]
    for j in range(k - 1, 0, -1):
        chain.append((f"Xi^({j})", annihilator(dt.cauchy[j])))
        chain.append((f"Xi^({j})_{j - 1}", annihilator(dt.intersections[j])))
    kin = verdict.kin
    N = kin.N
    delta = kin.velocity
    expected = {top_name: N[k - 1] + 1}
    for j in range(1, k):
        expected[f"Xi^({j})"] = N[j] + delta[j] + 1
        expected[f"Xi^({j})_{j - 1}"] = N[j - 1] + 1
    levels = []
    prev = None
    for name, C in chain:
        if C.rank != expected[name]:
            raise ConstructionError(f"filtration level {name} has rank {C.rank}, expected {expected[name]}")
        if prev is None:
            levels.append(FilterLevel(name, C, C.basis()))
        else:
            if not C.contains_span(prev.bundle):
                raise ConstructionError(f"filtration level {prev.name} is not contained in {name}")
            _, added = prev.bundle.extend(C.basis())
            levels.append(FilterLevel(name, C, added))
        prev = levels[-1]
    return levels


def _fundamental_bundles(levels, tau: TypeVector) -> dict:
    """Omega_j: generators added from Xi^(j) to Xi^(j)_(j-1)."""
    out = {}
    by_name = {lv.name: lv for lv in levels}
    for j in range(1, tau.k):
        if tau.rho[j - 1] == 0:
            continue
        lv = by_name[f"Xi^({j})_{j - 1}"]
        if len(lv.added) != tau.rho[j - 1]:
            raise ConstructionError(f"fundamental bundle of order {j} has rank {len(lv.added)}, expected {tau.rho[j - 1]}")
        out[j] = lv.added
    out[tau.k] = levels[0].added
    return out


def _lower_fundamentals(verdict, finder, levels) -> dict:
    tau = verdict.tau
    by_name = {lv.name: lv for lv in levels}
    out = {}
    for j in range(1, tau.k):
        r = tau.rho[j - 1]
        if r == 0:
            continue
        C = by_name[f"Xi^({j})_{j - 1}"].bundle
        mod = by_name[f"Xi^({j})"].bundle
        out[j] = finder.find(C, r, mod, what=f"fundamental functions of order {j}")
    return out


def _generate(D, verdict, x, x_strategy, sec, fundamentals, algorithm, levels, finder, pi_k=None) -> ContactChart:
    i, Y, yx = sec
    Z = total_derivative(Y, yx)
    tau = verdict.tau
    functions = [("x", None, None, None, x)]
    for j in range(1, tau.k + 1):
        for l, fi in enumerate(fundamentals.get(j, []), 1):
            f = fi.func
            functions.append((z_label(l, j, 0), l, j, 0, f))
            for s in range(1, j + 1):
                f = Y(f) / yx
                functions.append((z_label(l, j, s), l, j, s, f))
    side = []
    if yx != ONE:
        side.append(f"{yx} != 0")
    return ContactChart(tau, x, i, Y, Z, functions, fundamentals, x_strategy, algorithm, levels,
                        _fundamental_bundles(levels, tau), pi_k, side, finder.requests)


def contact_a(D: Distribution, verdict: GoursatVerdict, finder: IntegralFinder) -> ContactChart:
    tau = verdict.tau
    if tau.rho[-1] < 2:
        raise ConstructionError("Contact A needs rho_k > 1; use Contact B")
    R = verdict.resolvent
    ups = annihilator(R)
    levels = _codistribution_filtration(D, verdict, ups, "Upsilon")
    prefer = []
    if "x" in finder.hints:
        prefer.append((finder.hints["x"], "hint x"))
    top = finder.find(ups, tau.rho[-1] + 1, None, prefer=prefer, what="integrals of Upsilon")
    xi = None
    for idx, fi in enumerate(top):
        sec = _choose_section(D, fi.func)
        if sec is not None:
            xi = idx
            break
    if xi is None:
        raise ConstructionError("no generator Y with Y(x) != 0 for any integral of Upsilon")
    x = top[xi].func
    fundamentals = {tau.k: [fi for idx, fi in enumerate(top) if idx != xi]}
    fundamentals.update(_lower_fundamentals(verdict, finder, levels))
    return _generate(D, verdict, x, top[xi].strategy, sec, fundamentals, "Contact A", levels, finder)


def build_pi_k(D: Distribution, verdict: GoursatVerdict, Z: VectorField, x: Expression) -> Distribution:
    dt = verdict.derived
    k = dt.k
    chart = D.chart
    if k == 1:
        dx = exterior_derivative(chart, x)
        return intersect(D, annihilator(Codistribution.span(chart, [dx], D.sampler)))
    pi = dt.intersections[1]
    for _ in range(k):
        if pi.corank <= 2:
            break
        pi, _ = pi.extend([bracket(Z, g) for g in pi.basis()])
    return pi


def _x_candidates(D: Distribution, verdict: GoursatVerdict) -> list:
    """Linear candidates for x from the constant envelope of the contact form.

    The envelope is two dimensional; small integer combinations of its basis
    are ranked by the size of their smallest nonzero image under a generator
    of D, which favours the direction acting as the independent variable.
    """
    dt = verdict.derived
    V = dt.derived[dt.k - 1]
    theta = annihilator(V)
    env = constant_envelope([list(r) for r in theta.echelon.rows], D.chart.dim, D.sampler.spawn())
    if not env or len(env) != 2:
        return []
    scored = []
    for a in range(-2, 3):
        for b in range(-2, 3):
            if (a, b) <= (0, 0) or math.gcd(a, b) != 1:
                continue
            f = _linear(D.chart, [a * u + b * v for u, v in zip(*env)])
            sizes = [len(str(Y(f))) for Y in D.generators]
            sizes = [n for n, Y in zip(sizes, D.generators) if n and Y(f).num]
            if sizes:
                scored.append((min(sizes), abs(a) + abs(b), -a, -b, f))
    scored.sort(key=lambda t: t[:4])
    return [(t[-1], "contact-form envelope") for t in scored]


def contact_b(D: Distribution, verdict: GoursatVerdict, finder: IntegralFinder) -> ContactChart:
    tau = verdict.tau
    if tau.rho[-1] != 1:
        raise ConstructionError("Contact B needs rho_k = 1; use Contact A")
    dt = verdict.derived
    k = dt.k
    cx = annihilator(dt.cauchy[k - 1])
    prefer = []
    if "x" in finder.hints:
        prefer.append((finder.hints["x"], "hint x"))
    prefer.extend(_x_candidates(D, verdict))
    found = finder.find(cx, 1, None, prefer=prefer, accept=lambda f: _choose_section(D, f) is not None,
                        what="independent variable x")
    x = found[0].func
    sec = _choose_section(D, x)
    Z = total_derivative(sec[1], sec[2])
    pi = build_pi_k(D, verdict, Z, x)
    if pi.corank != 2:
        raise ConstructionError(f"Pi^{k} has corank {pi.corank}, expected 2")
    if not is_involutive(pi):
        raise ConstructionError(f"Pi^{k} is not integrable")
    dx = exterior_derivative(D.chart, x)
    pperp = annihilator(pi)
    if not pperp.contains(dx):
        raise ConstructionError(f"Pi^{k} does not annihilate dx")
    levels = _codistribution_filtration(D, verdict, pperp, f"Pi^{k} perp")
    xspan = Codistribution.span(D.chart, [dx], D.sampler)
    phi = finder.find(pperp, 1, xspan, what=f"fundamental function of order {k}")
    fundamentals = {k: phi}
    fundamentals.update(_lower_fundamentals(verdict, finder, levels))
    return _generate(D, verdict, x, found[0].strategy, sec, fundamentals, "Contact B", levels, finder, pi)


def build_contact_chart(D: Distribution, verdict: GoursatVerdict, hints: dict | None = None,
                        sampler: Sampler | None = None) -> ContactChart:
    if not verdict.is_goursat:
        raise ConstructionError("the distribution is not a Goursat bundle")
    finder = IntegralFinder(hints, sampler or D.sampler.spawn())
    if verdict.tau.rho[-1] > 1:
        return contact_a(D, verdict, finder)
    return contact_b(D, verdict, finder)
