"""Generators for the test corpus: partial prolongations, Brunovsky forms, disguises."""
from __future__ import annotations

import random

from .classifier import TypeVector
from .control import ControlSystem
from .expr import ONE, ZERO, as_expr, const, symbol
from .geometry import VectorField
from .parse import Chart
from .problem import Problem


def contact_names(tau: TypeVector, x: str = "x") -> list:
    """[x, z1_1_0, z1_1_1, ...]: z{l}_{j}_{s} is z^{l,j}_s."""
    names = [x]
    for j, r in enumerate(tau.rho, 1):
        for l in range(1, r + 1):
            names += [f"z{l}_{j}_{s}" for s in range(j + 1)]
    return names


def contact_label(name: str) -> str:
    l, j, s = name[1:].split("_")
    return f"z^{{{l},{j}}}_{s}"


def contact_fields(tau: TypeVector, x: str = "x"):
    """Chart and frame of C(tau): d/dx + sum z_{s+1} d/dz_s, and d/dz_j for each tower."""
    names = contact_names(tau, x)
    chart = Chart(names)
    idx = chart.index
    total = [ZERO] * chart.dim
    total[idx(x)] = ONE
    tops = []
    for j, r in enumerate(tau.rho, 1):
        for l in range(1, r + 1):
            for s in range(j):
                total[idx(f"z{l}_{j}_{s}")] = symbol(f"z{l}_{j}_{s + 1}")
            top = [ZERO] * chart.dim
            top[idx(f"z{l}_{j}_{j}")] = ONE
            tops.append(VectorField(chart, top))
    return chart, [VectorField(chart, total)] + tops


def contact_problem(tau: TypeVector, seed: int | None = None) -> Problem:
    chart, fields = contact_fields(tau)
    funcs = {"x": symbol("x")}
    for n in chart.coordinates[1:]:
        funcs[contact_label(n)] = symbol(n)
    return Problem(chart, fields, seed=seed, chart_functions=funcs, name=f"C{tau}")


def goursat_chain(k: int) -> Problem:
    """The Goursat normal form on R^(k+2): C<0,...,0,1>."""
    if k < 1:
        raise ValueError("chain length must be at least 1")
    p = contact_problem(TypeVector((0,) * (k - 1) + (1,)))
    p.name = f"goursat_chain_{k}"
    return p


def brunovsky(tau: TypeVector, time: str = "t") -> Problem:
    """Brunovsky normal form as a control system: each chain z_0' = z_1, ..., z_{j-1}' = z_j."""
    states, controls, dyn = [], [], {}
    for j, r in enumerate(tau.rho, 1):
        for l in range(1, r + 1):
            for s in range(j):
                n = f"z{l}_{j}_{s}"
                states.append(n)
                dyn[n] = symbol(f"z{l}_{j}_{s + 1}")
            controls.append(f"z{l}_{j}_{j}")
    sys = ControlSystem(time, states, controls, dyn)
    funcs = {"x": symbol(time)}
    for n in states + controls:
        funcs[contact_label(n)] = symbol(n)
    return Problem(sys.chart, sys.generators(), system=sys, chart_functions=funcs,
                   name="brunovsky_" + "_".join(map(str, tau.rho)))


def random_type(rng: random.Random, max_dim: int = 12, max_k: int = 4) -> TypeVector:
    """A random type vector with dim C(tau) <= max_dim."""
    while True:
        k = rng.randint(1, max_k)
        rho = [rng.choice((0, 0, 1, 1, 2)) for _ in range(k - 1)] + [rng.choice((1, 1, 2, 3))]
        tau = TypeVector(tuple(rho))
        if tau.dim <= max_dim:
            return tau


def _unimodular(rng: random.Random, n: int, shears: int | None = None):
    """Integer matrix with integer inverse: a permutation times a few +-1 shears."""
    A = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(n if shears is None else shears):
        i, j = rng.sample(range(n), 2)
        c = rng.choice((-1, 1))
        A[i] = [a + c * b for a, b in zip(A[i], A[j])]
    perm = list(range(n))
    rng.shuffle(perm)
    return [A[p] for p in perm]


def _inverse(A):
    from fractions import Fraction

    n = len(A)
    M = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for c in range(n):
        p = next(r for r in range(c, n) if M[r][c] != 0)
        M[c], M[p] = M[p], M[c]
        piv = M[c][c]
        M[c] = [v / piv for v in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return [row[n:] for row in M]


def disguise(prob: Problem, rng: random.Random, prefix: str = "y", mix_functions: bool = True):
    """Random affine coordinate change y = A x + b and unitriangular frame mixing.

    Returns the disguised Problem and the map old name -> expression in the
    new coordinates, so known charts can be carried along.
    """
    chart = prob.chart
    n = chart.dim
    A = _unimodular(rng, n)
    b = [rng.randint(-2, 2) for _ in range(n)]
    Ainv = _inverse(A)
    new = Chart([f"{prefix}{i + 1}" for i in range(n)], list(chart.parameters))
    ys = [symbol(v) for v in new.coordinates]
    back = {}
    for i, old in enumerate(chart.coordinates):
        e = ZERO
        for j in range(n):
            if Ainv[i][j]:
                e = e + const(Ainv[i][j]) * (ys[j] - b[j])
        back[old] = e
    moved = []
    for X in prob.fields:
        comps = [c.subs(back) if c.num else ZERO for c in X.components]
        moved.append(VectorField(new, [sum((const(A[i][j]) * comps[j] for j in range(n) if A[i][j]), ZERO)
                                       for i in range(n)]))
    m = len(moved)
    mixed = []
    for i in range(m):
        V = moved[i]
        for j in range(i):
            c = rng.choice((-1, 0, 1, 2))
            coef = const(c)
            if mix_functions and rng.random() < 0.3:
                coef = coef + ys[rng.randrange(n)]
            if coef.num:
                V = V + moved[j].scale(coef)
        mixed.append(V)
    order = list(range(m))
    rng.shuffle(order)
    out = Problem(new, [mixed[i] for i in order], seed=prob.seed, name=prob.name + "_disguised")
    out.chart_functions = {k: as_expr(v).subs(back) for k, v in prob.chart_functions.items()}
    return out, back
