import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from goursat.expr import ONE, ZERO, as_expr, const, ln, symbol
from goursat.linalg import (RankConfirmationError, Sampler, constant_combinations, generic_rank,
                            in_rowspace, nullspace)

x, y, z = symbol("x"), symbol("y"), symbol("z")


def E(rows):
    return [[as_expr(e) for e in r] for r in rows]


def test_identity_rank():
    I = E([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    res = generic_rank(I, 3, Sampler(0))
    assert res.rank == 3
    assert not res.certificate.is_zero()


def test_proportional_rows():
    assert generic_rank(E([[x, x * y], [1, y]]), 2, Sampler(0)).rank == 1


def test_polar_matrix_rank():
    a1, a2, a3 = symbol("a1"), symbol("a2"), symbol("a3")
    res = generic_rank([[-a2, a1, ZERO], [-a3, ZERO, a1]], 3, Sampler(1))
    assert res.rank == 2
    assert len(res.sample_points) >= 3


def test_nullspace_examples():
    assert nullspace(E([[1, 0], [0, 1]]), 2, Sampler(0)) == []
    ns = nullspace(E([[x, y, 0]]), 3, Sampler(0))
    assert len(ns) == 2
    for v in ns:
        assert (x * v[0] + y * v[1]).is_zero()
    zero = nullspace(E([[0, 0], [0, 0]]), 2, Sampler(0))
    assert sorted(tuple(map(str, v)) for v in zero) == [("0", "1"), ("1", "0")]


def test_in_rowspace():
    m = E([[x, y, 1], [0, 1, z]])
    assert in_rowspace(m, m[0], Sampler(0))
    combo = [x * a + b for a, b in zip(m[0], m[1])]
    assert in_rowspace(m, combo, Sampler(0))
    assert not in_rowspace(m, E([[1, 0, 0]])[0], Sampler(0))


def test_dt_not_in_planar_codistribution():
    # coordinates t, x, y, theta, w1, u1_1, u1_2 (dt in slot 0)
    dx = [ONE if i == 1 else ZERO for i in range(7)]
    dy = [ONE if i == 2 else ZERO for i in range(7)]
    dt = [ONE if i == 0 else ZERO for i in range(7)]
    assert not in_rowspace([dx, dy], dt, Sampler(0))


def test_constant_combinations_examples():
    n = 21
    def row(*idx_coef):
        r = [ZERO] * n
        for i, c in idx_coef:
            r[i - 1] = const(c)
        return r
    m = [row((1, 1)), row((2, 1), (11, -1)), row((10, 1))]
    got = constant_combinations(m, n, Sampler(3))
    assert len(got) == 3
    assert generic_rank(E(got) + m, n, Sampler(0)).rank == 3

    assert constant_combinations([[y, x]], 2, Sampler(0)) == []
    eye = constant_combinations(E([[1, 0, 0], [0, 1, 0]]), 3, Sampler(0))
    assert sorted(map(tuple, eye)) == [(0, 1, 0), (1, 0, 0)]


def test_constant_combination_hidden_in_function_rows():
    # rows x*e1 + e2 and e1: row space contains e1 and e2 although neither row is e2
    m = [[x, ONE, ZERO], [ONE, ZERO, ZERO], [ZERO, y, y * z]]
    got = constant_combinations(m, 3, Sampler(5))
    assert generic_rank(E(got), 3, Sampler(0)).rank == 3


def test_unsamplable_matrix_raises():
    # ln of a negative quantity is undefined at every real point
    bad = [[ln(-(x ** 2) - 1), ONE]]
    with pytest.raises(RankConfirmationError):
        generic_rank(bad, 2, Sampler(0, max_attempts=2))


def test_default_attempt_budget():
    assert Sampler(0).max_attempts == 10


def _fraction_rank(rows):
    M = [[Fraction(v) for v in r] for r in rows]
    rank, ncols = 0, len(M[0]) if M else 0
    for c in range(ncols):
        p = next((i for i in range(rank, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[rank], M[p] = M[p], M[rank]
        for i in range(len(M)):
            if i != rank and M[i][c] != 0:
                f = M[i][c] / M[rank][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[rank])]
        rank += 1
    return rank


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 10 ** 6))
def test_constant_rank_matches_exact_oracle(nr, nc, seed):
    rng = random.Random(seed)
    base = [[rng.randint(-3, 3) for _ in range(nc)] for _ in range(min(nr, rng.randint(1, nr)))]
    rows = list(base)
    while len(rows) < nr:
        a, b = rng.randint(-2, 2), rng.randint(-2, 2)
        r1, r2 = rng.choice(base), rng.choice(base)
        rows.append([a * u + b * v for u, v in zip(r1, r2)])
    rng.shuffle(rows)
    want = _fraction_rank(rows)
    assert want == sympy.Matrix(rows).rank()
    assert generic_rank(E(rows), nc, Sampler(seed)).rank == want


_POOL = [x, y, z, x * y, x + 1, y - z, x ** 2, ONE, const(2), ZERO]


def _random_function_matrix(rng, nr, nc):
    return [[rng.choice(_POOL) for _ in range(nc)] for _ in range(nr)]


def _sympy_rank(rows):
    X, Y, Z = sympy.symbols("x y z")
    M = sympy.Matrix([[sympy.sympify(str(e).replace("^", "**"), locals={"x": X, "y": Y, "z": Z}) for e in r]
                      for r in rows])
    return M.rank(simplify=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_function_rank_matches_sympy(nr, nc, seed):
    rng = random.Random(seed)
    m = _random_function_matrix(rng, nr, nc)
    assert generic_rank(m, nc, Sampler(seed)).rank == _sympy_rank(m)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_rank_invariant_under_row_scaling_and_swaps(seed):
    rng = random.Random(seed)
    m = _random_function_matrix(rng, 3, 4)
    r0 = generic_rank(m, 4, Sampler(seed)).rank
    scaled = [[e * (x + y + 2) for e in m[0]]] + m[1:]
    assert generic_rank(scaled, 4, Sampler(seed + 1)).rank == r0
    swapped = list(reversed(m))
    assert generic_rank(swapped, 4, Sampler(seed + 2)).rank == r0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_nullspace_is_annihilated(seed):
    rng = random.Random(seed)
    nc = rng.randint(2, 5)
    m = _random_function_matrix(rng, rng.randint(1, 3), nc)
    ns = nullspace(m, nc, Sampler(seed))
    assert len(ns) == nc - generic_rank(m, nc, Sampler(seed)).rank
    for v in ns:
        for r in m:
            assert sum((a * b for a, b in zip(r, v)), ZERO).is_zero()
    if ns:
        assert generic_rank(ns, nc, Sampler(seed + 3)).rank == len(ns)


def test_mismatched_row_length_rejected():
    with pytest.raises(ValueError):
        generic_rank(E([[1, 2], [1]]), 2, Sampler(0))
