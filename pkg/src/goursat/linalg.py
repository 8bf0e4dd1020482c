"""Linear algebra over the field of rational expressions.

Rank decisions are proposed numerically at seeded random points and then
confirmed symbolically: the proposed pivot rows are put into reduced
row-echelon form with exact arithmetic, and every other row must reduce to
the zero vector.  A contradiction triggers a resample; after
``max_attempts`` failures a RankConfirmationError is raised.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .expr import ONE, ZERO, Expression, ExprError, SingularPointError, as_expr, eval_numeric


class RankConfirmationError(ArithmeticError):
    pass


class Sampler:
    """Seeded source of random sample points.  Passed explicitly, never global."""

    def __init__(self, seed: int = 0, max_attempts: int = 10, n_points: int = 3):
        self.seed = seed
        self.rng = random.Random(seed)
        self.max_attempts = max_attempts
        self.n_points = n_points

    def value(self) -> Fraction:
        while True:
            q = self.rng.randint(1, 13)
            p = self.rng.randint(-3 * q, 3 * q)
            v = Fraction(p, q)
            if v != 0 and abs(v) != 1:
                return v

    def point(self, names) -> dict:
        return {n: self.value() for n in sorted(names)}

    def spawn(self) -> "Sampler":
        return Sampler(self.rng.randrange(2**31), self.max_attempts, self.n_points)


def _free(rows) -> set:
    s = set()
    for r in rows:
        for e in r:
            if e.num:
                s |= e.free_symbols
    return s


def evaluate_rows(rows, point) -> np.ndarray:
    cache = {}
    out = np.zeros((len(rows), len(rows[0]) if rows else 0))
    for i, r in enumerate(rows):
        for j, e in enumerate(r):
            if e.num:
                out[i, j] = eval_numeric(e, point, cache)
    if not np.all(np.isfinite(out)):
        raise SingularPointError("non-finite value at sample point")
    return out


def sample_matrices(rows, sampler: Sampler, count: int):
    """Evaluate rows at ``count`` random points, skipping singular ones."""
    names = _free(rows)
    mats, pts = [], []
    tries = 0
    while len(mats) < count:
        tries += 1
        if tries > 20 * count + 20:
            raise RankConfirmationError("could not find regular sample points")
        pt = sampler.point(names)
        try:
            mats.append(evaluate_rows(rows, {k: float(v) for k, v in pt.items()}))
            pts.append(pt)
        except (SingularPointError, ExprError, OverflowError, ValueError):
            continue
    return mats, pts


def greedy_independent(mat: np.ndarray, tol: float = 1e-8) -> list:
    """Indices of rows independent of the earlier ones (modified Gram-Schmidt)."""
    basis = []
    chosen = []
    for i, row in enumerate(mat):
        nrm = np.linalg.norm(row)
        if nrm == 0:
            continue
        v = row / nrm
        for _ in range(2):
            for b in basis:
                v = v - np.dot(b, v) * b
        r = np.linalg.norm(v)
        if r > tol:
            basis.append(v / r)
            chosen.append(i)
    return chosen


def _complexity(e: Expression):
    return (0 if e.is_constant() else 1, e.n_terms(), len(str(e)) if e.n_terms() > 1 else 0)


@dataclass
class Echelon:
    """Reduced row-echelon basis of a row space over the function field."""

    ncols: int
    rows: list = field(default_factory=list)
    pivots: list = field(default_factory=list)
    source: list = field(default_factory=list)
    pivot_values: list = field(default_factory=list)
    points: list = field(default_factory=list)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, vec) -> list:
        r = list(vec)
        for b, p in zip(self.rows, self.pivots):
            c = r[p]
            if c.num:
                for j, bj in enumerate(b):
                    if bj.num:
                        r[j] = r[j] - c * bj
        return r

    def coefficients(self, vec) -> list:
        """Coefficients of vec in the RREF basis (valid when vec is in the span)."""
        return [vec[p] for p in self.pivots]

    def contains(self, vec) -> bool:
        return all(not e.num for e in self.reduce(vec))

    def insert(self, vec, source=None) -> bool:
        """Add vec if independent; returns True when the rank grew."""
        r = self.reduce(vec)
        nz = [j for j, e in enumerate(r) if e.num]
        if not nz:
            return False
        p = min(nz, key=lambda j: (_complexity(r[j]), j))
        pv = r[p]
        if pv != ONE:
            inv = ONE / pv
            r = [e * inv if e.num else e for e in r]
        r[p] = ONE
        for k, b in enumerate(self.rows):
            c = b[p]
            if c.num:
                self.rows[k] = [bj - c * rj if rj.num else bj for bj, rj in zip(b, r)]
        self.rows.append(r)
        self.pivots.append(p)
        self.source.append(source)
        self.pivot_values.append(pv)
        return True

    def nonpivots(self) -> list:
        ps = set(self.pivots)
        return [j for j in range(self.ncols) if j not in ps]

    def copy(self) -> "Echelon":
        return Echelon(self.ncols, [list(r) for r in self.rows], list(self.pivots),
                       list(self.source), list(self.pivot_values), list(self.points))

    def certificate(self) -> Expression:
        out = ONE
        for v in self.pivot_values:
            out = out * v
        return out


def row_reduce(rows: Sequence[Sequence[Expression]], ncols: int, sampler: Sampler | None = None,
               base: Echelon | None = None) -> Echelon:
    """RREF of the row space of ``rows`` (optionally on top of ``base``).

    ``source`` of each new basis row is its index in ``rows``.
    """
    sampler = sampler or Sampler()
    rows = [list(map(as_expr, r)) for r in rows]
    start = base.copy() if base is not None else Echelon(ncols)
    if not rows:
        return start
    for r in rows:
        if len(r) != ncols:
            raise ValueError("row length does not match the column count")
    last_error = None
    for attempt in range(sampler.max_attempts):
        allrows = list(start.rows) + rows
        try:
            mats, pts = sample_matrices(allrows, sampler, sampler.n_points)
        except RankConfirmationError as exc:
            last_error = exc
            continue
        best = None
        for m in mats:
            sel = greedy_independent(m)
            sel = [i - start.rank for i in sel if i >= start.rank]
            if best is None or len(sel) > len(best):
                best = sel
        ech = start.copy()
        ech.points = pts
        ok = True
        chosen = set()
        for i in best:
            if not ech.insert(rows[i], source=i):
                ok = False
                break
            chosen.add(i)
        if ok:
            for i, r in enumerate(rows):
                if i not in chosen and not ech.contains(r):
                    ok = False
                    break
        if ok:
            return ech
        last_error = RankConfirmationError(
            f"numeric rank proposal contradicted by exact reduction (attempt {attempt + 1})")
    raise RankConfirmationError(
        f"generic rank could not be confirmed after {sampler.max_attempts} attempts: {last_error}")


@dataclass
class GenericRankResult:
    rank: int
    pivot_rows: list
    pivot_cols: list
    pivot_values: list
    sample_points: list

    @property
    def certificate(self) -> Expression:
        """Product of the pivots used; its nonvanishing makes the rank valid."""
        out = ONE
        for v in self.pivot_values:
            out = out * v
        return out


def generic_rank(rows, ncols: int | None = None, sampler: Sampler | None = None) -> GenericRankResult:
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    ech = row_reduce(rows, ncols, sampler)
    return GenericRankResult(ech.rank, list(ech.source), list(ech.pivots), list(ech.pivot_values), ech.points)


def nullspace(rows, ncols: int, sampler: Sampler | None = None) -> list:
    """Basis of {v : rows . v = 0}, one vector per non-pivot column."""
    ech = row_reduce(rows, ncols, sampler)
    return nullspace_of_echelon(ech)


def nullspace_of_echelon(ech: Echelon) -> list:
    out = []
    for f in ech.nonpivots():
        v = [ZERO] * ech.ncols
        v[f] = ONE
        for r, p in zip(ech.rows, ech.pivots):
            if r[f].num:
                v[p] = -r[f]
        out.append(v)
    return out


def in_rowspace(rows, vec, sampler: Sampler | None = None) -> bool:
    ech = row_reduce(rows, len(vec), sampler)
    return ech.contains([as_expr(e) for e in vec])


def rationalize(x: float, max_den: int = 1000, tol: float = 1e-7) -> Fraction | None:
    f = Fraction(x).limit_denominator(max_den)
    if abs(float(f) - x) > tol * max(1.0, abs(x)):
        return None
    return f


def _numeric_rref(mat: np.ndarray, tol: float = 1e-8, from_right: bool = True) -> np.ndarray:
    m = mat.copy()
    nrows, ncols = m.shape
    cols = range(ncols - 1, -1, -1) if from_right else range(ncols)
    r = 0
    for c in cols:
        if r >= nrows:
            break
        piv = r + int(np.argmax(np.abs(m[r:, c])))
        if abs(m[piv, c]) < tol:
            continue
        m[[r, piv]] = m[[piv, r]]
        m[r] = m[r] / m[r, c]
        for k in range(nrows):
            if k != r:
                m[k] = m[k] - m[k, c] * m[r]
        r += 1
    return m[:r]


def _rational_rows(mat: np.ndarray, from_right: bool = True) -> list | None:
    out = []
    for row in _numeric_rref(mat, from_right=from_right):
        fr = [rationalize(float(x)) for x in row]
        if any(f is None for f in fr):
            return None
        out.append(fr)
    return out


def constant_combinations(rows, ncols: int, sampler: Sampler | None = None) -> list:
    """Rational constant vectors c lying in the row space at every point.

    The candidates are found numerically, rationalized, and each one is
    confirmed by exact membership in the row space.
    """
    sampler = sampler or Sampler()
    rows = [list(map(as_expr, r)) for r in rows]
    if not rows:
        return []
    ech = row_reduce(rows, ncols, sampler)
    if ech.rank == 0:
        return []
    mats, _ = sample_matrices(ech.rows, sampler, max(4, ncols - ech.rank + 3))
    blocks = []
    for m in mats:
        u, s, vt = np.linalg.svd(m)
        rk = int(np.sum(s > 1e-9 * s[0]))
        blocks.append(vt[rk:])
    stacked = np.vstack(blocks) if blocks else np.zeros((0, ncols))
    if stacked.shape[0] == 0:
        null = np.eye(ncols)
    else:
        u, s, vt = np.linalg.svd(stacked)
        rk = int(np.sum(s > 1e-8 * max(1.0, s[0])))
        null = vt[rk:]
    if null.shape[0] == 0:
        return []
    cand = _rational_rows(null)
    if cand is None:
        return []
    out = []
    for c in cand:
        vec = [as_expr(x) for x in c]
        if ech.contains(vec):
            out.append(c)
    return out


def constant_envelope(rows, ncols: int, sampler: Sampler | None = None) -> list | None:
    """Smallest constant subspace containing every row at every point.

    Returns a rational basis, or None when no exact envelope was confirmed.
    """
    sampler = sampler or Sampler()
    rows = [list(map(as_expr, r)) for r in rows]
    if not rows:
        return []
    mats, _ = sample_matrices(rows, sampler, max(4, ncols))
    parts = []
    for m in mats:
        for r in m:
            n = np.linalg.norm(r)
            if n > 0:
                parts.append(r / n)
    if not parts:
        return []
    stacked = np.array(parts)
    basis = _rational_rows(stacked, from_right=False)
    if basis is None:
        return None
    const_rows = [[as_expr(x) for x in b] for b in basis]
    ech = row_reduce(const_rows, ncols, sampler)
    for r in rows:
        if not ech.contains(r):
            return None
    return basis
