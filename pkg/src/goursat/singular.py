"""Structure tensor of D / Char D, polar matrices and the singular sub-bundle.

For a distribution D with Cauchy bundle C, the quotient bundle D/C carries
the skew form delta(X, Y) = [X, Y] mod D with values in TM/D.  In the frame
of complement fields X_a and transversal columns k, delta is stored as
c[k][a][b].  The polar matrix of e = sum a^i X_i is
sigma(e)[k][b] = sum_a e^a c[k][a][b].
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .expr import ONE, ZERO, as_expr, symbol
from .geometry import Distribution, VectorField, bracket, cauchy_bundle
from .linalg import generic_rank, nullspace, row_reduce


@dataclass
class QuotientFrame:
    ambient: Distribution
    cauchy: Distribution
    complement: list  # representatives of a frame of D / Char D
    columns: list  # transversal coordinate columns (non-pivots of D)
    c: list  # c[k][a][b]

    @property
    def n(self) -> int:
        return len(self.complement)

    @property
    def s(self) -> int:
        return len(self.columns)

    def delta(self, e, f) -> list:
        """delta(e, f) for coefficient vectors e, f over the complement frame."""
        out = []
        for ck in self.c:
            acc = ZERO
            for a, ea in enumerate(e):
                if not ea.num:
                    continue
                for b, fb in enumerate(f):
                    if fb.num and ck[a][b].num:
                        acc = acc + ea * fb * ck[a][b]
            out.append(acc)
        return out

    def lift(self, e) -> VectorField:
        comps = [ZERO] * self.ambient.chart.dim
        for ea, X in zip(e, self.complement):
            if ea.num:
                comps = [x + ea * y if y.num else x for x, y in zip(comps, X.components)]
        return VectorField(self.ambient.chart, comps)


def quotient_frame(D: Distribution, C: Distribution | None = None) -> QuotientFrame:
    C = C if C is not None else cauchy_bundle(D)
    ext, _ = C.extend(D.generators)
    complement = [VectorField(D.chart, r) for r in ext.echelon.rows[C.rank:]]
    cols = D.echelon.nonpivots()
    n, s = len(complement), len(cols)
    c = [[[ZERO] * n for _ in range(n)] for _ in range(s)]
    for b in range(n):
        for a in range(b):
            r = D.reduce(bracket(complement[a], complement[b]))
            for k, j in enumerate(cols):
                if r[j].num:
                    c[k][a][b] = r[j]
                    c[k][b][a] = -r[j]
    return QuotientFrame(D, C, complement, cols, c)


def polar_matrix(frame: QuotientFrame, e) -> list:
    """sigma(e)[k][b] = sum_a e^a c[k][a][b]."""
    out = []
    for ck in frame.c:
        row = []
        for b in range(frame.n):
            acc = ZERO
            for a, ea in enumerate(e):
                if ea.num and ck[a][b].num:
                    acc = acc + as_expr(ea) * ck[a][b]
            row.append(acc)
        out.append(row)
    return out


def aux_symbols(frame: QuotientFrame, count: int, stem: str = "a") -> list:
    taken = set(frame.ambient.chart.coordinates) | set(frame.ambient.chart.parameters)
    while any(f"{stem}{i}" in taken for i in range(1, count + 1)):
        stem = "_" + stem
    return [f"{stem}{i}" for i in range(1, count + 1)]


def generic_polar_matrix(frame: QuotientFrame, names=None) -> list:
    names = names or aux_symbols(frame, frame.n)
    return polar_matrix(frame, [symbol(a) for a in names])


def degree(frame: QuotientFrame, e) -> int:
    m = polar_matrix(frame, e)
    if not m or not any(x.num for row in m for x in row):
        return 0
    return generic_rank(m, frame.n, frame.ambient.sampler.spawn()).rank


@dataclass
class SingularResult:
    found: bool
    reason: str = ""
    basis: list = field(default_factory=list)  # coefficient vectors over the complement frame
    fields: list = field(default_factory=list)  # lifted vector fields
    checks: dict = field(default_factory=dict)
    drift: list | None = None  # coefficient vector of the adapted X_0


def singular_subbundle(frame: QuotientFrame, expected: int) -> SingularResult:
    """Locate the rank-`expected` singular sub-bundle of a Weber structure.

    Candidate: the sum of the kernels of the skew matrices c[k].  It is then
    checked to be delta-isotropic, of degree one along each basis direction,
    of the expected rank, and maximal (delta(X_0, .) maps it onto TM/D).
    """
    res = SingularResult(False)
    n, s = frame.n, frame.s
    res.checks["shape"] = n == expected + 1 and s == expected
    if not res.checks["shape"]:
        res.reason = f"quotient has rank {n} with {s} transversal directions, expected {expected + 1} and {expected}"
        return res
    sampler = frame.ambient.sampler
    vecs = []
    for ck in frame.c:
        vecs.extend(nullspace(ck, n, sampler.spawn()))
    if not vecs:
        res.checks["rank"] = False
        res.reason = "structure matrices have trivial kernels"
        return res
    ech = row_reduce(vecs, n, sampler.spawn())
    basis = [list(r) for r in ech.rows]
    res.checks["rank"] = len(basis) == expected
    if not res.checks["rank"]:
        res.reason = f"singular candidate has rank {len(basis)}, expected {expected}"
        return res
    iso = True
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            if any(x.num for x in frame.delta(basis[i], basis[j])):
                iso = False
    res.checks["isotropic"] = iso
    if not iso:
        res.reason = "structure tensor does not vanish on the singular candidate"
        return res
    res.checks["degree_one"] = all(degree(frame, w) == 1 for w in basis)
    if not res.checks["degree_one"]:
        res.reason = "a singular candidate direction has polar degree other than one"
        return res
    drift = None
    for a in range(n):
        e = [ONE if i == a else ZERO for i in range(n)]
        if not ech.contains(e):
            drift = e
            break
    m = [[frame.delta(drift, w)[k] for w in basis] for k in range(s)]
    res.checks["maximal"] = generic_rank(m, len(basis), sampler.spawn()).rank == expected
    if not res.checks["maximal"]:
        res.reason = "delta(X0, .) does not map the singular candidate onto the transversal"
        return res
    res.found = True
    res.basis = basis
    res.drift = drift
    res.fields = [frame.lift(w) for w in basis]
    return res


def resolvent_bundle(frame: QuotientFrame, sing: SingularResult) -> Distribution:
    """Char D plus the lifted singular directions."""
    if not sing.found:
        raise ValueError(f"no singular sub-bundle to build a resolvent from: {sing.reason}")
    return frame.cauchy.extend(sing.fields)[0]


def _invert(mat) -> list:
    n = len(mat)
    aug = [list(r) + [ONE if i == j else ZERO for j in range(n)] for i, r in enumerate(mat)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col].num)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = ONE / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col].num:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def adapted_polar_matrix(frame: QuotientFrame, sing: SingularResult, names=None) -> list:
    """Polar matrix in the frame (X_0, B_1..B_q) with transversals [X_0, B_k]."""
    frame_vecs = [sing.drift] + sing.basis
    names = names or aux_symbols(frame, len(frame_vecs))
    t = [frame.delta(sing.drift, w) for w in sing.basis]  # columns of the new transversal frame
    tmat = [[t[j][k] for j in range(len(t))] for k in range(frame.s)]
    tinv = _invert(tmat)
    e = [symbol(a) for a in names]
    out = []
    for kk in range(frame.s):
        row = []
        for b, fb in enumerate(frame_vecs):
            acc = ZERO
            for a, fa in enumerate(frame_vecs):
                if a == b:
                    continue
                d = frame.delta(fa, fb)
                val = ZERO
                for k in range(frame.s):
                    if tinv[kk][k].num and d[k].num:
                        val = val + tinv[kk][k] * d[k]
                if val.num:
                    acc = acc + e[a] * val
            row.append(acc)
        out.append(row)
    return out
