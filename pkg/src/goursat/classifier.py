"""Type vectors, the derived-type identities and the Goursat bundle decision."""
from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import DerivedType, Distribution, NotTotallyRegular, is_involutive, refined_derived_type
from .singular import SingularResult, quotient_frame, resolvent_bundle, singular_subbundle


@dataclass(frozen=True)
class TypeVector:
    """tau = <rho_1, ..., rho_k>: rho_j chains of order j."""

    rho: tuple

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(int(r) for r in self.rho))
        if not self.rho or self.rho[-1] < 1 or any(r < 0 for r in self.rho):
            raise ValueError(f"invalid type vector {self.rho}")

    @property
    def k(self) -> int:
        return len(self.rho)

    @property
    def P(self) -> int:
        return sum(self.rho)

    @property
    def t(self) -> int:
        return sum(1 for r in self.rho if r)

    @property
    def pairs(self) -> list:
        """Pair form [(q_a, k_a)]: q_a chains of order k_a."""
        return [(r, j) for j, r in enumerate(self.rho, 1) if r]

    @property
    def dim(self) -> int:
        return 1 + sum((j + 1) * r for j, r in enumerate(self.rho, 1))

    @property
    def delta(self) -> list:
        """Delta_j = rho_j + ... + rho_k."""
        return [sum(self.rho[j:]) for j in range(self.k)]

    def derived_ranks(self) -> list:
        """m_0..m_k of the contact distribution C(tau)."""
        m = [1 + self.P]
        for d in self.delta:
            m.append(m[-1] + d)
        return m

    def __str__(self):
        return "<" + ",".join(map(str, self.rho)) + ">"

    @classmethod
    def parse(cls, text: str) -> "TypeVector":
        return cls(tuple(int(x) for x in text.strip().strip("<>").split(",")))


@dataclass
class Kinematics:
    velocity: list
    acceleration: list
    deceleration: list
    nu: list
    n: list
    N: list


def kinematics(m: list, dim: int) -> Kinematics:
    k = len(m) - 1
    if k < 1:
        raise ValueError("kinematics need derived length at least 1")
    vel = [m[j] - m[j - 1] for j in range(1, k + 1)]
    d2 = [vel[i] - vel[i - 1] for i in range(1, k)]
    acc = d2 + [vel[-1]]
    dec = [-x for x in d2] + [vel[-1]]
    nu = list(vel)
    n = [vel[j] - dec[j] for j in range(k)]  # n_j = Delta_j - rho_j = Delta_{j+1}
    N = [dim - x for x in m]
    return Kinematics(vel, acc, dec, nu, n, N)


@dataclass
class Identity:
    name: str
    lhs: int
    rhs: int

    @property
    def ok(self) -> bool:
        return self.lhs == self.rhs


def check_prop31(entries: list, tau: TypeVector) -> list:
    """Evaluate every derived-type identity of a partial prolongation of type tau."""
    m = [e[0] for e in entries]
    chi = [e[-1] for e in entries]
    k = len(m) - 1
    P = tau.P
    d = [None, None] + [tau.delta[j - 1] - tau.delta[j - 2] for j in range(2, tau.k + 1)]
    out = [Identity("m0 = 1+P", m[0], 1 + P)]
    if k >= 1:
        out.append(Identity("m1 = 1+2P", m[1], 1 + 2 * P))
    for l in range(2, k + 1):
        rhs = 1 + (1 + l) * P + sum((l + 1 - j) * d[j] for j in range(2, l + 1))
        out.append(Identity(f"m{l} formula", m[l], rhs))
    for j in range(k):
        out.append(Identity(f"chi^{j} = 2m{j}-m{j + 1}-1", chi[j], 2 * m[j] - m[j + 1] - 1))
    for i in range(1, k):
        out.append(Identity(f"chi^{i}_{i - 1} = m{i - 1}-1", entries[i][1], m[i - 1] - 1))
    return out


@dataclass
class GoursatVerdict:
    is_goursat: bool
    tau: TypeVector | None
    derived: DerivedType | None
    kin: Kinematics | None = None
    identities: list = field(default_factory=list)
    conditions: list = field(default_factory=list)  # (name, ok, detail) in evaluation order
    singular: SingularResult | None = None
    resolvent: Distribution | None = None
    notes: list = field(default_factory=list)

    @property
    def first_failure(self) -> str | None:
        for name, ok, detail in self.conditions:
            if not ok:
                return f"{name}: {detail}"
        return None

    @property
    def diagnostic(self) -> str:
        f = self.first_failure
        return f"not a Goursat bundle; first failed condition {f}" if f else "Goursat bundle"


def classify(D: Distribution, derived: DerivedType | None = None) -> GoursatVerdict:
    """Decide whether D is a Goursat bundle and, if so, of which type."""
    dt = derived or refined_derived_type(D)
    v = GoursatVerdict(False, None, dt)

    def cond(name, ok, detail=""):
        v.conditions.append((name, bool(ok), detail))
        return ok

    if not cond("derived length", dt.k >= 1,
                f"the bundle is involutive (derived length 0, rank {dt.m[0]})"):
        return v
    kin = kinematics(dt.m, D.chart.dim)
    v.kin = kin
    neg = [i for i, r in enumerate(kin.deceleration, 1) if r < 0]
    if not cond("deceleration", not neg,
                f"entry {neg[0] if neg else 0} of deceleration {kin.deceleration} is negative"):
        return v
    tau = TypeVector(tuple(kin.deceleration))
    v.tau = tau
    if dt.k == 1:
        v.notes.append("k=1 path: derived length one, handled through the Weber structure of the bundle itself")
    v.identities = check_prop31(dt.entries, tau)
    for ident in v.identities:
        if not cond(f"[i] {ident.name}", ident.ok, f"found {ident.lhs}, expected {ident.rhs}"):
            return v
    if not cond("[i] bracket generating", dt.m[-1] == D.chart.dim,
                f"top derived bundle has rank {dt.m[-1]} < dim {D.chart.dim}"):
        return v
    for i in range(1, dt.k):
        B = dt.intersections[i]
        integ = dt.intersection_integrable.get(i)
        if integ is None:
            integ = is_involutive(B)
        if not cond(f"[ii] Char V^({i})_{i - 1} integrable", integ, "bracket closure fails"):
            return v
        if not cond(f"[ii] Char V^({i})_{i - 1} rank", B.rank == dt.m[i - 1] - 1,
                    f"rank {B.rank}, expected {dt.m[i - 1] - 1}"):
            return v
    rho_k = tau.rho[-1]
    if rho_k > 1:
        base = dt.derived[dt.k - 1]
        frame = quotient_frame(base, dt.cauchy[dt.k - 1])
        sing = singular_subbundle(frame, rho_k)
        v.singular = sing
        if not cond("[iii] singular sub-bundle", sing.found, sing.reason):
            return v
        R = resolvent_bundle(frame, sing)
        v.resolvent = R
        if not cond("[iii] resolvent integrable", is_involutive(R), "resolvent bundle is not integrable"):
            return v
        if rho_k == 2:
            v.notes.append("Weber structure with q=2: integrability of the resolvent is the deciding test")
    else:
        cond("[iii] Weber structure", True, "not applicable (rho_k = 1)")
    v.is_goursat = True
    return v


def classify_safe(D: Distribution) -> GoursatVerdict:
    """classify, turning a regularity failure into a negative verdict."""
    try:
        return classify(D)
    except NotTotallyRegular as exc:
        v = GoursatVerdict(False, None, None)
        v.conditions.append(("regularity", False, str(exc)))
        return v
