"""Independent certification of contact charts and the static feedback test."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .classifier import GoursatVerdict, TypeVector
from .expr import as_expr, symbol
from .geometry import Distribution, annihilator, exterior_derivative
from .linalg import RankConfirmationError, generic_rank

_LABEL = re.compile(r"z\^\{(\d+),(\d+)\}_(\d+)")


def parse_label(label: str):
    """'z^{l,j}_s' -> (l, j, s); 'x' -> None."""
    m = _LABEL.fullmatch(label.strip())
    if not m:
        raise ValueError(f"chart label '{label}' is neither 'x' nor of the form z^{{l,j}}_s")
    return tuple(int(g) for g in m.groups())


def towers_from_map(functions: dict):
    """Split {label: expr} into x and {(l, j): [z_0..z_j]}; infer tau."""
    if "x" not in functions:
        raise ValueError("chart has no independent variable 'x'")
    cells = {}
    for lab, f in functions.items():
        if lab == "x":
            continue
        l, j, s = parse_label(lab)
        cells.setdefault((l, j), {})[s] = as_expr(f)
    towers = {}
    for (l, j), d in sorted(cells.items(), key=lambda t: (t[0][1], t[0][0])):
        if sorted(d) != list(range(j + 1)):
            raise ValueError(f"tower z^{{{l},{j}}} must have levels 0..{j}, got {sorted(d)}")
        towers[(l, j)] = [d[s] for s in range(j + 1)]
    k = max((j for _, j in towers), default=0)
    if k == 0:
        raise ValueError("chart has no z towers")
    rho = [0] * k
    for l, j in towers:
        rho[j - 1] += 1
    for j in range(1, k + 1):
        ls = sorted(l for l, jj in towers if jj == j)
        if ls != list(range(1, len(ls) + 1)):
            raise ValueError(f"tower indices at order {j} must be 1..{len(ls)}")
    return as_expr(functions["x"]), towers, TypeVector(tuple(rho))


@dataclass
class Certificate:
    tau: TypeVector
    count_ok: bool
    rank_ok: bool
    annihilation: list  # (generator index, label, ok)
    independence_rank: int
    dim: int
    side_conditions: list = field(default_factory=list)
    dependencies: dict = field(default_factory=dict)

    @property
    def annihilation_ok(self) -> bool:
        return all(ok for _, _, ok in self.annihilation)

    @property
    def independence_ok(self) -> bool:
        return self.independence_rank == self.dim

    @property
    def passed(self) -> bool:
        return self.count_ok and self.rank_ok and self.annihilation_ok and self.independence_ok

    def failures(self) -> list:
        out = []
        if not self.count_ok:
            out.append("function count differs from the manifold dimension")
        if not self.rank_ok:
            out.append(f"rank of the distribution is not 1 + P = {1 + self.tau.P}")
        for g, lab, ok in self.annihilation:
            if not ok:
                out.append(f"generator {g + 1} does not annihilate the contact form of {lab}")
        if not self.independence_ok:
            out.append(f"Jacobian has generic rank {self.independence_rank} < {self.dim}")
        return out


def certify(D: Distribution, functions: dict, side_conditions=()) -> Certificate:
    """Check that the map given by `functions` carries D onto C(tau).

    For every generator X and every contact form dz_s - z_{s+1} dx we test
    X(z_s) - z_{s+1} X(x) == 0; together with the Jacobian rank and the
    counts this forces the pushforward to equal C(tau).
    """
    x, towers, tau = towers_from_map(functions)
    chart = D.chart
    n_funcs = 1 + sum(len(t) for t in towers.values())
    ann = []
    for gi, X in enumerate(D.generators):
        Xx = X(x)
        for (l, j), zs in towers.items():
            for s in range(j):
                r = X(zs[s]) - zs[s + 1] * Xx
                ann.append((gi, f"z^{{{l},{j}}}_{s}", r.is_zero()))
    allf = [x] + [z for t in towers.values() for z in t]
    jac = [list(exterior_derivative(chart, f).components) for f in allf]
    try:
        rk = generic_rank(jac, chart.dim, D.sampler.spawn()).rank
    except RankConfirmationError:
        rk = -1
    deps = {"x": sorted(x.free_symbols)}
    for (l, j), zs in towers.items():
        for s, z in enumerate(zs):
            deps[f"z^{{{l},{j}}}_{s}"] = sorted(z.free_symbols)
    return Certificate(tau, n_funcs == chart.dim, D.rank == 1 + tau.P, ann, rk, chart.dim,
                       list(side_conditions), deps)


@dataclass
class FeedbackReport:
    k: int
    rho_k: int
    tested: str  # which codistribution dt was tested against
    codistribution: str
    membership: bool
    is_goursat: bool

    @property
    def condition_met(self) -> bool:
        return self.is_goursat and self.membership

    @property
    def conclusion(self) -> str:
        if self.condition_met:
            return "necessary condition met"
        return "necessary condition VIOLATED"


def feedback_check(D: Distribution, time: str, verdict: GoursatVerdict) -> FeedbackReport:
    """Necessary condition for static feedback equivalence to a Brunovsky form."""
    dt_form = exterior_derivative(D.chart, symbol(time))
    if not verdict.is_goursat:
        return FeedbackReport(verdict.derived.k if verdict.derived else 0, 0, "none", "", False, False)
    k = verdict.derived.k
    rho_k = verdict.tau.rho[-1]
    if rho_k == 1:
        C = annihilator(verdict.derived.cauchy[k - 1])
        name = f"Char K^({k - 1}) perp"
    else:
        C = annihilator(verdict.resolvent)
        name = "Upsilon"
    return FeedbackReport(k, rho_k, name, C.pretty(), C.contains(dt_form), True)


def static_feedback_inspect(functions: dict, states, controls, time: str) -> bool:
    """True when the chart has the shape t -> t, x -> Phi(t, x), u -> Psi(t, x, u)."""
    x, towers, _ = towers_from_map(functions)
    if x != symbol(time):
        return False
    lower = {time, *states}
    upper = lower | set(controls)
    for (l, j), zs in towers.items():
        for s, z in enumerate(zs):
            fs = set(z.free_symbols)
            allowed = upper if s == j else lower
            names = fs - allowed
            # symbolic constants are allowed anywhere
            if any(n in states or n in controls or n == time for n in names):
                return False
            if s < j and fs & set(controls):
                return False
    return True
