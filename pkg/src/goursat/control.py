"""Control systems x' = f(t, x, u) as distributions, and control prolongation."""
from __future__ import annotations

from dataclasses import dataclass, field

from .expr import ONE, ZERO, as_expr, symbol
from .geometry import Distribution, VectorField
from .linalg import Sampler
from .parse import Chart


@dataclass
class ControlSystem:
    time: str
    states: list
    controls: list
    dynamics: dict  # state name -> Expression
    parameters: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def __post_init__(self):
        names = [self.time] + list(self.states) + list(self.controls)
        if len(set(names)) != len(names):
            raise ValueError("time, state and control names must be distinct")
        missing = [s for s in self.states if s not in self.dynamics]
        if missing:
            raise ValueError(f"no dynamics given for state(s) {', '.join(missing)}")
        extra = [s for s in self.dynamics if s not in self.states]
        if extra:
            raise ValueError(f"dynamics given for unknown state(s) {', '.join(extra)}")

    @property
    def chart(self) -> Chart:
        return Chart([self.time] + list(self.states) + list(self.controls), list(self.parameters))

    def drift(self) -> VectorField:
        chart = self.chart
        comps = []
        for n in chart.coordinates:
            if n == self.time:
                comps.append(ONE)
            elif n in self.dynamics:
                comps.append(as_expr(self.dynamics[n]))
            else:
                comps.append(ZERO)
        return VectorField(chart, comps)

    def generators(self) -> list:
        chart = self.chart
        out = [self.drift()]
        for u in self.controls:
            out.append(VectorField(chart, [ONE if n == u else ZERO for n in chart.coordinates]))
        return out

    def to_distribution(self, sampler: Sampler | None = None) -> Distribution:
        """K = span{d/dt + f^i d/dx^i, d/du^j}."""
        return Distribution.span(self.chart, self.generators(), sampler)


def prolong_control(system: ControlSystem, control: str, n: int, names=None) -> ControlSystem:
    """Make ``control`` a state with an integrator chain of length n.

    The old control keeps its name and becomes a state; its derivatives get
    the names ``<control>_1 .. <control>_n`` (or ``names``), the last one
    being the new control.
    """
    if control not in system.controls:
        raise ValueError(f"'{control}' is not a control of the system")
    if n < 1:
        raise ValueError("prolongation order must be at least 1")
    names = list(names) if names else [f"{control}_{i}" for i in range(1, n + 1)]
    if len(names) != n:
        raise ValueError(f"need {n} names for the prolongation chain")
    taken = {system.time, *system.states, *system.controls, *system.parameters}
    notes = list(system.notes)
    for i, nm in enumerate(names):
        new = nm
        while new in taken:
            new += "_p"
        if new != nm:
            notes.append(f"prolongation variable '{nm}' renamed to '{new}' (name clash)")
            names[i] = new
        taken.add(new)
    chain = [control] + names
    states = list(system.states) + chain[:-1]
    controls = [c if c != control else chain[-1] for c in system.controls]
    dyn = dict(system.dynamics)
    for a, b in zip(chain[:-1], chain[1:]):
        dyn[a] = symbol(b)
    return ControlSystem(system.time, states, controls, dyn, list(system.parameters), notes)


def parse_prolong_spec(text: str):
    """'u1:2' -> ('u1', 2)."""
    if ":" not in text:
        raise ValueError(f"prolongation spec '{text}' should look like control:order")
    c, n = text.rsplit(":", 1)
    try:
        k = int(n)
    except ValueError:
        raise ValueError(f"prolongation order '{n}' is not an integer") from None
    return c.strip(), k
