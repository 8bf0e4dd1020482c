"""Problem files: the line-based .gsf format and its JSON equivalent.

    # comment
    coordinates: x1, x2, x3          distribution mode
    parameters: L                    optional symbolic constants
    field: c1, c2, c3                one generator, dense components
    field: x1 = c1, x3 = c3          one generator, sparse components
    time: t                          control mode
    states: x, y
    controls: u
    dynamics: x = f1, y = f2         (or dense, in state order)
    hint x = exp(x1)                 preferred first integrals
    chart z^{1,3}_0 = x6             chart functions for `verify`
    seed = 7

A line starting with whitespace continues the previous line.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .control import ControlSystem
from .expr import ZERO
from .geometry import Distribution, VectorField
from .linalg import Sampler
from .parse import Chart, ParseError, parse

CORPUS = Path(__file__).parent / "corpus"


class InputError(ValueError):
    pass


@dataclass
class Problem:
    chart: Chart
    fields: list
    system: ControlSystem | None = None
    hints: dict = field(default_factory=dict)
    seed: int | None = None
    chart_functions: dict = field(default_factory=dict)
    name: str = ""

    def distribution(self, sampler: Sampler | None = None) -> Distribution:
        return Distribution.span(self.chart, self.fields, sampler)

    def to_json(self) -> dict:
        out = {"parameters": list(self.chart.parameters)}
        if self.system is not None:
            s = self.system
            out.update(mode="control", time=s.time, states=list(s.states), controls=list(s.controls),
                       dynamics={k: str(s.dynamics[k]) for k in s.states})
        else:
            out.update(mode="distribution", coordinates=list(self.chart.coordinates),
                       fields=[{n: str(c) for n, c in zip(self.chart.coordinates, f.components) if c.num}
                               for f in self.fields])
        if self.hints:
            out["hints"] = {k: str(v) for k, v in self.hints.items()}
        if self.chart_functions:
            out["chart"] = {k: str(v) for k, v in self.chart_functions.items()}
        if self.seed is not None:
            out["seed"] = self.seed
        return out


def _names(text, what):
    items = [t.strip() for t in text.split(",") if t.strip()]
    for it in items:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", it):
            raise InputError(f"invalid {what} name '{it}'")
    return items


def _parse_expr(text, chart, where):
    try:
        return parse(text, chart)
    except ParseError as exc:
        raise InputError(f"{where}: {exc.message} at column {exc.position + 1} in '{text.strip()}'") from None


def _components(text, chart, names, where) -> dict:
    """Dense or sparse component list -> {name: Expression}."""
    parts = [p for p in text.split(",")]
    sparse = [re.match(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*=(.*)$", p, re.S) for p in parts]
    out = {}
    if all(sparse):
        for m in sparse:
            n = m.group(1)
            if n not in names:
                raise InputError(f"{where}: '{n}' is not one of {', '.join(names)}")
            if n in out:
                raise InputError(f"{where}: component '{n}' given twice")
            out[n] = _parse_expr(m.group(2), chart, where)
        return out
    if any(sparse):
        raise InputError(f"{where}: mix of sparse (name = expr) and dense components")
    if len(parts) != len(names):
        raise InputError(f"{where}: expected {len(names)} components, got {len(parts)}")
    for n, p in zip(names, parts):
        out[n] = _parse_expr(p, chart, where)
    return out


def _logical_lines(text):
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if raw[:1].isspace() and lines:
            lines[-1] = (lines[-1][0], lines[-1][1] + " " + line.strip())
        else:
            lines.append((lineno, line.strip()))
    return lines


def parse_hints(text: str, chart: Chart, where: str = "hints") -> dict:
    hints = {}
    for lineno, line in _logical_lines(text):
        m = re.fullmatch(r"hint\s+(\S+)\s*=\s*(.+)", line)
        if not m:
            if re.fullmatch(r"seed\s*=\s*-?\d+", line):
                continue
            raise InputError(f"{where} line {lineno}: expected 'hint <name> = <expr>'")
        hints[m.group(1)] = _parse_expr(m.group(2), chart, f"{where} line {lineno}")
    return hints


def parse_gsf(text: str, name: str = "<input>") -> Problem:
    sections = {}
    fields_txt = []
    hints_txt = []
    chart_txt = []
    seed = None
    for lineno, line in _logical_lines(text):
        m = re.fullmatch(r"hint\s+(\S+)\s*=\s*(.+)", line)
        if m:
            hints_txt.append((lineno, m.group(1), m.group(2)))
            continue
        m = re.fullmatch(r"chart\s+(.+?)\s*=\s*(.+)", line)
        if m:
            chart_txt.append((lineno, m.group(1), m.group(2)))
            continue
        m = re.fullmatch(r"seed\s*=\s*(-?\d+)", line)
        if m:
            seed = int(m.group(1))
            continue
        m = re.fullmatch(r"([a-z]+)\s*:\s*(.*)", line)
        if not m:
            raise InputError(f"{name} line {lineno}: cannot read '{line}'")
        key, val = m.group(1), m.group(2)
        if key == "field":
            fields_txt.append((lineno, val))
        elif key in ("coordinates", "parameters", "time", "states", "controls", "dynamics", "mode"):
            if key in sections:
                raise InputError(f"{name} line {lineno}: section '{key}' given twice")
            sections[key] = (lineno, val)
        else:
            raise InputError(f"{name} line {lineno}: unknown section '{key}'")
    data = {k: v[1] for k, v in sections.items()}
    params = _names(data.get("parameters", ""), "parameter")
    mode = data.get("mode", "control" if "dynamics" in data else "distribution").strip()
    if mode == "control":
        if fields_txt:
            raise InputError(f"{name}: 'field' lines are not allowed in a control system file")
        for req in ("time", "states", "controls", "dynamics"):
            if req not in data:
                raise InputError(f"{name}: control system needs a '{req}:' section")
        time = _names(data["time"], "time")
        if len(time) != 1:
            raise InputError(f"{name}: exactly one time variable expected")
        states = _names(data["states"], "state")
        controls = _names(data["controls"], "control")
        try:
            chart = Chart(time + states + controls, params)
        except ValueError as exc:
            raise InputError(f"{name}: {exc}") from None
        dyn = _components(data["dynamics"], chart, states, f"{name} line {sections['dynamics'][0]}")
        missing = [s for s in states if s not in dyn]
        if missing:
            raise InputError(f"{name}: no dynamics for {', '.join(missing)}")
        try:
            system = ControlSystem(time[0], states, controls, dyn, params)
        except ValueError as exc:
            raise InputError(f"{name}: {exc}") from None
        prob = Problem(chart, system.generators(), system)
    elif mode == "distribution":
        if "coordinates" not in data:
            raise InputError(f"{name}: missing 'coordinates:' section")
        coords = _names(data["coordinates"], "coordinate")
        try:
            chart = Chart(coords, params)
        except ValueError as exc:
            raise InputError(f"{name}: {exc}") from None
        if not fields_txt:
            raise InputError(f"{name}: no 'field:' lines")
        fields = []
        for lineno, val in fields_txt:
            comps = _components(val, chart, coords, f"{name} line {lineno}")
            fields.append(VectorField(chart, [comps.get(n, ZERO) for n in coords]))
        prob = Problem(chart, fields)
    else:
        raise InputError(f"{name}: unknown mode '{mode}'")
    for lineno, label, expr in hints_txt:
        prob.hints[label] = _parse_expr(expr, prob.chart, f"{name} line {lineno}")
    for lineno, label, expr in chart_txt:
        prob.chart_functions[label] = _parse_expr(expr, prob.chart, f"{name} line {lineno}")
    prob.seed = seed
    prob.name = name
    return prob


def parse_json_problem(obj: dict, name: str = "<json>") -> Problem:
    if not isinstance(obj, dict):
        raise InputError(f"{name}: top level must be an object")
    lines = []
    if obj.get("parameters"):
        lines.append("parameters: " + ", ".join(obj["parameters"]))
    mode = obj.get("mode", "control" if "dynamics" in obj else "distribution")
    lines.append(f"mode: {mode}")

    def comp_line(v):
        if isinstance(v, dict):
            return ", ".join(f"{k} = {e}" for k, e in v.items())
        return ", ".join(str(e) for e in v)

    try:
        if mode == "control":
            lines.append(f"time: {obj['time']}")
            lines.append("states: " + ", ".join(obj["states"]))
            lines.append("controls: " + ", ".join(obj["controls"]))
            lines.append("dynamics: " + comp_line(obj["dynamics"]))
        else:
            lines.append("coordinates: " + ", ".join(obj["coordinates"]))
            for f in obj["fields"]:
                lines.append("field: " + comp_line(f))
    except (KeyError, TypeError) as exc:
        raise InputError(f"{name}: missing or malformed entry {exc}") from None
    for k, v in (obj.get("hints") or {}).items():
        lines.append(f"hint {k} = {v}")
    for k, v in (obj.get("chart") or {}).items():
        lines.append(f"chart {k} = {v}")
    if obj.get("seed") is not None:
        lines.append(f"seed = {int(obj['seed'])}")
    return parse_gsf("\n".join(lines), name)


def resolve_path(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    alt = CORPUS / p.name
    if alt.exists():
        return alt
    raise InputError(f"input file '{path}' not found")


def load_problem(path: str) -> Problem:
    p = resolve_path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read '{path}': {exc}") from None
    if p.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{p.name}: invalid JSON ({exc})") from None
        return parse_json_problem(obj, p.name)
    return parse_gsf(text, p.name)


def to_gsf(prob: Problem, comment: str = "") -> str:
    """Serialize a Problem back into the line format."""
    out = [f"# {line}" for line in comment.splitlines()]
    if prob.chart.parameters:
        out.append("parameters: " + ", ".join(prob.chart.parameters))
    if prob.system is not None:
        s = prob.system
        out += [f"time: {s.time}", "states: " + ", ".join(s.states), "controls: " + ", ".join(s.controls)]
        out.append("dynamics: " + ", ".join(f"{k} = {s.dynamics[k]}" for k in s.states))
    else:
        out.append("coordinates: " + ", ".join(prob.chart.coordinates))
        for f in prob.fields:
            comps = [f"{n} = {c}" for n, c in zip(prob.chart.coordinates, f.components) if c.num]
            out.append("field: " + ", ".join(comps))
    for k, v in prob.hints.items():
        out.append(f"hint {k} = {v}")
    for k, v in prob.chart_functions.items():
        out.append(f"chart {k} = {v}")
    if prob.seed is not None:
        out.append(f"seed = {prob.seed}")
    return "\n".join(out) + "\n"
