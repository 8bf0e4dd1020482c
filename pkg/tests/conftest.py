from dataclasses import dataclass

import pytest

from goursat.classifier import classify
from goursat.contact import build_contact_chart
from goursat.linalg import Sampler
from goursat.problem import load_problem


@dataclass
class Case:
    problem: object
    D: object
    verdict: object
    chart: object = None


def _case(name, build_chart=True, **kw):
    p = load_problem(name)
    D = p.distribution(Sampler(p.seed or 0))
    v = classify(D)
    ch = build_contact_chart(D, v, p.hints) if build_chart and v.is_goursat else None
    return Case(p, D, v, ch)


@pytest.fixture(scope="session")
def ex51():
    return _case("example51.gsf")


@pytest.fixture(scope="session")
def car():
    return _case("car.gsf")


@pytest.fixture(scope="session")
def pcar():
    return _case("car_prolonged.gsf")


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call with (number, ok, detail)."""
    lines = request.config.stash[_ACCEPTANCE]
    done = []

    def record(number, ok, detail=""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")
        lines.append((number, line))
        done.append(number)
        print(line)
        return ok

    yield record
    if not done:
        name = request.node.name
        number = int(name.split("_")[2]) if name.startswith("test_criterion_") else 0
        lines.append((number, f"criterion {number}: FAIL  no result recorded (error or skip)"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
