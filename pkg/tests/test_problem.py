import json

import pytest

from goursat.cli import run_command
from goursat.problem import InputError, load_problem, parse_gsf, parse_json_problem, to_gsf

CORPUS = ["example51.gsf", "car.gsf", "car_prolonged.gsf", "goursat_chain_3.gsf", "brunovsky_2_0_1.gsf",
          "contact_1_1_1_disguised.gsf", "chain_nonlinear.gsf"]


def _same(a, b):
    assert a.chart == b.chart
    assert a.fields == b.fields
    assert a.hints == b.hints and a.chart_functions == b.chart_functions and a.seed == b.seed


@pytest.mark.parametrize("name", CORPUS)
def test_gsf_round_trip(name):
    p = load_problem(name)
    _same(p, parse_gsf(to_gsf(p), name))


@pytest.mark.parametrize("name", CORPUS)
def test_json_round_trip(name):
    p = load_problem(name)
    _same(p, parse_json_problem(json.loads(json.dumps(p.to_json())), name))


def test_json_file_accepted(tmp_path):
    f = tmp_path / "car.json"
    f.write_text(json.dumps(load_problem("car.gsf").to_json()))
    code, rep, _ = run_command(["analyze", str(f), "--json"])
    assert code == 0 and rep["verdict"]["type"] == "<1,0,1>"


def test_report_input_echo_reloads(tmp_path):
    code, rep, _ = run_command(["analyze", "car.gsf", "--json"])
    f = tmp_path / "echo.json"
    f.write_text(json.dumps(rep["input"]))
    code2, rep2, _ = run_command(["analyze", str(f), "--json", "--seed", str(rep["seed"])])
    assert code2 == 0 and rep2["derived_type"] == rep["derived_type"]


def test_continuation_lines():
    p = parse_gsf("coordinates: x, y,\n  z\nfield: x = 1\nfield: y = 1,\n  z = x\n")
    assert p.chart.coordinates == ("x", "y", "z") and len(p.fields) == 2


@pytest.mark.parametrize("text, fragment", [
    ("field: x = 1\n", "coordinates"),
    ("coordinates: x\n", "no 'field:'"),
    ("coordinates: x\nfield: y = 1\n", "y"),
    ("coordinates: x, x\nfield: x = 1\n", "x repeated"),
    ("coordinates: x\nfield: x = 1\nbogus: 3\n", "unknown section"),
    ("time: t\nstates: x\ncontrols: u\ndynamics: x = u\nfield: x = 1\n", "not allowed"),
    ("time: t\nstates: x, y\ncontrols: u\ndynamics: x = u\n", "no dynamics"),
    ("coordinates: x\nfield: x = 2.5\n", "decimal"),
])
def test_input_errors(text, fragment):
    with pytest.raises(InputError) as info:
        parse_gsf(text, "t.gsf")
    assert fragment in str(info.value)


def test_json_errors():
    with pytest.raises(InputError):
        parse_json_problem([1, 2])
    with pytest.raises(InputError):
        parse_json_problem({"mode": "control", "time": "t"})
