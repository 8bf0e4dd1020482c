import json
import subprocess
import sys

import pytest

from goursat.cli import dumps, main, run_command
from goursat.parse import Chart, parse
from goursat.problem import load_problem


def run(*argv):
    return run_command(list(argv))


def test_analyze_example():
    code, rep, human = run("analyze", "example51.gsf")
    assert code == 0
    assert rep["derived_type"] == [[6, 0], [11, 5, 7], [14, 10, 10], [17, 13, 14], [19, 16, 16], [21, 21]]
    assert rep["verdict"]["type"] == "<2,0,1,0,2>"
    assert "Goursat bundle of type <2,0,1,0,2>" in human


def test_contact_example():
    code, rep, _ = run("contact", "example51.gsf", "--json")
    assert code == 0
    assert rep["certificate"]["passed"] is True
    assert rep["contact_chart"]["functions"]["z^{1,3}_1"] == "x7 - 2*x12 + 2"
    assert rep["contact_chart"]["first_integral_requests"] == 6


def test_feedback_car_and_prolonged():
    code, rep, human = run("feedback", "car.gsf")
    assert code == 0
    assert rep["verdict"]["type"] == "<1,0,1>"
    assert rep["feedback"]["conclusion"] == "necessary condition VIOLATED"
    assert "VIOLATED" in human
    code, rep, _ = run("feedback", "car.gsf", "--prolong", "u1:2")
    assert code == 0
    assert rep["verdict"]["type"] == "<0,0,2>"
    assert rep["feedback"]["conclusion"] == "necessary condition met"
    assert rep["feedback"]["static_feedback_inspect"] is True
    assert rep["prolongation"] == {"control": "u1", "order": 2, "notes": []}


def test_not_goursat_exit_code():
    code, rep, human = run("analyze", "example51_mutated.gsf")
    assert code == 2
    assert rep["verdict"]["is_goursat"] is False
    assert "chi^3_2" in rep["verdict"]["diagnostic"]
    assert run("contact", "example51_mutated.gsf")[0] == 2


def test_input_errors(tmp_path):
    bad = tmp_path / "bad.gsf"
    bad.write_text("coordinates: x, y\nfield: x = 1, y = q\n")
    code, rep, _ = run("analyze", str(bad))
    assert code == 1 and rep["error"]["kind"] == "InputError"
    assert run("analyze", str(tmp_path / "missing.gsf"))[0] == 1
    assert run("feedback", "example51.gsf")[0] == 1
    assert run("analyze", "car.gsf", "--prolong", "u9:2")[0] == 1


def test_missing_integrals_exit_code_and_hint(tmp_path):
    code, rep, human = run("contact", "chain_nonlinear.gsf")
    assert code == 3
    assert rep["error"]["kind"] == "IntegralsNotFound"
    assert rep["error"]["residual"]
    assert "hint" in human
    hints = tmp_path / "h.txt"
    hints.write_text("hint z = b + exp(c*d)\n")
    code, rep, _ = run("contact", "chain_nonlinear.gsf", "--hints", str(hints))
    assert code == 0 and rep["certificate"]["passed"]


def test_verify_exit_codes(tmp_path):
    code, rep, _ = run("contact", "car.gsf", "--json")
    chart = rep["contact_chart"]["functions"]
    good = tmp_path / "good.txt"
    good.write_text("".join(f"chart {k} = {v}\n" for k, v in chart.items()))
    assert run("verify", "car.gsf", "--chart", str(good))[0] == 0
    mutated = dict(chart)
    mutated["z^{1,3}_1"] = chart["z^{1,3}_1"] + " + x"
    badf = tmp_path / "bad.txt"
    badf.write_text("".join(f"chart {k} = {v}\n" for k, v in mutated.items()))
    code, rep, _ = run("verify", "car.gsf", "--chart", str(badf))
    assert code == 4
    assert rep["certificate"]["passed"] is False
    assert run("verify", "car.gsf")[0] == 1


def test_json_report_is_deterministic(capsys):
    outs = []
    for _ in range(2):
        main(["contact", "car.gsf", "--json", "--seed", "5"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    assert "timing" not in json.loads(outs[0])


def test_printed_expressions_reparse():
    prob = load_problem("car_prolonged.gsf")
    code, rep, _ = run("contact", "car_prolonged.gsf", "--json")
    chart = Chart(prob.chart.coordinates, prob.chart.parameters)
    fm = rep["contact_chart"]["functions"]
    for text in fm.values():
        e = parse(text, chart)
        assert str(e) == text
        assert parse(str(e), chart) == e


def test_dumps_sorted():
    assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


@pytest.mark.parametrize("args", [["chain", "3"], ["brunovsky", "2,0,1"], ["contact", "1,1", "--disguise",
                                                                            "--seed", "4"]])
def test_generate_round_trip(tmp_path, args):
    out = tmp_path / "g.gsf"
    assert main(["generate", *args, "-o", str(out)]) == 0
    code, rep, _ = run("contact", str(out))
    assert code == 0 and rep["certificate"]["passed"]


def test_generate_rejects_bad_spec(capsys):
    assert main(["generate", "chain", "0"]) == 1
    assert main(["generate", "brunovsky", "1", "--disguise"]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "goursat", "analyze", "car.gsf"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "<1,0,1>" in proc.stdout
