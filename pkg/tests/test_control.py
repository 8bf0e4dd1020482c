import pytest

from goursat.classifier import classify
from goursat.control import ControlSystem, parse_prolong_spec, prolong_control
from goursat.expr import cos, sin, symbol, tan
from goursat.geometry import is_integrable, refined_derived_type
from goursat.linalg import Sampler

t, x, y, th, phi, u1, u2, L = (symbol(n) for n in ("t", "x", "y", "theta", "phi", "u1", "u2", "L"))


def car_system():
    return ControlSystem("t", ["x", "y", "theta", "phi"], ["u1", "u2"],
                         {"x": u1 * cos(th), "y": u1 * sin(th), "theta": u1 * tan(phi) / L, "phi": u2}, ["L"])


def test_car_distribution():
    S = car_system()
    D = S.to_distribution(Sampler(0))
    assert S.chart.coordinates == ("t", "x", "y", "theta", "phi", "u1", "u2")
    assert D.rank == 3
    drift = S.drift()
    assert drift(t) == 1
    assert drift(symbol("theta")) == u1 * tan(phi) / L
    assert refined_derived_type(D).entries == [[3, 0], [5, 2, 3], [6, 4, 4], [7, 7]]


def test_zero_dynamics_is_involutive():
    S = ControlSystem("t", ["x", "y"], ["u"], {"x": 0 * x, "y": 0 * y})
    D = S.to_distribution(Sampler(0))
    assert D.rank == 2 and is_integrable(D)


def test_single_integrator():
    S = ControlSystem("t", ["x"], ["u"], {"x": symbol("u")})
    dt = refined_derived_type(S.to_distribution(Sampler(0)))
    assert dt.entries == [[2, 0], [3, 3]]


def test_time_varying_dynamics_allowed():
    S = ControlSystem("t", ["x"], ["u"], {"x": t * symbol("u")})
    assert S.to_distribution(Sampler(0)).rank == 2


def test_prolong_car():
    P = prolong_control(car_system(), "u1", 2)
    assert P.states == ["x", "y", "theta", "phi", "u1", "u1_1"]
    assert P.controls == ["u1_2", "u2"]
    assert P.dynamics["u1"] == symbol("u1_1") and P.dynamics["u1_1"] == symbol("u1_2")
    D = P.to_distribution(Sampler(1))
    v = classify(D)
    assert v.derived.entries == [[3, 0], [5, 2, 2], [7, 4, 4], [9, 9]]
    assert str(v.tau) == "<0,0,2>"


def test_prolong_custom_names():
    P = prolong_control(car_system(), "u1", 2, ["w2", "v1"])
    assert P.controls == ["v1", "u2"]
    assert P.dynamics["u1"] == symbol("w2")


def test_prolong_rejects():
    with pytest.raises(ValueError):
        prolong_control(car_system(), "u1", 0)
    with pytest.raises(ValueError):
        prolong_control(car_system(), "x", 1)
    with pytest.raises(ValueError):
        prolong_control(car_system(), "u1", 2, ["a"])


def test_prolong_name_clash_is_suffixed():
    S = ControlSystem("t", ["x", "u1_1"], ["u1"], {"x": u1, "u1_1": x})
    P = prolong_control(S, "u1", 1)
    assert P.controls == ["u1_1_p"]
    assert P.notes and "renamed" in P.notes[0]


def test_projection_property():
    S = car_system()
    P = prolong_control(S, "u1", 3)
    # original dynamics untouched; the chain integrates down to the old control
    for s in S.states:
        assert P.dynamics[s] == S.dynamics[s]
    chain = ["u1", "u1_1", "u1_2", "u1_3"]
    for a, b in zip(chain, chain[1:]):
        assert P.dynamics[a] == symbol(b)
    assert chain[-1] in P.controls and "u1" in P.states


def test_system_validation():
    with pytest.raises(ValueError):
        ControlSystem("t", ["x"], ["x"], {"x": t})
    with pytest.raises(ValueError):
        ControlSystem("t", ["x", "y"], ["u"], {"x": t})
    with pytest.raises(ValueError):
        ControlSystem("t", ["x"], ["u"], {"x": t, "z": t})


def test_prolong_spec():
    assert parse_prolong_spec("u1:2") == ("u1", 2)
    for bad in ("u1", "u1:two"):
        with pytest.raises(ValueError):
            parse_prolong_spec(bad)
