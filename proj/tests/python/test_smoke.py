"""Python smoke tests for the compiled extension."""

import json

import pytest

lsc = pytest.importorskip("lsc")

DEVICE = json.dumps({"width": 12, "height": 12, "code_distance": 5})


def test_generate_and_compile_adder():
    circuit = lsc.generate("adder", {"n": "2"})
    out = lsc.compile_circuit(circuit, DEVICE)
    assert out.total_cycles > 0
    assert out.spacetime_volume >= out.total_cycles
    report = json.loads(out.report_json)
    assert report["total_cycles"] == out.total_cycles
    assert report["physical"]["cycles"] == out.total_cycles * 5
    assert "R" in out.layout_ascii and "B" in out.layout_ascii


def test_stream_validates():
    circuit = lsc.generate("cnot-network", {"n": "4", "rounds": "3", "seed": "7"})
    out = lsc.compile_circuit(circuit, DEVICE)
    violations = lsc.validate_stream(out.stream_jsonl, out.layout_json, circuit)
    assert violations == []


def test_classical_simulation_matches_integers():
    circuit = lsc.generate("adder", {"n": "3"})
    bits = lsc.classical_simulate(
        circuit,
        {"a[0]": 1, "a[1]": 1, "a[2]": 0, "b[0]": 1, "b[1]": 0, "b[2]": 1},
    )
    total = sum(bits[f"b[{i}]"] << i for i in range(4))
    assert total == 3 + 5


def test_estimator_monotone_in_channels():
    circuit = lsc.generate("cnot-network", {"n": "6", "rounds": "4", "seed": "1"})
    slots = {}
    one = lsc.estimate_cycles(circuit, 1, slots)
    three = lsc.estimate_cycles(circuit, 3, slots)
    assert three <= one


def test_rz_synthesis_exact_cases():
    import math

    assert lsc.synthesize_rz(math.pi / 4, 1e-10) == ["t"]
    assert lsc.synthesize_rz(1e-12, 1e-10) == []


def test_packaged_extern_round_trip():
    circuit = lsc.generate("t-factory-15-1", {"level": "1"})
    out = lsc.compile_circuit(circuit, DEVICE)
    packaged = json.loads(out.extern_json)
    assert packaged["ops"][0]["outputs"] == 1
    assert packaged["ops"][0]["cycles"] == out.total_cycles


def test_parse_errors_surface_as_exceptions():
    with pytest.raises(Exception):
        lsc.compile_circuit("{not json", DEVICE)
