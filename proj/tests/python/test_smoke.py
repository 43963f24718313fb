import math
from pathlib import Path

import pytest

import finsler

METRICS = Path(__file__).resolve().parents[2] / "data" / "metrics"
FUNK2 = {"dimension": 2, "family": "funk", "funk_a": [0.0, 0.0]}


def test_metric_from_dict_and_path():
    m = finsler.Metric(FUNK2)
    assert m.dimension == 2
    assert m.spec["family"] == "funk"
    # Funk at the origin reduces to the Euclidean norm.
    assert m.F([0.0, 0.0], [3.0, 4.0]) == pytest.approx(5.0, abs=1e-14)
    assert finsler.Metric(str(METRICS / "sphere2.json")).dimension == 2


def test_errors_carry_codes():
    with pytest.raises(finsler.FinslerError) as info:
        finsler.Metric({"dimension": 2, "family": "nope"})
    assert info.value.code == "SpecError"
    with pytest.raises(finsler.FinslerError) as info:
        finsler.Metric(FUNK2).F([2.0, 0.0], [1.0, 0.0])
    assert info.value.code == "OutOfChart"
    with pytest.raises(finsler.FinslerError) as info:
        finsler.run_suite(finsler.Metric(FUNK2), "nope")
    assert info.value.code == "BadConfig"


def test_curvature_and_fits():
    m = finsler.Metric(FUNK2)
    b = finsler.curvature(m, [0.1, -0.2], [0.6, 0.8], full=True)
    assert b["tensors"]["C"]["dim"] == 2
    assert finsler.fit_relative_stretch(m, samples=5)["c"] == pytest.approx(-1.0, abs=1e-6)
    assert finsler.flag_curvature(m, [0.1, -0.2], [0.6, 0.8], [1.0, 0.0]) == pytest.approx(-0.25, abs=1e-6)
    frame = finsler.berwald_frame(m, [0.1, -0.2], [0.6, 0.8])
    assert frame["mu"] is not None
    assert finsler.classify(finsler.Metric(str(METRICS / "euclidean2.json")), samples=3)["flags"]["berwald"]["value"]


def test_geodesic_and_parallelogram():
    sphere = finsler.Metric(str(METRICS / "sphere2.json"))
    g = finsler.geodesic(sphere, [0.0, 0.0], [1.0, 0.0], 1.0, samples=10, unit_speed=True)
    assert len(g["times"]) == 11
    # Unit-speed great circle through the origin: x = tan(s/2).
    assert g["x"][-1][0] == pytest.approx(math.tan(0.5), abs=1e-8)
    e = finsler.parallelogram(sphere, [0.0, 0.0], [1, 0], [0.3, 1], [0.4, 0.7], [0.2, 0.1])
    assert max(e["defect"]) <= 1e-9


def test_suites():
    assert "identities" in finsler.suite_names()
    r = finsler.run_suite(finsler.Metric(FUNK2), "identities", samples=3)
    assert r["pass"] and r["rows"]
