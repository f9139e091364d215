import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given
from hypothesis import strategies as st

from dualma.barriers import (BarrierError, boundary_values, calibrate, closed_form_det, comparison_check,
                             evaluate, fd_det, jet, make_subsolution, make_supersolution, sub_exponent,
                             verify_inequality)
from dualma.geometry import Disk
from dualma.grid import build_grid
from dualma.problem import ProblemParams

P = ProblemParams(3, 0.0, 3.0, 1e-4)


def test_exponents():
    assert sub_exponent(P) == pytest.approx(2 / 3)
    assert sub_exponent(ProblemParams(3, -1.0, 4.0, 1e-3)) == pytest.approx(3 / 5)
    spec, cusp = make_supersolution(P, 0.8)
    assert spec.b == pytest.approx(2 / 3) and cusp.s == pytest.approx(10 / 3)


def test_regime_guard():
    with pytest.raises(BarrierError):
        make_subsolution(ProblemParams(3, 1.0, 3.0), Disk(1.0), (1.0, 0.0), (-1.0, 0.0))


def test_subsolution_point_value():
    # v_a = eta^a (xi^2 - C) in the frame at z0 = (1, 0), inward normal (-1, 0)
    spec = replace(make_subsolution(P, Disk(1.0), (1.0, 0.0), (-1.0, 0.0)), C=10.0)
    eta, xi = 0.5, 0.25
    assert evaluate(spec, np.array([[1 - eta, xi]]))[0] == pytest.approx(eta ** (2 / 3) * (xi**2 - 10), rel=1e-12)


@given(st.floats(0.05, 0.9), st.floats(-0.5, 0.5), st.floats(1.0, 20.0))
def test_subsolution_det_closed_form(eta, xi, C):
    spec = replace(make_subsolution(P, Disk(1.0), (1.0, 0.0), (-1.0, 0.0)), C=C)
    x = np.array([[1 - eta, xi]])
    assert jet(spec, x).det[0] == pytest.approx(closed_form_det(spec, x)[0], rel=1e-10)


def test_fd_det_agreement():
    g = build_grid(Disk(1.0), 65)
    spec = make_subsolution(P, g.domain, (1.0, 0.0), (-1.0, 0.0))
    x = g.x[1.0 - g.x[:, 0] >= 0.05]
    rel = np.abs(fd_det(spec, x) - closed_form_det(spec, x)) / np.abs(closed_form_det(spec, x))
    assert rel.max() <= 1e-6


def test_supersolution_det_and_boundary():
    spec, cusp = make_supersolution(P, 0.8)
    x = np.array([[0.1, 0.2], [-0.3, 0.3], [0.0, 0.05]])
    assert np.allclose(jet(spec, x).det, closed_form_det(spec, x), rtol=1e-10)
    assert np.max(np.abs(boundary_values(spec))) <= 1e-12


def test_calibration_and_certificate(tmp_path):
    g = build_grid(Disk(1.0), 33)
    spec, cert = calibrate(make_subsolution(P, g.domain, (0.0, 1.0), (0.0, -1.0)), P, g)
    assert cert.passed and spec.certified
    # just below the calibrated constant the inequality fails somewhere
    assert not verify_inequality(replace(spec, C=0.9 * spec.C), P, g).passed
    cert.dump(tmp_path / "c.csv")
    text = (tmp_path / "c.csv").read_text().splitlines()
    assert text[0] == "node_index,x1,x2,margin" and any(t.startswith("# passed") for t in text)


def test_supersolution_calibration_shrinks_C():
    spec, cusp = make_supersolution(P, 0.8, C0=50.0)
    g = build_grid(cusp.hull(), 33)
    cal, cert = calibrate(spec, P, g)
    assert cert.passed and cal.C < 50.0
    assert not verify_inequality(replace(cal, C=1.1 * cal.C), P, g).passed


def test_comparison_check():
    g = build_grid(Disk(1.0), 17)
    a = -np.ones(g.size)
    assert comparison_check(a, a - 1, grid=g).passed
    bad = comparison_check(a - 1, a, grid=g)
    assert not bad.passed and bad.worst_gap == pytest.approx(-1.0)
