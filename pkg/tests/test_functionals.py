import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualma.functionals import (FunctionalError, coercivity_fit, eval_Ieps, eval_invariant_I0, eval_Jeps,
                                eval_JF, eval_Vq, eps_constant, evaluate_all, fd_variation_Vq,
                                first_variation_Vq, primitive_F, rayleigh_lambda, sobolev_ratio)
from dualma.grid import ScalarField, paraboloid
from dualma.problem import ProblemParams


def test_V3_paraboloid(disk129):
    assert eval_Vq(paraboloid(disk129), 3, 3) == pytest.approx(np.pi / 12, abs=1e-3)


def test_first_variation_paraboloid(disk129):
    u = paraboloid(disk129)
    psi = ScalarField(disk129, 1 - np.sum(disk129.x**2, axis=1))
    an = first_variation_Vq(u, psi, 3, 3)
    assert an == pytest.approx(-np.pi / 2, rel=1e-3)
    assert an == pytest.approx(fd_variation_Vq(u, psi, 3, 3), rel=0.02)


def test_V_q_homogeneous(disk65):
    u = paraboloid(disk65)
    for q in (2.0, 3.0, 4.5):
        assert eval_Vq(u.scaled(2.0), q, 3) == pytest.approx(2**q * eval_Vq(u, q, 3), rel=1e-12)


def test_positive_field_rejected(disk33):
    with pytest.raises(FunctionalError):
        eval_Vq(paraboloid(disk33).scaled(-1), 3, 3)


@given(st.floats(0.05, 20))
def test_I0_scale_invariant(t):
    u = paraboloid(_grid65())
    assert eval_invariant_I0(u.scaled(t), 3) == pytest.approx(eval_invariant_I0(u, 3), rel=1e-10)


_cache = {}


def _grid65():
    if "g" not in _cache:
        from dualma.geometry import Disk
        from dualma.grid import build_grid
        _cache["g"] = build_grid(Disk(1.0), 65)
    return _cache["g"]


def test_I0_field_independent(disk129):
    r2 = np.sum(disk129.x**2, axis=1)
    a = eval_invariant_I0(paraboloid(disk129), 3)
    b = eval_invariant_I0(ScalarField(disk129, (r2 - 1) * (1 + 0.5 * r2)), 3)
    assert a == pytest.approx(b, rel=0.02)


def test_J_and_I_differ_by_constant(disk65):
    P = ProblemParams(3, 1.5, 4.0, 0.2)
    u = paraboloid(disk65)
    assert eval_Ieps(u, P) - eval_Jeps(u, P) == pytest.approx(eps_constant(u, P), rel=1e-12)


def test_J_zero_paraboloid(disk129):
    # V_3 - int(-u) = pi/12 - pi/4 for p = 1, eps = 0
    assert eval_Jeps(paraboloid(disk129), ProblemParams(3, 1.0, 3.0)) == pytest.approx(-np.pi / 6, abs=1e-3)


def test_primitive_F_closed_form():
    u = np.array([-0.5, -1.0, -2.0])
    assert np.allclose(primitive_F(lambda s: 1 + s * s, u), -u - u**3 / 3)


def test_JF_constant_F_reduces_to_J(disk65):
    # J_F carries V_p, so the two agree for F = 1 when p = q = 1
    P = ProblemParams(3, 1.0, 1.0)
    u = paraboloid(disk65)
    assert eval_JF(u, P, lambda s: np.ones_like(s)) == pytest.approx(eval_Jeps(u, P), rel=1e-10)


@given(st.floats(0.1, 10))
def test_rayleigh_scale_invariant(t):
    g = _grid65()
    P = ProblemParams(3, 2.0, 2.0)
    u = paraboloid(g)
    assert rayleigh_lambda(u.scaled(t), P) == pytest.approx(rayleigh_lambda(u, P), rel=1e-10)


def test_sobolev_ratio_positive(disk65):
    assert sobolev_ratio(paraboloid(disk65), 3, 3) > 0


def test_coercivity_constants(disk65):
    P = ProblemParams(3, 5.0, 3.0, 0.0)
    fit = coercivity_fit(paraboloid(disk65), P, np.geomspace(0.1, 3, 12))
    assert fit.sigma > 0 and fit.delta > 0
    with pytest.raises(FunctionalError):
        coercivity_fit(paraboloid(disk65), ProblemParams(3, 1.0, 3.0), [1.0])


def test_evaluate_all(disk65):
    rep = evaluate_all(paraboloid(disk65), ProblemParams(3, 2.0, 2.0))
    d = rep.to_dict()
    assert d["rayleigh"] > 0 and d["Jeps"] is not None
