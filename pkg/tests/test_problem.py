import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualma.analysis import scaling_identity_check, scaling_sweep
from dualma.problem import ParamsError, ProblemParams, RhsDomainError, RhsModel, classify, rhs_eval, scaling_exponent


@pytest.mark.parametrize("n,p,q,regime", [
    (3, 1, 3, "subcritical"), (3, 2, 2, "critical"), (3, 5, 3, "supercritical"),
    (3, 0, 3, "singular"), (3, -2, 3, "singular"), (3, 0.5, 2, None), (3, 2, 1.5, None), (3, 2, 2.5, "subcritical"),
])
def test_classify(n, p, q, regime):
    assert classify(n, p, q) == regime


def test_check_messages():
    with pytest.raises(ParamsError, match="no regime"):
        ProblemParams(3, 0.5, 2.0, 0.1).check()
    with pytest.raises(ParamsError, match="eps"):
        ProblemParams(3, 0.0, 3.0, 0.0).check()
    with pytest.raises(ParamsError):
        ProblemParams(4, 1.0, 3.0).check()
    assert ProblemParams(3, 0.0, 3.0, 1e-3).check().regime == "singular"


def test_rhs_eval_domain_errors():
    P = ProblemParams(3, 0.5, 3.0, 0.1)
    with pytest.raises(RhsDomainError):
        rhs_eval([[0.0, 0.0]], [0.2], [[0.0, 0.0]], P)
    with pytest.raises(RhsDomainError):
        rhs_eval([[0.0, 0.0]], [0.0], [[0.0, 0.0]], ProblemParams(3, 1.0, 4.0))


def test_scaling_factor_examples():
    assert scaling_exponent(ProblemParams(3, 1.0, 3.0)) == 0
    P = ProblemParams(3, 1.0, 4.0)
    x, u, Du = np.array([[0.2, -0.1]]), np.array([-0.7]), np.array([[0.3, 0.5]])
    assert rhs_eval(x, 0.5 * u, 0.5 * Du, P)[0] / rhs_eval(x, u, Du, P)[0] == pytest.approx(2.0, rel=1e-14)


def test_scaling_identity_10k():
    chk = scaling_identity_check(ProblemParams(3, 1.0, 4.0), 10_000, seed=7)
    assert chk.max_rel_dev <= 1e-12 and chk.flag


def test_scaling_sweep_flag():
    rows = scaling_sweep(trials=500)
    assert len(rows) == 25
    assert all(r["flag"] == r["expected"] for r in rows)
    assert max(r["max_rel_dev"] for r in rows) <= 1e-12


def test_scaling_check_deterministic():
    P = ProblemParams(3, 2.0, 5.0)
    assert scaling_identity_check(P, 100, 3) == scaling_identity_check(P, 100, 3)


@given(st.floats(-0.9, -0.05), st.floats(-1, 1), st.floats(-1, 1))
def test_linearization_matches_fd(u, gx, gy):
    P = ProblemParams(3, 1.5, 4.0, 0.2)
    x = np.array([[0.3, -0.4]])
    model = RhsModel.standard(type("G", (), {"x": x})(), P)
    grad = np.array([[gx, gy]])
    uv = np.array([u])

    def logr(uu, gg):
        us = np.sum(x * gg, axis=1) - uu
        return model.log_rhs(uu, np.sum(gg * gg, axis=1) + us**2)

    us = np.sum(x * grad, axis=1) - uv
    c_u, c_g = model.linearization(x, uv, grad, us, np.sum(grad**2, axis=1) + us**2)
    h = 1e-6
    fd_u = (logr(uv + h, grad) - logr(uv - h, grad)) / (2 * h)
    fd_gx = (logr(uv, grad + [[h, 0]]) - logr(uv, grad - [[h, 0]])) / (2 * h)
    assert c_u[0] == pytest.approx(fd_u[0], rel=1e-5, abs=1e-6)
    assert c_g[0, 0] == pytest.approx(fd_gx[0], rel=1e-5, abs=1e-6)
