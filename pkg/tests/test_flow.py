import numpy as np
import pytest

from dualma.elliptic import base_shape, newton_solve
from dualma.flow import (HISTORY_HEADER, FlowConfig, FlowError, flow_monitors, flow_run, flow_start,
                         flow_step, growth_check)
from dualma.grid import paraboloid
from dualma.problem import ProblemParams

SUB = ProblemParams(3, 1.0, 4.0, 0.1)


def test_steady_state_does_not_move(disk33):
    P = ProblemParams(3, 1.0, 3.0)
    state, rep = flow_run(P, paraboloid(disk33))
    assert rep.converged and state.steps == 0
    assert np.max(np.abs(state.ut)) < 1e-9


def test_flow_matches_newton(disk33):
    state, rep = flow_run(SUB, base_shape(disk33))
    assert rep.converged
    un, _ = newton_solve(SUB, state.u)
    assert np.max(np.abs(un.values - state.u.values)) <= 1e-4
    mon = flow_monitors(state)
    assert mon.passed


def test_first_steps_strictly_descend(disk33):
    state, prob, res = flow_start(SUB, base_shape(disk33), FlowConfig())
    for _ in range(20):
        state, res = flow_step(state, prob, res)
    J = [h[1] for h in state.history]
    assert np.all(np.diff(J) < 0)


def test_explicit_scheme_descends(disk33):
    cfg = FlowConfig(scheme="explicit", max_steps=200)
    state, rep = flow_run(SUB, base_shape(disk33), cfg)
    J = np.array([h[1] for h in state.history])
    assert np.all(np.diff(J) <= 1e-8)


def test_regime_guard(disk33):
    with pytest.raises(FlowError):
        flow_run(ProblemParams(3, 2.0, 2.0), base_shape(disk33))


def test_critical_F_flow(disk33):
    P = ProblemParams(3, 2.0, 2.0)
    F = lambda s: 1.0 + 0.1 * np.exp(s)
    state, rep = flow_run(P, base_shape(disk33).scaled(0.5), FlowConfig(max_steps=300), F=F)
    J = np.array([h[1] for h in state.history])
    assert np.all(np.diff(J) <= 1e-8)
    assert np.isfinite(growth_check(F, 3.7, 2.0, state.u.values.min()))


def test_history_dump(disk33, tmp_path):
    state, _ = flow_run(SUB, base_shape(disk33), FlowConfig(max_steps=5))
    state.dump_history(tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == HISTORY_HEADER and len(lines) == len(state.history) + 1
