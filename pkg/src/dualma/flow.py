"""Parabolic gradient flow ``u_t = sqrt(1+|x|^2) (log det D^2u - log RHS)`` with
energy-descent step control and a priori monitors."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .elliptic import SolveReport, _eig, _try, implicit_step
from .functionals import eval_Jeps, eval_JF, primitive_F
from .grid import ScalarField, differentiate
from .problem import ProblemParams, RhsModel

HISTORY_HEADER = "t,J_eps,sup_grad,sup_ut,min_u,residual"


class FlowError(RuntimeError):
    pass


@dataclass
class FlowState:
    u: ScalarField
    t: float = 0.0
    dt: float = 0.0
    steps: int = 0
    rejected: int = 0
    energy: float = np.nan
    violations: int = 0
    ut: Optional[np.ndarray] = None
    # rows: t, J, sup|Du|, sup|u_t|, min u, residual, violations, rho ratio
    history: list = field(default_factory=list)
    stalled: bool = False

    def dump_history(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(HISTORY_HEADER + "\n")
            for row in self.history:
                fh.write(",".join(f"{v:.17g}" for v in row[:6]) + "\n")


@dataclass
class FlowConfig:
    scheme: str = "implicit"     # or "explicit"
    dt0: Optional[float] = None
    dt_min: float = 1e-14
    dt_max: float = 1e6
    grow: float = 1.2
    descent_tol: float = 1e-8
    tol_steady: float = 1e-6
    t_max: float = 1e6
    max_steps: int = 100_000
    tol_convex: float = -1e-8


class _Problem:
    """Right-hand side model and matching Lyapunov functional."""

    def __init__(self, params: ProblemParams, grid, F=None, dF=None):
        self.params = params
        self.F = F
        if F is None:
            self.model = RhsModel.standard(grid, params)
        else:
            self.model = RhsModel.with_F(grid, params, F, dF)
        self.C = np.sqrt(1.0 + np.sum(grid.x**2, axis=1))

    def energy(self, u: ScalarField, dq) -> float:
        if self.F is None:
            return eval_Jeps(u, self.params, dq)
        return eval_JF(u, self.params, self.F, dq)


def initial_dt(u: ScalarField, res) -> float:
    """``0.1 h^2 / max(sqrt(1+|x|^2) lambda_max((D^2u)^-1))``."""
    lam, _ = _eig(res.dq.hess)
    inv = 1.0 / np.maximum(lam[:, 0], 1e-10)
    C = np.sqrt(1.0 + np.sum(u.grid.x**2, axis=1))
    return 0.1 * u.grid.h**2 / float(np.max(C * inv))


def _record(state: FlowState, res):
    grad = np.sqrt(np.sum(res.dq.grad**2, axis=1))
    state.history.append((state.t, state.energy, float(grad.max()), float(np.max(np.abs(state.ut))),
                          float(state.u.values.min()), float(np.max(np.abs(res.R))), state.violations,
                          rho_ratio(state.u, res.dq)))


def flow_start(params: ProblemParams, u0: ScalarField, cfg: FlowConfig = FlowConfig(), F=None, dF=None):
    prob = _Problem(params, u0.grid, F, dF)
    res = _try(u0.values, u0.grid, prob.model, cfg.tol_convex)
    if res is None:
        raise FlowError("initial field is not admissible")
    state = FlowState(u0.copy(), dt=cfg.dt0 or initial_dt(u0, res))
    state.energy = prob.energy(u0, res.dq)
    state.violations = res.violations
    state.ut = prob.C * res.R
    _record(state, res)
    return state, prob, res


def flow_step(state: FlowState, prob: _Problem, res, cfg: FlowConfig = FlowConfig()):
    """One accepted step; halves ``dt`` on rejection and grows it by ``cfg.grow`` on acceptance."""
    u = state.u
    while state.dt >= cfg.dt_min:
        dt = state.dt
        if cfg.scheme == "explicit":
            delta = dt * state.ut
        else:
            try:
                with np.errstate(all="ignore"):
                    delta = implicit_step(u, prob.model, dt, res)
            except Exception:
                delta = np.full(u.grid.size, np.nan)
        new = _try(u.values + delta, u.grid, prob.model, cfg.tol_convex)
        if new is not None:
            cand = ScalarField(u.grid, u.values + delta)
            J = prob.energy(cand, new.dq)
            if J <= state.energy + cfg.descent_tol and new.violations <= state.violations:
                state.u, state.t, state.steps = cand, state.t + dt, state.steps + 1
                state.energy, state.violations = J, new.violations
                state.ut = prob.C * new.R
                state.dt = min(dt * cfg.grow, cfg.dt_max)
                _record(state, new)
                return state, new
        state.rejected += 1
        state.dt = 0.5 * dt
    state.stalled = True
    return state, res


def flow_run(params: ProblemParams, u0: ScalarField, cfg: FlowConfig = FlowConfig(),
             F: Optional[Callable] = None, dF: Optional[Callable] = None):
    """Iterate until ``||u_t||_inf < cfg.tol_steady``, ``t_max`` or a stall; returns ``(state, report)``."""
    t0 = time.perf_counter()
    params.check()
    if F is None and not params.q > params.p >= 1:
        raise FlowError("the flow needs the subcritical regime q > p >= 1 (or a critical run with F)")
    if F is not None and params.p != params.q:
        raise FlowError("F-flows are for the critical case p = q")
    state, prob, res = flow_start(params, u0, cfg, F, dF)
    while np.max(np.abs(state.ut)) >= cfg.tol_steady and state.t < cfg.t_max and state.steps < cfg.max_steps:
        state, res = flow_step(state, prob, res, cfg)
        if state.stalled:
            break
    sup_ut = float(np.max(np.abs(state.ut)))
    converged = sup_ut < cfg.tol_steady
    if converged:
        msg = "steady state reached"
    elif state.stalled:
        msg = f"step size fell below {cfg.dt_min:g}"
    else:
        msg = "t_max or step limit reached"
    rep = SolveReport(converged, float(np.max(np.abs(res.R))), state.steps, state.violations,
                      time.perf_counter() - t0, msg, state.stalled, {"J": state.energy},
                      [h[5] for h in state.history])
    return state, rep


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class FlowMonitors:
    descent: bool
    max_increase: float
    gradient: bool
    ut_bounds: bool
    rho_bound: bool
    min_rho_ratio: float
    non_collapse: bool
    checkpoint: int

    @property
    def passed(self) -> bool:
        return self.descent and self.gradient and self.ut_bounds and self.rho_bound and self.non_collapse


def flow_monitors(state: FlowState, descent_tol: float = 1e-8, factor: float = 10.0) -> FlowMonitors:
    """Energy descent, the 10x checkpoint bounds, the rho^2 lower bound and non-collapse.

    The checkpoint sits after the first 1% of accepted steps; the bounds on
    ``|Du|``, ``|u_t|`` and the sup-norm floor are checked from there on.
    """
    H = np.array([h[:6] for h in state.history])
    inc = np.diff(H[:, 1])
    max_inc = float(inc.max()) if inc.size else 0.0
    ck = max(1, int(np.ceil(0.01 * (len(H) - 1))))
    ck = min(ck, len(H) - 1)
    grad_ok = bool(np.all(H[ck:, 2] <= factor * H[ck, 2]))
    ut_ok = bool(np.all(H[ck:, 3] <= factor * H[ck, 3]))
    ratio = float(min(h[7] for h in state.history))
    norms = -H[ck:, 4]
    return FlowMonitors(bool(max_inc <= descent_tol), max_inc, grad_ok, ut_ok, bool(ratio >= 1.0), ratio,
                        bool(norms.min() >= 0.5 * norms[-1]), ck)


def rho_ratio(u: ScalarField, dq=None) -> float:
    """``min rho / (0.9 ||u / sqrt(1+|x|^2)||_inf)``; at least one when the lower bound holds."""
    dq = differentiate(u) if dq is None else dq
    level = np.max(np.abs(u.values) / np.sqrt(1.0 + np.sum(u.grid.x**2, axis=1)))
    return float(np.sqrt(dq.rho2.min()) / (0.9 * level))


def growth_check(F: Callable, lam: float, p: float, u_min: float, samples: int = 200) -> float:
    """Max of ``int_h^0 F - (lam/p)(-h)^p`` over ``h`` in ``[u_min, 0)``; reported, not enforced."""
    h = np.linspace(u_min, 0.0, samples + 1)[:-1]
    return float(np.max(primitive_F(F, h) - lam / p * (-h) ** p))
