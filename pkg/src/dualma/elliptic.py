"""Damped Newton for ``log det_c D^2u - log RHS(x, u, Du) = 0`` with zero Dirichlet data.

``det_c`` uses Hessian eigenvalues clamped at 1e-10.  The Jacobian is assembled
from the same Shortley-Weller stencils as the residual.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve

from .functionals import eval_Jeps, evaluate_all, rayleigh_lambda
from .geometry import Disk
from .grid import Grid, ScalarField, differentiate, paraboloid
from .problem import ProblemParams, RhsModel

EIG_FLOOR = 1e-10


@dataclass
class SolveReport:
    converged: bool
    residual: float
    iterations: int
    convexity_violations: int
    wall_time: float
    message: str = ""
    line_search_failed: bool = False
    functionals: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("history")
        d["residual_history"] = list(self.history)
        return d


@dataclass
class Residual:
    R: np.ndarray
    dq: object
    violations: int


def _eig(H):
    """Eigenvalues (ascending) and eigenvectors of symmetric (M, d, d) stacks."""
    if H.shape[1] == 1:
        return H[:, :, 0].copy(), np.ones_like(H)
    return np.linalg.eigh(H)


def clamped_log_det(H):
    lam, _ = _eig(H)
    return np.sum(np.log(np.maximum(lam, EIG_FLOOR)), axis=1)


def residual(u: ScalarField, model: RhsModel, tol_convex: float = -1e-8) -> Residual:
    dq = differentiate(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        R = clamped_log_det(dq.hess) - model.log_rhs(u.values, dq.rho2)
    return Residual(R, dq, int(np.sum(dq.min_eig < tol_convex)))


def jacobian(u: ScalarField, model: RhsModel, dq) -> sp.csr_matrix:
    grid = u.grid
    d = grid.dim
    lam, vec = _eig(dq.hess)
    # C = sum_i v_i v_i^T / lam_i.  Near-degenerate or clamped eigenvalues get
    # 1/tau instead of their exact (zero or huge) derivative so that the step
    # still pushes them up; converged convex fields never hit this branch.
    tau = 1e-3 * float(np.median(lam[:, -1])) if np.median(lam[:, -1]) > 0 else 1e-3
    inv = 1.0 / np.maximum(lam, tau)
    C = np.einsum("mik,mk,mjk->mij", vec, inv, vec)
    D2 = grid.ops["D2"]
    J = sp.csr_matrix((grid.size, grid.size))
    for i in range(d):
        for j in range(d):
            J = J + sp.diags(C[:, i, j]) @ D2[i][j]
    c_u, c_g = model.linearization(grid.x, u.values, dq.grad, dq.ustar, dq.rho2)
    J = J - sp.diags(c_u)
    for k in range(d):
        J = J - sp.diags(c_g[:, k]) @ grid.ops["D"][k]
    return J.tocsc()


def _try(values, grid, model, tol_convex):
    """Residual at ``values`` or None when the field is not admissible."""
    if not np.all(np.isfinite(values)) or np.any(values >= 0) or not model.admissible(values):
        return None
    res = residual(ScalarField(grid, values), model, tol_convex)
    return res if np.all(np.isfinite(res.R)) else None


def implicit_step(u: ScalarField, model: RhsModel, dt: float, res: Residual) -> np.ndarray:
    """Linearly implicit Euler increment for ``u_t = sqrt(1+|x|^2) R(u)``."""
    grid = u.grid
    C = np.sqrt(1.0 + np.sum(grid.x**2, axis=1))
    J = jacobian(u, model, res.dq)
    A = sp.identity(grid.size, format="csc") - dt * (sp.diags(C) @ J)
    return spsolve(A.tocsc(), dt * C * res.R)


def newton_solve(params: Optional[ProblemParams], u0: ScalarField, tol: float = 1e-9,
                 max_iters: int = 200, tol_convex: float = -1e-8, model: Optional[RhsModel] = None,
                 with_functionals: bool = True):
    """Damped Newton from ``u0``; returns ``(u, SolveReport)``.

    A backtracking line search on the Euclidean residual norm guards each step.
    When it fails, pseudo-transient steps (the linearly implicit flow) take over
    until plain Newton steps are accepted again.
    """
    t0 = time.perf_counter()
    if params is not None:
        params.check()
    model = RhsModel.standard(u0.grid, params) if model is None else model
    u = u0.copy()
    res = _try(u.values, u.grid, model, tol_convex)
    modes = []
    if res is None:
        raise ValueError("initial field is not admissible for this right-hand side")
    hist = [float(np.max(np.abs(res.R)))]
    dt = None
    ls_failed = False
    it = 0
    msg = "max_iters reached"
    while it < max_iters:
        if hist[-1] <= tol:
            break
        it += 1
        norm0 = np.linalg.norm(res.R)
        if dt is None:
            accepted = False
            try:
                with np.errstate(all="ignore"):
                    delta = spsolve(jacobian(u, model, res.dq), -res.R)
            except Exception:
                delta = None
            alpha = 1.0
            while delta is not None and np.all(np.isfinite(delta)) and alpha > 1e-6:
                new = _try(u.values + alpha * delta, u.grid, model, tol_convex)
                if new is not None and np.linalg.norm(new.R) <= (1 - 1e-4 * alpha) * norm0:
                    u, res, accepted = ScalarField(u.grid, u.values + alpha * delta), new, True
                    break
                alpha *= 0.5
            if not accepted:
                ls_failed = True
                dt = 1e-2 * u0.grid.h**2
                modes.append("switch")
            else:
                modes.append("newton")
        if dt is not None:
            # pseudo-transient continuation with switched evolution relaxation
            for _ in range(40):
                try:
                    vals = u.values + implicit_step(u, model, dt, res)
                except Exception:
                    vals = np.full(u.grid.size, np.nan)
                new = _try(vals, u.grid, model, tol_convex)
                if new is not None:
                    break
                dt *= 0.25
            if new is None:
                msg = "line search and pseudo-transient steps both failed"
                break
            u, res = ScalarField(u.grid, vals), new
            dt *= float(np.clip(norm0 / np.linalg.norm(res.R), 0.5, 4.0))
            modes.append("ptc")
            if dt > 1e4:
                dt = None
        hist.append(float(np.max(np.abs(res.R))))
    converged = hist[-1] <= tol
    if converged:
        msg = "converged"
    elif modes.count("ptc") and msg == "max_iters reached":
        msg = "max_iters reached (pseudo-transient phase active)"
    fn = {}
    if with_functionals and params is not None:
        try:
            fn = evaluate_all(u, params).to_dict()
        except Exception as exc:  # functionals are diagnostics only
            fn = {"error": str(exc)}
    report = SolveReport(converged, hist[-1], it, res.violations, time.perf_counter() - t0, msg,
                         ls_failed and not converged, fn, hist)
    return u, report


# ---------------------------------------------------------------------------
# initial data


def poisson_iteration(grid: Grid, f=1.0, iters: int = 400, tol: float = 1e-9) -> ScalarField:
    """Fixed point ``Lap u_{k+1} = sqrt((Lap u_k)^2 + 2 (f - det D^2 u_k))`` (2-D), a convex warm start."""
    D2 = grid.ops["D2"]
    lap = (D2[0][0] + D2[1][1]).tocsc()
    lu = splu(lap)
    f = np.broadcast_to(np.asarray(f, dtype=float), (grid.size,))
    rhs = 2.0 * np.sqrt(f)
    u = lu.solve(rhs)
    for _ in range(iters):
        uxx, uxy, uyy = D2[0][0] @ u, D2[0][1] @ u, D2[1][1] @ u
        det = uxx * uyy - uxy**2
        rhs = np.sqrt(np.maximum((uxx + uyy) ** 2 + 2.0 * (f - det), 0.0))
        new = lu.solve(rhs)
        change = np.max(np.abs(new - u))
        u = new
        if change < tol:
            break
    return ScalarField(grid, u)


def base_shape(grid: Grid, tol: float = 1e-10) -> ScalarField:
    """Solution of ``det D^2u = 1``: the paraboloid on a disk, Poisson iteration plus Newton elsewhere."""
    dom = grid.domain
    if isinstance(dom, Disk):
        return paraboloid(grid)
    start = poisson_iteration(grid)
    model = RhsModel.frozen(np.zeros(grid.size))
    u, rep = newton_solve(None, start, tol=tol, model=model)
    if not rep.converged:
        raise RuntimeError(f"base solve failed: {rep.message}")
    return u


def initial_guess(grid: Grid, params: ProblemParams, model: Optional[RhsModel] = None,
                  require_negative_J: bool = False, scales=None) -> ScalarField:
    """``m * base_shape`` with ``m`` chosen on a log grid to minimise the residual.

    With ``require_negative_J`` only scales with ``J_eps(m w) < 0`` are eligible.
    """
    w = base_shape(grid)
    model = RhsModel.standard(grid, params) if model is None else model
    scales = np.geomspace(1e-3, 1e3, 61) if scales is None else scales
    best, best_val = None, np.inf
    for m in scales:
        u = w.scaled(m)
        res = _try(u.values, grid, model, -1e-8)
        if res is None:
            continue
        if require_negative_J and not eval_Jeps(u, params) < 0:
            continue
        val = np.linalg.norm(res.R)
        if val < best_val:
            best, best_val = u, val
    if best is None:
        raise RuntimeError("no admissible scale found for the initial guess")
    return best


def solve(params: ProblemParams, grid: Grid, u0: Optional[ScalarField] = None, **kw):
    u0 = initial_guess(grid, params) if u0 is None else u0
    return newton_solve(params, u0, **kw)


# ---------------------------------------------------------------------------
# continuation and the critical case


def eps_continuation(params: ProblemParams, grid: Grid, eps_seq, u0: Optional[ScalarField] = None,
                     tol: float = 1e-9, max_iters: int = 200):
    """Warm-started chain over decreasing ``eps``; stops at the first failure."""
    eps_seq = list(eps_seq)
    if any(b >= a for a, b in zip(eps_seq, eps_seq[1:])) or eps_seq[-1] <= 0:
        raise ValueError("eps sequence must be strictly decreasing and positive")
    if not (params.p < 1 and params.q >= params.n):
        raise ValueError("eps continuation is for the singular regime p < 1, q >= n")
    out = []
    u = u0
    for e in eps_seq:
        pe = params.with_eps(e)
        if u is None:
            u = initial_guess(grid, pe)
        u, rep = newton_solve(pe, u, tol=tol, max_iters=max_iters)
        out.append((e, u, rep))
        if not rep.converged:
            break
    return out


def monotone_norms(chain, slack: float = 1e-8) -> bool:
    norms = [u.sup_norm for _, u, _ in chain]
    return all(b >= a - slack for a, b in zip(norms, norms[1:]))


@dataclass
class EigenResult:
    lam: float
    u: ScalarField
    report: SolveReport
    lam_history: list


def _frozen_rhs(u: ScalarField, params: ProblemParams, lam: float):
    dq = differentiate(u)
    p, n = params.p, params.n
    return np.log(lam * params.density(u.grid.x)) + (p - 1) * np.log(-u.values) + 0.5 * (n - p) * np.log(dq.rho2)


def eigen_solve(params: ProblemParams, u0: ScalarField, tol_eigen: float = 1e-8, max_outer: int = 100,
                tol: float = 1e-9) -> EigenResult:
    """Normalised fixed point ``det D^2u_{k+1} = lam_k g (-u_k)^(p-1) rho(u_k)^(n-p)``, ``lam_k`` the Rayleigh quotient."""
    if params.p != params.q or params.p < 1:
        raise ValueError("eigen_solve needs p = q >= 1")
    t0 = time.perf_counter()
    u = u0.scaled(1.0 / u0.sup_norm)
    lam = rayleigh_lambda(u, params)
    lams = [lam]
    rep = None
    for k in range(max_outer):
        model = RhsModel.frozen(_frozen_rhs(u, params, lam))
        v, rep = newton_solve(None, u, tol=tol, model=model)
        if not rep.converged:
            break
        u = v.scaled(1.0 / v.sup_norm)
        new = rayleigh_lambda(u, params)
        lams.append(new)
        done = abs(new - lam) < tol_eigen
        lam = new
        if done:
            break
    # residual of the pair (lam, u) in the eigen equation
    final = residual(u, RhsModel.frozen(_frozen_rhs(u, params, lam)))
    converged = rep is not None and rep.converged and abs(lams[-1] - lams[-2]) < tol_eigen if len(lams) > 1 else False
    report = SolveReport(converged, float(np.max(np.abs(final.R))), len(lams) - 1, final.violations,
                         time.perf_counter() - t0, "converged" if converged else "eigen iteration did not settle",
                         False, {"lambda": lam})
    return EigenResult(lam, u, report, lams)


@dataclass
class SContinuation:
    s: list
    norms: list
    fields: list
    reports: list
    S: float
    lam_estimate: float


def estimate_blowup(s, norms, points: int = 4) -> float:
    """Extrapolate ``1/||u_s||`` linearly to zero using the last ``points`` values."""
    s = np.asarray(s[-points:], dtype=float)
    y = 1.0 / np.asarray(norms[-points:], dtype=float)
    slope, icpt = np.polyfit(s, y, 1)
    return float(-icpt / slope)


def s_continuation(params: ProblemParams, grid: Grid, s_seq, u0: Optional[ScalarField] = None,
                   tol: float = 1e-9, points: int = 4) -> SContinuation:
    """Solve ``det D^2u = g (1 - s u)^(p-1) rho^(n-p)`` along increasing ``s``; estimate the blow-up ``S``."""
    if params.p != params.q or not params.p > 1:
        raise ValueError("s continuation needs p = q > 1")
    s_seq = list(s_seq)
    if s_seq[0] != 0 or any(b <= a for a, b in zip(s_seq, s_seq[1:])):
        raise ValueError("s sequence must start at 0 and increase")
    u = base_shape(grid) if u0 is None else u0
    out = SContinuation([], [], [], [], float("nan"), float("nan"))
    prev = None
    for s in s_seq:
        model = RhsModel.s_family(grid, params, s)
        start = u
        if prev is not None and len(out.s) >= 2:
            # secant predictor in s
            ds = s - out.s[-1]
            slope = (out.fields[-1].values - out.fields[-2].values) / (out.s[-1] - out.s[-2])
            guess = ScalarField(grid, out.fields[-1].values + ds * slope)
            if guess.is_admissible() and model.admissible(guess.values):
                start = guess
        try:
            v, rep = newton_solve(None, start, tol=tol, model=model)
        except ValueError:
            break
        if not rep.converged:
            break
        u, prev = v, v
        out.s.append(s)
        out.norms.append(v.sup_norm)
        out.fields.append(v)
        out.reports.append(rep)
    if len(out.s) >= max(points, 2):
        out.S = estimate_blowup(out.s, out.norms, points)
        out.lam_estimate = out.S ** (params.p - 1)
    return out
