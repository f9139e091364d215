"""Radial shooting oracle and chart-quadrature cross-checks.

For radial ``u(r)`` in chart dimension ``d`` the Monge-Ampere operator is
``u'' (u'/r)^(d-1)``, so the Dirichlet problem on a disk becomes an ODE
integrated outward from ``r = 0`` and shot on ``m = -u(0)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .geometry import Disk, cap_area
from .grid import build_grid
from .problem import ProblemParams


class OracleError(RuntimeError):
    pass


@dataclass
class RadialProfile:
    R: float
    m: float
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    lam: float = 1.0
    interp: Optional[Callable] = field(default=None, repr=False)

    def __call__(self, r) -> np.ndarray:
        """Profile value at radii ``r`` (dense ODE output, series near the origin)."""
        r = np.asarray(r, dtype=float)
        return self.interp(r)[0]

    def derivative(self, r) -> np.ndarray:
        return self.interp(np.asarray(r, dtype=float))[1]

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("r,u,du\n")
            for row in zip(self.r, self.u, self.du):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _radial_density(params: ProblemParams, d: int):
    def g(r):
        pts = np.zeros((np.size(r), d))
        pts[:, 0] = r
        return params.density(pts)
    return g


def _rhs(params, g, lam, r, u, du, eps=None, p=None):
    eps = params.eps if eps is None else eps
    p = params.p if p is None else p
    rho2 = du * du + (r * du - u) ** 2
    return lam * g(r)[0] * (eps - u) ** (p - 1) * rho2 ** (0.5 * (params.n - params.q))


def _shoot(params, R, m, lam, rtol, atol, dense=False, r0_frac=1e-6):
    d = params.n - 1
    g = _radial_density(params, d)
    rhs0 = _rhs(params, g, lam, 0.0, -m, 0.0)
    A = rhs0 ** (1.0 / d)
    r0 = r0_frac * R
    y0 = [-m + 0.5 * A * r0 * r0, A * r0]

    def f(r, y):
        u, du = y
        if params.p < 1 and params.eps - u <= 0:
            return [du, np.inf]
        val = _rhs(params, g, lam, r, u, du)
        if d == 1:
            return [du, val]
        return [du, val * (r / du) ** (d - 1)]

    def hit(r, y):
        return y[0]
    hit.terminal = True
    hit.direction = 1

    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sol = solve_ivp(f, (r0, R), y0, method="DOP853", rtol=rtol, atol=atol,
                        events=hit, dense_output=dense)
    if sol.status == -1:
        raise OracleError(f"radial ODE failed: {sol.message}")
    return sol, A, r0


def _mismatch(params, R, m, lam, rtol, atol):
    """Continuous shooting residual: ``u(R)`` or, after an early zero at ``r_hit``, ``(R - r_hit) u'(r_hit)``."""
    sol, _, _ = _shoot(params, R, m, lam, rtol, atol)
    if sol.status == 1 and len(sol.t_events[0]):
        r_hit = sol.t_events[0][0]
        return (R - r_hit) * sol.y_events[0][0][1]
    return sol.y[0, -1]


def _bracket(fun, grid):
    prev_x, prev_f = None, None
    for x in grid:
        try:
            fx = fun(x)
        except OracleError:
            prev_x, prev_f = None, None
            continue
        if prev_f is not None and np.sign(fx) != np.sign(prev_f):
            return prev_x, x
        prev_x, prev_f = x, fx
    raise OracleError("shooting bracket not found")


def _profile(params, R, m, lam, rtol, atol, samples):
    sol, A, r0 = _shoot(params, R, m, lam, rtol, atol, dense=True)
    d = params.n - 1
    r_end = sol.t[-1]

    def interp(r):
        r = np.atleast_1d(r)
        u = np.empty_like(r)
        du = np.empty_like(r)
        small = r < r0
        u[small] = -m + 0.5 * A * r[small] ** 2
        du[small] = A * r[small]
        big = ~small
        y = sol.sol(np.clip(r[big], r0, r_end))
        u[big], du[big] = y[0], y[1]
        return u, du

    r = np.linspace(0.0, R, samples)
    u, du = interp(r)
    return RadialProfile(R=R, m=m, r=r, u=u, du=du, lam=lam, interp=interp)


def radial_solve(params: ProblemParams, R: float = 1.0, rtol: float = 1e-12,
                 m_range=(1e-6, 1e6), samples: int = 2001) -> RadialProfile:
    """Shoot on ``m`` until ``|u(R)| <= 1e-10``; the density is evaluated along the first axis."""
    atol = 1e-14
    fun = lambda m: _mismatch(params, R, m, 1.0, rtol, atol)
    grid = np.geomspace(*m_range, 121)
    lo, hi = _bracket(fun, grid)
    m = brentq(fun, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    prof = _profile(params, R, m, 1.0, rtol, atol, samples)
    if abs(fun(m)) > 1e-10:
        raise OracleError(f"shooting residual {fun(m):.3e} above 1e-10")
    return prof


def radial_eigen(params: ProblemParams, R: float = 1.0, rtol: float = 1e-12,
                 lam_range=(1e-4, 1e6), samples: int = 2001) -> RadialProfile:
    """For ``p = q``: normalise ``u(0) = -1`` and shoot on the eigenvalue ``lam``."""
    if params.p != params.q:
        raise OracleError("eigen oracle needs p = q")
    atol = 1e-14
    base = params.with_eps(0.0)
    fun = lambda lam: _mismatch(base, R, 1.0, lam, rtol, atol)
    lo, hi = _bracket(fun, np.geomspace(*lam_range, 121))
    lam = brentq(fun, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return _profile(base, R, 1.0, lam, rtol, atol, samples)


def paraboloid_check(R: float = 1.0, rtol: float = 1e-12) -> float:
    """Max deviation of the oracle from ``(r^2 - R^2)/2`` for n=3, p=1, q=3."""
    prof = radial_solve(ProblemParams(3, 1.0, 3.0), R, rtol=rtol)
    return float(np.max(np.abs(prof.u - 0.5 * (prof.r**2 - R**2))))


def self_agreement(params: ProblemParams, R: float = 1.0, tols=(1e-12, 1e-10)) -> float:
    a = radial_solve(params, R, rtol=tols[0])
    b = radial_solve(params, R, rtol=tols[1])
    return float(np.max(np.abs(a.u - b(a.r))))


def cap_area_check(n: int, theta: float, N: int = 257) -> float:
    """Relative error of the chart quadrature of ``(1+|x|^2)^(-n/2)`` over the preimage of a cap."""
    if not 0 < theta < np.pi / 2:
        raise OracleError("cap half-angle must lie in (0, pi/2)")
    grid = build_grid(Disk(np.tan(theta), dim=n - 1), N)
    val = grid.integrate((1.0 + np.sum(grid.x**2, axis=1)) ** (-0.5 * n))
    exact = cap_area(n, theta)
    return abs(val - exact) / exact


def boundary_exponent(profile: RadialProfile, window=(1e-3, 1e-1), samples: int = 200):
    """Log-log slope of ``|u|`` against ``R - r`` on a window of boundary distances (fractions of R)."""
    dist = np.geomspace(window[0], window[1], samples) * profile.R
    u = profile(profile.R - dist)
    slope, intercept = np.polyfit(np.log(dist), np.log(np.abs(u)), 1)
    return float(slope), float(intercept)
