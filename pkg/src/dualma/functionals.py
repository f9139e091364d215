"""Chart forms of the volume-type functionals, their first variations and the q = 0 invariant.

All conformal factors of the chart transform cancel, e.g.
``V_q(u) = (1/q) int_U rho^(q-n) (-u) det D^2u dx``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad_vec

from .grid import ScalarField, differentiate
from .problem import ProblemParams


class FunctionalError(ValueError):
    pass


def _check_sign(u: ScalarField):
    if np.any(u.values > 0):
        raise FunctionalError("field has positive interior values")


def _weighted_det(u: ScalarField, power: float, dq=None):
    dq = differentiate(u) if dq is None else dq
    return dq.rho2 ** (0.5 * power) * dq.det


def eval_Vq(u: ScalarField, q: float, n: int, dq=None) -> float:
    if q == 0:
        raise FunctionalError("V_q needs q != 0")
    _check_sign(u)
    w = _weighted_det(u, q - n, dq)
    return u.grid.integrate(-u.values * w) / q


def first_variation_Vq(u: ScalarField, psi: ScalarField, q: float, n: int, dq=None) -> float:
    """``-int rho^(q-n) psi det D^2u``."""
    w = _weighted_det(u, q - n, dq)
    return -u.grid.integrate(psi.values * w)


def fd_variation_Vq(u: ScalarField, psi: ScalarField, q: float, n: int, t: float = 1e-5) -> float:
    return (eval_Vq(u + psi.scaled(t), q, n) - eval_Vq(u - psi.scaled(t), q, n)) / (2 * t)


def _g(u: ScalarField, params: ProblemParams):
    return params.density(u.grid.x)


def eval_Jeps(u: ScalarField, params: ProblemParams, dq=None) -> float:
    if params.p == 0:
        raise FunctionalError("J_eps needs p != 0")
    vq = eval_Vq(u, params.q, params.n, dq)
    return vq - u.grid.integrate((params.eps - u.values) ** params.p * _g(u, params)) / params.p


def eval_Ieps(u: ScalarField, params: ProblemParams, dq=None) -> float:
    if params.p == 0:
        raise FunctionalError("I_eps needs p != 0")
    vq = eval_Vq(u, params.q, params.n, dq)
    e, p = params.eps, params.p
    return vq - u.grid.integrate(((e - u.values) ** p - e**p) * _g(u, params)) / p


def eps_constant(u: ScalarField, params: ProblemParams) -> float:
    """``(1/p) int eps^p g``, the gap ``I_eps - J_eps``."""
    return u.grid.integrate(params.eps**params.p * _g(u, params)) / params.p


def primitive_F(F: Callable, u: np.ndarray) -> np.ndarray:
    """``int_u^0 F(s) ds`` per node, with ``s = u tau`` and a vector adaptive rule in ``tau``."""
    val, _ = quad_vec(lambda tau: F(u * tau), 0.0, 1.0, epsabs=1e-14, epsrel=1e-12)
    return -u * val


def eval_JF(u: ScalarField, params: ProblemParams, F: Callable, dq=None) -> float:
    vp = eval_Vq(u, params.p, params.n, dq)
    return vp - u.grid.integrate(_g(u, params) * primitive_F(F, u.values))


def eval_invariant_I0(u: ScalarField, n: int, dq=None) -> float:
    """``int (-u) det D^2u rho^(-n)``; independent of the admissible field in the continuum."""
    _check_sign(u)
    w = _weighted_det(u, -n, dq)
    return u.grid.integrate(-u.values * w)


def rayleigh_lambda(u: ScalarField, params: ProblemParams, dq=None) -> float:
    """``p V_p(u) / int (-u)^p g``; invariant under positive scaling of ``u``."""
    p = params.p
    den = u.grid.integrate((-u.values) ** p * _g(u, params))
    if not den > 0:
        raise FunctionalError("Rayleigh denominator vanishes")
    return p * eval_Vq(u, p, params.n, dq) / den


def sobolev_ratio(u: ScalarField, q: float, n: int) -> float:
    """``q V_q(u) / ||u||^q``, bounded below by a positive constant on a fixed domain."""
    return q * eval_Vq(u, q, n) / u.sup_norm**q


@dataclass
class FunctionalReport:
    n: int
    p: float
    q: float
    eps: float
    Vq: float
    Jeps: Optional[float]
    Ieps: Optional[float]
    I0: float
    JF: Optional[float] = None
    rayleigh: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_all(u: ScalarField, params: ProblemParams, F: Optional[Callable] = None) -> FunctionalReport:
    dq = differentiate(u)
    has_p = params.p != 0
    return FunctionalReport(
        n=params.n, p=params.p, q=params.q, eps=params.eps,
        Vq=eval_Vq(u, params.q, params.n, dq),
        Jeps=eval_Jeps(u, params, dq) if has_p else None,
        Ieps=eval_Ieps(u, params, dq) if has_p else None,
        I0=eval_invariant_I0(u, params.n, dq),
        JF=eval_JF(u, params, F, dq) if F is not None else None,
        rayleigh=rayleigh_lambda(u, params, dq) if params.p > 0 else None,
    )


@dataclass
class CoercivityFit:
    a: float
    b: float
    sigma: float
    delta: float
    min_gap: float      # min over the family of I_eps - (a M^q - b M^p)


def coercivity_fit(u0: ScalarField, params: ProblemParams, ts) -> CoercivityFit:
    """Fit ``I_eps(t u0) ~ a M^q - b M^p`` with ``M = t ||u0||`` and report the mountain-pass constants."""
    p, q = params.p, params.q
    if not p > q:
        raise FunctionalError("coercivity split applies for p > q")
    ts = np.asarray(ts, dtype=float)
    M = ts * u0.sup_norm
    vals = np.array([eval_Ieps(u0.scaled(t), params) for t in ts])
    A = np.stack([M**q, -(M**p)], axis=1)
    (a, b), *_ = np.linalg.lstsq(A, vals, rcond=None)
    gap = vals - A @ np.array([a, b])
    ratio = q * a / (p * b)
    sigma = ratio ** (1.0 / (p - q))
    delta = 0.5 * a * (p - q) / p * ratio ** (q / (p - q))
    return CoercivityFit(float(a), float(b), float(sigma), float(delta), float(gap.min()))
