"""Problem parameters and the right-hand side of the chart Monge-Ampere equation

    det D^2 u = g(x) (eps - u)^(p-1) (|Du|^2 + (x.Du - u)^2)^((n-q)/2),   u = 0 on dU.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import DensitySpec, constant_density


class ParamsError(ValueError):
    pass


class RhsDomainError(ArithmeticError):
    pass


REGIMES = {
    "subcritical": "q > p >= 1",
    "critical": "p = q >= 1",
    "supercritical": "p > q >= n",
    "singular": "p < 1 and q >= n",
}


def classify(n, p, q) -> Optional[str]:
    if p == q and p >= 1:
        return "critical"
    if q > p >= 1:
        return "subcritical"
    if p > q >= n:
        return "supercritical"
    if p < 1 and q >= n:
        return "singular"
    return None


@dataclass(frozen=True)
class ProblemParams:
    n: int = 3
    p: float = 1.0
    q: float = 3.0
    eps: float = 0.0
    density: DensitySpec = field(default_factory=constant_density)

    @property
    def d(self) -> int:
        return self.n - 1

    @property
    def regime(self) -> Optional[str]:
        return classify(self.n, self.p, self.q)

    def check(self) -> "ProblemParams":
        """Raise :class:`ParamsError` unless the instance is in one of the solved regimes."""
        if int(self.n) != self.n or self.n not in (2, 3):
            raise ParamsError("n must be 2 or 3 (chart dimension 1 or 2)")
        if self.regime is None:
            table = "; ".join(f"{k}: {v}" for k, v in REGIMES.items())
            raise ParamsError(f"(n, p, q) = ({self.n}, {self.p}, {self.q}) is in no regime ({table})")
        if self.eps < 0:
            raise ParamsError("eps must be non-negative")
        if self.p < 1 and not self.eps > 0:
            raise ParamsError("p < 1 needs eps > 0")
        if self.density.side != "euclidean":
            raise ParamsError("solver densities live on the euclidean side; pull back first")
        return self

    def with_eps(self, eps: float) -> "ProblemParams":
        return ProblemParams(self.n, self.p, self.q, eps, self.density)

    def to_config(self) -> dict:
        return {"n": self.n, "p": self.p, "q": self.q, "eps": self.eps, "regime": self.regime}


def rhs_eval(x, u, Du, params: ProblemParams) -> np.ndarray:
    """``g(x) (eps-u)^(p-1) rho^(n-q)`` at points ``x`` (shape (m, d)) with values ``u`` and gradients ``Du``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    Du = np.atleast_2d(np.asarray(Du, dtype=float))
    base = params.eps - u
    rho2 = np.sum(Du * Du, axis=1) + (np.sum(x * Du, axis=1) - u) ** 2
    if np.any(base <= 0):
        raise RhsDomainError("eps - u must be positive")
    if np.any(rho2 <= 0):
        raise RhsDomainError("rho vanishes")
    return params.density(x) * base ** (params.p - 1) * rho2 ** (0.5 * (params.n - params.q))


def scaling_exponent(params: ProblemParams) -> float:
    """Degree of homogeneity of the RHS in (u, Du) at eps = 0."""
    return params.p - 1 + params.n - params.q


@dataclass
class RhsModel:
    """``log RHS = log_base + a log(alpha - beta u) + kappa log rho^2 [+ log F(u)]`` per node.

    The standard equation has ``a = p-1, alpha = eps, beta = 1, kappa = (n-q)/2``;
    the critical s-family uses ``alpha = 1, beta = s``; a frozen right-hand side
    sets ``a = kappa = 0`` and puts everything in ``log_base``.
    """

    log_base: np.ndarray
    a: float = 0.0
    alpha: float = 0.0
    beta: float = 1.0
    kappa: float = 0.0
    F: Optional[Callable] = None
    dF: Optional[Callable] = None

    @classmethod
    def standard(cls, grid, params: ProblemParams) -> "RhsModel":
        return cls(np.log(params.density(grid.x)), params.p - 1, params.eps, 1.0, 0.5 * (params.n - params.q))

    @classmethod
    def s_family(cls, grid, params: ProblemParams, s: float) -> "RhsModel":
        return cls(np.log(params.density(grid.x)), params.p - 1, 1.0, s, 0.5 * (params.n - params.p))

    @classmethod
    def frozen(cls, log_rhs: np.ndarray) -> "RhsModel":
        return cls(np.asarray(log_rhs, dtype=float).copy())

    @classmethod
    def with_F(cls, grid, params: ProblemParams, F, dF=None) -> "RhsModel":
        return cls(np.log(params.density(grid.x)), 0.0, 0.0, 1.0, 0.5 * (params.n - params.p), F, dF)

    def admissible(self, u: np.ndarray) -> bool:
        if self.a != 0 and np.any(self.alpha - self.beta * u <= 0):
            return False
        if self.F is not None and np.any(self.F(u) <= 0):
            return False
        return True

    def log_rhs(self, u: np.ndarray, rho2: np.ndarray) -> np.ndarray:
        out = self.log_base.copy()
        if self.a != 0:
            out += self.a * np.log(self.alpha - self.beta * u)
        if self.kappa != 0:
            out += self.kappa * np.log(rho2)
        if self.F is not None:
            out += np.log(self.F(u))
        return out

    def linearization(self, x, u, grad, ustar, rho2):
        """Coefficients ``(c_u, c_grad)`` with ``d log RHS = c_u du + c_grad . dDu``."""
        c_u = np.zeros_like(u)
        c_g = np.zeros_like(grad)
        if self.a != 0:
            c_u -= self.a * self.beta / (self.alpha - self.beta * u)
        if self.kappa != 0:
            c_u -= 2.0 * self.kappa * ustar / rho2
            c_g += (2.0 * self.kappa / rho2)[:, None] * (grad + ustar[:, None] * x)
        if self.F is not None:
            if self.dF is not None:
                c_u += self.dF(u) / self.F(u)
            else:
                step = 1e-7 * np.maximum(1.0, np.abs(u))
                c_u += (np.log(self.F(u + step)) - np.log(self.F(u - step))) / (2 * step)
        return c_u, c_g
