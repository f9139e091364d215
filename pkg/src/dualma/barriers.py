"""Closed-form sub- and supersolutions for the singular regime (p < 1, q >= n = 3).

Subsolution, in coordinates ``(xi, eta)`` tangent / inward-normal at a boundary point::

    v_a = eta^a (xi^2 - C),          a = (q - n + 2) / (q - p)

Supersolution on the cusp ``0 < x2 < (1 - x1^2)^s``::

    w = C x2 - C x2^a (1 - x1^2)^b,   b = (q - 1) / (q - p),  s = b / (1 - a)

Both are certified node by node with exact derivatives; ``rho`` is always
evaluated in the original chart coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .geometry import ConvexDomain, Cusp, Disk
from .grid import Grid, ScalarField
from .problem import ProblemParams


class BarrierError(ValueError):
    pass


@dataclass(frozen=True)
class BarrierSpec:
    family: str                     # "subsolution_v_a" | "supersolution_w"
    a: float
    C: float
    n: int = 3
    p: float = 0.0
    q: float = 3.0
    b: Optional[float] = None
    domain: Optional[ConvexDomain] = None
    z0: tuple = (0.0, 0.0)          # boundary point (subsolution)
    normal: tuple = (0.0, 1.0)      # inward unit normal at z0 (subsolution)
    certified: bool = False
    meta: dict = field(default_factory=dict, compare=False)


def _check_regime(params: ProblemParams):
    if not (params.p < 1 and params.q >= params.n and params.n == 3):
        raise BarrierError("barriers need p < 1 and q >= n = 3")


def sub_exponent(params: ProblemParams) -> float:
    return (params.q - params.n + 2) / (params.q - params.p)


def make_subsolution(params: ProblemParams, domain: ConvexDomain, z0, normal, C0: float = 1.0) -> BarrierSpec:
    """``v_a`` anchored at boundary point ``z0`` with inward unit normal ``normal``."""
    _check_regime(params)
    a = sub_exponent(params)
    if not 0 < a < 1:
        raise BarrierError(f"exponent a = {a} outside (0, 1)")
    nu = np.asarray(normal, dtype=float)
    nu = nu / np.linalg.norm(nu)
    C = C0 * (1.0 + domain.diameter**2)
    return BarrierSpec("subsolution_v_a", a, C, params.n, params.p, params.q, None, domain,
                       tuple(map(float, z0)), tuple(nu))


def make_supersolution(params: ProblemParams, a: float, C0: float = 1.0):
    """``w`` and its cusp domain for a target exponent ``a`` in ``[(q-n+2)/(q-p), 1)``."""
    _check_regime(params)
    lo = sub_exponent(params)
    if not (lo <= a < 1):
        raise BarrierError(f"a must lie in [{lo:.6g}, 1)")
    b = (params.q - 1) / (params.q - params.p)
    dom = Cusp(a, b)
    return BarrierSpec("supersolution_w", a, C0, params.n, params.p, params.q, b, dom), dom


# ---------------------------------------------------------------------------
# closed forms


@dataclass
class BarrierJet:
    value: np.ndarray
    grad: np.ndarray     # (m, 2) in chart coordinates
    hess: np.ndarray     # (m, 2, 2)

    @property
    def det(self) -> np.ndarray:
        H = self.hess
        return H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] ** 2


def _frame(spec):
    nu = np.asarray(spec.normal)
    t = np.array([nu[1], -nu[0]])
    return t, nu


def jet(spec: BarrierSpec, x) -> BarrierJet:
    """Value, gradient and Hessian of the barrier at points ``x`` (shape (m, 2))."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    a, C = spec.a, spec.C
    if spec.family == "subsolution_v_a":
        t, nu = _frame(spec)
        y = x - np.asarray(spec.z0)
        xi, eta = y @ t, y @ nu
        ea = eta**a
        val = ea * (xi**2 - C)
        g_xi = 2 * xi * ea
        g_eta = a * eta ** (a - 1) * (xi**2 - C)
        h_xx = 2 * ea
        h_xe = 2 * a * xi * eta ** (a - 1)
        h_ee = a * (a - 1) * eta ** (a - 2) * (xi**2 - C)
        R = np.stack([t, nu], axis=1)            # columns: local axes in chart coordinates
        grad = np.stack([g_xi, g_eta], axis=1) @ R.T
        Hl = np.stack([np.stack([h_xx, h_xe], 1), np.stack([h_xe, h_ee], 1)], 1)
        hess = np.einsum("ij,mjk,lk->mil", R, Hl, R)
        return BarrierJet(val, grad, hess)
    if spec.family == "supersolution_w":
        b = spec.b
        x1, x2 = x[:, 0], x[:, 1]
        s1 = 1.0 - x1**2
        ya = x2**a
        val = C * x2 - C * ya * s1**b
        w1 = 2 * C * b * ya * s1 ** (b - 1) * x1
        w2 = C - C * a * x2 ** (a - 1) * s1**b
        w11 = 2 * C * b * ya * s1 ** (b - 2) * (1 - (2 * b - 1) * x1**2)
        w12 = 2 * C * a * b * x2 ** (a - 1) * s1 ** (b - 1) * x1
        w22 = -C * a * (a - 1) * x2 ** (a - 2) * s1**b
        grad = np.stack([w1, w2], axis=1)
        hess = np.stack([np.stack([w11, w12], 1), np.stack([w12, w22], 1)], 1)
        return BarrierJet(val, grad, hess)
    raise BarrierError(f"unknown barrier family {spec.family!r}")


def evaluate(spec: BarrierSpec, x) -> np.ndarray:
    return jet(spec, x).value


def closed_form_det(spec: BarrierSpec, x) -> np.ndarray:
    """Closed-form determinants of the barriers (n = 3)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    a, C = spec.a, spec.C
    if spec.family == "subsolution_v_a":
        t, nu = _frame(spec)
        y = x - np.asarray(spec.z0)
        xi, eta = y @ t, y @ nu
        return 2 * eta ** (2 * a - 2) * ((a - a * a) * C - (a + a * a) * xi**2)
    b = spec.b
    x1, x2 = x[:, 0], x[:, 1]
    s1 = 1.0 - x1**2
    return 2 * C**2 * a * b * x2 ** (2 * a - 2) * s1 ** (2 * b - 2) * (1 - a + (1 - 2 * b - a) * x1**2)


def _fd_hessian(spec, x, step):
    f = lambda dx, dy: evaluate(spec, x + np.array([dx, dy]))
    f0 = f(0, 0)
    fxx = (f(step, 0) - 2 * f0 + f(-step, 0)) / step**2
    fyy = (f(0, step) - 2 * f0 + f(0, -step)) / step**2
    fxy = (f(step, step) - f(step, -step) - f(-step, step) + f(-step, -step)) / (4 * step**2)
    return fxx, fyy, fxy


def fd_det(spec: BarrierSpec, x, step: float = 1e-3) -> np.ndarray:
    """Centred finite-difference Hessian determinant of the closed form (Richardson-extrapolated)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    coarse = _fd_hessian(spec, x, step)
    fine = _fd_hessian(spec, x, 0.5 * step)
    fxx, fyy, fxy = ((4 * b - a) / 3 for a, b in zip(coarse, fine))
    return fxx * fyy - fxy**2


def lhs(spec: BarrierSpec, params: ProblemParams, x) -> np.ndarray:
    """``det D^2 B (-B)^(1-p) rho^(q-n)`` for the barrier ``B``."""
    J = jet(spec, x)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    ustar = np.sum(x * J.grad, axis=1) - J.value
    rho2 = np.sum(J.grad**2, axis=1) + ustar**2
    with np.errstate(invalid="ignore"):
        return J.det * (-J.value) ** (1 - params.p) * rho2 ** (0.5 * (params.q - params.n))


# ---------------------------------------------------------------------------
# certification


@dataclass
class Certificate:
    family: str
    C: float
    node_index: np.ndarray
    x: np.ndarray
    margin: np.ndarray
    passed: bool
    worst_margin: float
    worst_node: int
    count: int

    def summary(self) -> dict:
        return {"family": self.family, "C": self.C, "passed": self.passed, "nodes": self.count,
                "worst_margin": self.worst_margin, "worst_node": self.worst_node,
                "worst_x": self.x[self.worst_node].tolist() if self.count else None}

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("node_index,x1,x2,margin\n")
            for k, xi, m in zip(self.node_index, self.x, self.margin):
                fh.write(f"{int(k)},{xi[0]:.17g},{xi[1]:.17g},{m:.17g}\n")
            fh.write("# summary\n")
            for key, val in self.summary().items():
                fh.write(f"# {key} = {val}\n")


def _nodes(spec, grid):
    """Interior nodes where the barrier is negative (the whole cusp for w)."""
    v = evaluate(spec, grid.x)
    idx = np.nonzero(v < 0)[0] if spec.family == "supersolution_w" else np.arange(grid.size)
    return idx


def verify_inequality(spec: BarrierSpec, params: ProblemParams, grid: Grid) -> Certificate:
    """Relative margins: ``lhs/g - 1`` for the subsolution, ``1 - lhs/g`` for the supersolution.

    Subsolution nodes with ``v >= 0`` fail outright (margin -inf).
    """
    idx = _nodes(spec, grid)
    x = grid.x[idx]
    g = params.density(x)
    L = lhs(spec, params, x)
    if spec.family == "subsolution_v_a":
        margin = L / g - 1.0
        margin = np.where(evaluate(spec, x) < 0, margin, -np.inf)
    else:
        margin = 1.0 - L / g
    margin = np.where(np.isfinite(margin) | (margin == -np.inf), margin, -np.inf)
    worst = int(np.argmin(margin)) if len(idx) else -1
    ok = bool(len(idx) and np.all(margin >= 0))
    return Certificate(spec.family, spec.C, idx, x, margin, ok,
                       float(margin[worst]) if len(idx) else float("nan"), worst, len(idx))


def calibrate(spec: BarrierSpec, params: ProblemParams, grid: Grid, max_doublings: int = 40,
              refine: int = 30):
    """Smallest certified ``C`` for ``v_a`` (doubling) or largest for ``w`` (halving), then bisection."""
    sub = spec.family == "subsolution_v_a"
    cur = spec
    cert = verify_inequality(cur, params, grid)
    k = 0
    while not cert.passed:
        if k >= max_doublings:
            raise BarrierError(f"calibration failed after {k} steps; worst node "
                               f"{cert.x[cert.worst_node].tolist()} margin {cert.worst_margin:.3e}")
        cur = replace(cur, C=cur.C * (2.0 if sub else 0.5))
        cert = verify_inequality(cur, params, grid)
        k += 1
    good = cur.C
    bad = good / 2.0 if sub else good * 2.0
    if k == 0:
        # already certified: tighten towards the boundary of certification
        for _ in range(max_doublings):
            trial = replace(cur, C=bad)
            if not verify_inequality(trial, params, grid).passed:
                break
            good, bad = bad, bad / 2.0 if sub else bad * 2.0
    for _ in range(refine):
        mid = np.sqrt(good * bad)
        if verify_inequality(replace(cur, C=mid), params, grid).passed:
            good = mid
        else:
            bad = mid
    out = replace(cur, C=good, certified=True)
    return out, verify_inequality(out, params, grid)


def disk_anchor(domain: Disk, phi: float):
    c = np.asarray(domain.center)
    d = np.array([np.cos(phi), np.sin(phi)])
    return c + domain.R * d, -d


def calibrate_over_boundary(params: ProblemParams, domain: Disk, grid: Grid, angles=None):
    """Calibrate ``v_a`` at several boundary anchors of a disk; returns the specs and the largest ``C``."""
    angles = np.linspace(0, 2 * np.pi, 8, endpoint=False) if angles is None else angles
    specs = []
    for phi in angles:
        z0, nu = disk_anchor(domain, phi)
        spec, cert = calibrate(make_subsolution(params, domain, z0, nu), params, grid)
        specs.append((spec, cert))
    return specs, max(s.C for s, _ in specs)


# ---------------------------------------------------------------------------
# comparison


@dataclass
class Comparison:
    passed: bool
    worst_gap: float      # min over nodes of upper - lower
    worst_node: int
    worst_x: list


def comparison_check(upper, lower, tol: float = 1e-10, grid: Optional[Grid] = None) -> Comparison:
    """Assert ``upper >= lower - tol`` at every node; arguments are ScalarFields or arrays."""
    uv = upper.values if isinstance(upper, ScalarField) else np.asarray(upper, dtype=float)
    lv = lower.values if isinstance(lower, ScalarField) else np.asarray(lower, dtype=float)
    grid = grid or (upper.grid if isinstance(upper, ScalarField) else getattr(lower, "grid", None))
    gap = uv - lv
    k = int(np.argmin(gap))
    x = grid.x[k].tolist() if grid is not None else []
    return Comparison(bool(gap[k] >= -tol), float(gap[k]), k, x)


def boundary_values(spec: BarrierSpec, samples: int = 1000) -> np.ndarray:
    """Barrier values on the boundary of its own domain (should vanish for ``w``)."""
    dom = spec.domain
    t = np.linspace(-1, 1, samples)[1:-1]
    top = np.stack([t, dom.top(t)], axis=1)
    bottom = np.stack([t, np.zeros_like(t)], axis=1)
    pts = np.concatenate([top, bottom])
    with np.errstate(divide="ignore", invalid="ignore"):
        return evaluate(spec, pts)
