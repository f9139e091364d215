"""Convex chart domains, densities, and the sphere <-> chart transform.

Everything downstream works in Euclidean chart coordinates ``x`` of the
tangent hyperplane at the pole ``e``.  A point of the chart is carried to
the sphere by central projection ``pi(x) = (x + e) / sqrt(1 + |x|^2)`` and a
support function ``h`` on the sphere corresponds to ``u(x) = sqrt(1+|x|^2) h(pi(x))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special
from scipy.spatial import ConvexHull, cKDTree
import shapely


class GeometryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# chart transform


def default_pole(n: int) -> np.ndarray:
    e = np.zeros(n)
    e[-1] = 1.0
    return e


def chart_basis(e: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to ``e``, shape (n, n-1).

    For the default pole this is the standard embedding of R^{n-1}.
    """
    e = np.asarray(e, dtype=float)
    e = e / np.linalg.norm(e)
    n = e.size
    last = default_pole(n)
    v = e - last
    if np.linalg.norm(v) < 1e-14:
        return np.eye(n)[:, : n - 1]
    # Householder reflection swapping e_n and e; its first n-1 columns span e^perp
    v = v / np.linalg.norm(v)
    H = np.eye(n) - 2.0 * np.outer(v, v)
    return H[:, : n - 1]


def chart_point(x, e=None) -> np.ndarray:
    """Central projection of chart points ``x`` (shape (..., n-1)) to the sphere."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.shape[-1]
    e = default_pole(d + 1) if e is None else np.asarray(e, dtype=float)
    e = e / np.linalg.norm(e)
    B = chart_basis(e)
    y = x @ B.T + e
    return y / np.sqrt(1.0 + np.sum(x * x, axis=-1))[..., None]


def chart_inverse(y, e=None) -> np.ndarray:
    """Inverse of :func:`chart_point` on the open hemisphere around ``e``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = y.shape[-1]
    e = default_pole(n) if e is None else np.asarray(e, dtype=float)
    e = e / np.linalg.norm(e)
    B = chart_basis(e)
    ye = y @ e
    if np.any(ye <= 0):
        raise GeometryError("point not in the open hemisphere of the chart pole")
    return (y / ye[..., None]) @ B


def chart_volume_element(x, n: int) -> np.ndarray:
    """Spherical area element of the chart, ``(1+|x|^2)^(-n/2)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return (1.0 + np.sum(x * x, axis=-1)) ** (-0.5 * n)


# ---------------------------------------------------------------------------
# densities


_FAMILIES = ("constant", "bump", "pulled-back-constant", "pullback")


@dataclass(frozen=True)
class DensitySpec:
    """A strictly positive density on the chart (``euclidean``) or sphere (``spherical``).

    Parameters by family:

    * ``constant``: ``(c,)``
    * ``bump``: ``(center..., width, amplitude, floor)``; value
      ``floor + amplitude * exp(-|y - center|^2 / (2 width^2))``
    * ``pulled-back-constant``: ``(c,)`` with ``n`` and ``p`` set; value
      ``c (1+|x|^2)^(-(n+p)/2)`` (euclidean side only)
    * ``pullback``: a spherical ``base`` density seen in the chart
    """

    side: str = "euclidean"
    family: str = "constant"
    params: tuple = (1.0,)
    n: Optional[int] = None
    p: Optional[float] = None
    base: Optional["DensitySpec"] = None
    pole: Optional[tuple] = None

    def __post_init__(self):
        if self.side not in ("euclidean", "spherical"):
            raise GeometryError(f"unknown density side {self.side!r}")
        if self.family not in _FAMILIES:
            raise GeometryError(f"unknown density family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        if self.family in ("constant", "pulled-back-constant"):
            if len(self.params) != 1 or not self.params[0] > 0:
                raise GeometryError("constant density needs one positive value")
        if self.family == "bump":
            if len(self.params) < 4:
                raise GeometryError("bump density needs center, width, amplitude, floor")
            width, amp, floor = self.params[-3:]
            if not (width > 0 and amp >= 0 and floor > 0):
                raise GeometryError("bump density needs width > 0, amplitude >= 0, floor > 0")
        if self.family in ("pulled-back-constant", "pullback"):
            if self.side != "euclidean" or self.n is None or self.p is None:
                raise GeometryError("pulled-back densities live on the euclidean side and need n, p")
        if self.family == "pullback" and (self.base is None or self.base.side != "spherical"):
            raise GeometryError("pullback needs a spherical base density")

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        m = pts.shape[0]
        if self.family == "constant":
            return np.full(m, self.params[0])
        if self.family == "bump":
            center = np.asarray(self.params[:-3])
            width, amp, floor = self.params[-3:]
            if center.size != pts.shape[1]:
                raise GeometryError("bump center dimension does not match points")
            r2 = np.sum((pts - center) ** 2, axis=1)
            return floor + amp * np.exp(-r2 / (2.0 * width**2))
        w = (1.0 + np.sum(pts * pts, axis=1)) ** (-0.5 * (self.n + self.p))
        if self.family == "pulled-back-constant":
            return self.params[0] * w
        return self.base(chart_point(pts, self.pole)) * w

    @property
    def lower_bound(self) -> float:
        """A positive lower bound of the density (exact for constants)."""
        if self.family == "constant":
            return self.params[0]
        if self.family == "bump":
            return self.params[-1]
        return float("nan")

    def is_constant(self) -> bool:
        return self.family == "constant"


def constant_density(c: float = 1.0, side: str = "euclidean") -> DensitySpec:
    return DensitySpec(side=side, family="constant", params=(c,))


def pull_back_density(f: DensitySpec, params, pole=None) -> DensitySpec:
    """Chart density ``g(x) = f(pi(x)) (1+|x|^2)^(-(n+p)/2)`` for a spherical ``f``.

    ``params`` only needs ``n`` and ``p`` attributes (a ProblemParams works).
    """
    if f.side != "spherical":
        raise GeometryError("pull_back_density expects a spherical density")
    if f.family == "constant":
        if f.params[0] <= 0:
            raise GeometryError("density must be positive")
        if pole is None:
            return DensitySpec("euclidean", "pulled-back-constant", f.params, n=params.n, p=params.p)
    if f.family == "bump" and f.params[-1] <= 0:
        raise GeometryError("density must be positive")
    pole_t = None if pole is None else tuple(float(v) for v in pole)
    return DensitySpec("euclidean", "pullback", (), n=params.n, p=params.p, base=f, pole=pole_t)


def push_forward_values(g: DensitySpec, x, n: int, p: float) -> np.ndarray:
    """Values of the spherical density at ``pi(x)`` recovered from the chart density."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return g(x) * (1.0 + np.sum(x * x, axis=1)) ** (0.5 * (n + p))


# ---------------------------------------------------------------------------
# support functions <-> chart fields


@dataclass(frozen=True)
class SphericalField:
    """Samples of a support function ``h`` at the chart images ``pi(x)``."""

    pole: np.ndarray
    chart_points: np.ndarray
    values: np.ndarray
    domain: Optional["ConvexDomain"] = None

    @property
    def sphere_points(self) -> np.ndarray:
        return chart_point(self.chart_points, self.pole)


def field_to_support(x, u, e=None, domain=None) -> SphericalField:
    """``h(pi(x)) = u(x) / sqrt(1+|x|^2)``.

    ``x`` may also be a ScalarField, in which case ``u`` is ignored.
    """
    if hasattr(x, "grid") and hasattr(x, "values"):
        field_ = x
        x, u, domain = field_.grid.x, field_.values, field_.grid.domain
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.asarray(u, dtype=float)
    e = default_pole(x.shape[1] + 1) if e is None else np.asarray(e, dtype=float)
    h = u / np.sqrt(1.0 + np.sum(x * x, axis=1))
    return SphericalField(pole=e, chart_points=x, values=h, domain=domain)


def support_to_field(h: SphericalField) -> np.ndarray:
    """Chart values ``u(x) = sqrt(1+|x|^2) h(pi(x))`` at the field's chart points."""
    x = h.chart_points
    return np.sqrt(1.0 + np.sum(x * x, axis=1)) * h.values


# ---------------------------------------------------------------------------
# convex domains


def _golden_refine(fun, lo, hi, iters=80):
    """Vectorised golden-section minimisation of ``fun(t)`` on ``[lo, hi]``."""
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo.copy(), hi.copy()
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc < fd
        a_new = np.where(left, a, c)
        b_new = np.where(left, d, b)
        c_new = np.where(left, b_new - gr * (b_new - a_new), d)
        d_new = np.where(left, c, a_new + gr * (b_new - a_new))
        f_new = fun(np.where(left, c_new, d_new))
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
        a, b, c, d = a_new, b_new, c_new, d_new
    t = 0.5 * (a + b)
    return t, fun(t)


def _curve_distance(pts, curve, t0, t1, samples=4096):
    """Distance from ``pts`` to the parametrised curve ``curve(t)``, t in [t0, t1]."""
    ts = np.linspace(t0, t1, samples)
    tree = cKDTree(curve(ts))
    _, k = tree.query(pts)
    dt = ts[1] - ts[0]
    lo = np.maximum(ts[k] - dt, t0)
    hi = np.minimum(ts[k] + dt, t1)
    _, d2 = _golden_refine(lambda t: np.sum((curve(t) - pts) ** 2, axis=1), lo, hi)
    return np.sqrt(d2)


def _segment_distance(pts, a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    ab = b - a
    t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


class ConvexDomain:
    """Bounded convex region of the chart hyperplane (dimension 1 or 2).

    Subclasses provide exact membership; distances, diameter and measure are
    evaluated in closed form where one exists.
    """

    kind: str = "abstract"
    dim: int = 2

    def contains(self, pts) -> np.ndarray:
        raise NotImplementedError

    def boundary_distance(self, pts) -> np.ndarray:
        raise NotImplementedError

    @property
    def bbox(self) -> np.ndarray:
        """Array ``[[lo_1, hi_1], ..., [lo_d, hi_d]]``."""
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    @property
    def measure(self) -> float:
        raise NotImplementedError

    def boundary_polygon(self, samples: int = 4096) -> np.ndarray:
        raise NotImplementedError

    def shapely_polygon(self, samples: int = 4096):
        return shapely.Polygon(self.boundary_polygon(samples))

    def interior_point(self) -> np.ndarray:
        b = self.bbox
        return 0.5 * (b[:, 0] + b[:, 1])

    def gauge(self, pts) -> np.ndarray:
        """Minkowski gauge about :meth:`interior_point` (1 on the boundary).

        Evaluated by bisection on the membership predicate along rays.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        c = self.interior_point()
        v = pts - c
        nv = np.linalg.norm(v, axis=1)
        out = np.zeros(len(pts))
        mask = nv > 0
        dirs = v[mask] / nv[mask, None]
        lo = np.zeros(mask.sum())
        hi = np.full(mask.sum(), 2.0 * self.diameter + 1.0)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            inside = self.contains(c + mid[:, None] * dirs)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        out[mask] = nv[mask] / (0.5 * (lo + hi))
        return out

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Disk(ConvexDomain):
    """Ball of radius ``R``; in dimension 1 this is the interval ``(c-R, c+R)``."""

    R: float = 1.0
    center: tuple = None
    dim: int = 2
    kind: str = field(default="disk", init=False)

    def __post_init__(self):
        if not self.R > 0:
            raise GeometryError("disk radius must be positive")
        if self.dim not in (1, 2):
            raise GeometryError("chart dimension must be 1 or 2")
        c = (0.0,) * self.dim if self.center is None else tuple(float(v) for v in self.center)
        if len(c) != self.dim:
            raise GeometryError("center dimension mismatch")
        object.__setattr__(self, "center", c)

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.sum((pts - self.center) ** 2, axis=1) < self.R**2

    def boundary_distance(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.abs(self.R - np.linalg.norm(pts - self.center, axis=1))

    @property
    def bbox(self):
        c = np.asarray(self.center)
        return np.stack([c - self.R, c + self.R], axis=1)

    @property
    def diameter(self):
        return 2.0 * self.R

    @property
    def measure(self):
        return 2.0 * self.R if self.dim == 1 else np.pi * self.R**2

    def boundary_polygon(self, samples=4096):
        t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        return np.asarray(self.center) + self.R * np.stack([np.cos(t), np.sin(t)], axis=1)

    def interior_point(self):
        return np.asarray(self.center, dtype=float)

    def gauge(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.linalg.norm(pts - self.center, axis=1) / self.R

    def to_config(self):
        return {"kind": "disk", "R": self.R, "center": list(self.center), "dim": self.dim}


@dataclass(frozen=True, eq=False)
class Polygon(ConvexDomain):
    """Convex polygon, vertices in counterclockwise order."""

    vertices: tuple = ()
    kind: str = field(default="polygon", init=False)
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
            raise GeometryError("polygon needs at least three planar vertices")
        E = np.roll(V, -1, axis=0) - V
        cross = E[:, 0] * np.roll(E, -1, axis=0)[:, 1] - E[:, 1] * np.roll(E, -1, axis=0)[:, 0]
        if np.any(cross < 0):
            raise GeometryError("polygon must be convex with counterclockwise vertices")
        if 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1]) <= 0:
            raise GeometryError("polygon has zero area")
        object.__setattr__(self, "vertices", tuple(map(tuple, V)))

    @property
    def _V(self):
        return np.asarray(self.vertices)

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        V = self._V
        W = np.roll(V, -1, axis=0)
        ok = np.ones(len(pts), dtype=bool)
        for a, b in zip(V, W):
            e = b - a
            ok &= e[0] * (pts[:, 1] - a[1]) - e[1] * (pts[:, 0] - a[0]) > 0
        return ok

    def boundary_distance(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        V = self._V
        W = np.roll(V, -1, axis=0)
        return np.min([_segment_distance(pts, a, b) for a, b in zip(V, W)], axis=0)

    @property
    def bbox(self):
        V = self._V
        return np.stack([V.min(axis=0), V.max(axis=0)], axis=1)

    @property
    def diameter(self):
        V = self._V
        return float(np.max(np.linalg.norm(V[:, None] - V[None], axis=2)))

    @property
    def measure(self):
        V = self._V
        return float(0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1]))

    def boundary_polygon(self, samples=4096):
        return self._V

    def interior_point(self):
        return self._V.mean(axis=0)

    def to_config(self):
        return {"kind": "polygon", "vertices": [list(v) for v in self.vertices]}


@dataclass(frozen=True, eq=False)
class Superellipse(ConvexDomain):
    """``|x/a1|^m + |y/a2|^m < 1`` with ``m >= 1``."""

    a1: float = 1.0
    a2: float = 1.0
    m: float = 4.0
    kind: str = field(default="superellipse", init=False)
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0):
            raise GeometryError("superellipse semi-axes must be positive")
        if not self.m >= 1:
            raise GeometryError("superellipse exponent must be >= 1 for convexity")

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.abs(pts[:, 0] / self.a1) ** self.m + np.abs(pts[:, 1] / self.a2) ** self.m < 1.0

    def _curve(self, t):
        c, s = np.cos(t), np.sin(t)
        e = 2.0 / self.m
        return np.stack([self.a1 * np.sign(c) * np.abs(c) ** e, self.a2 * np.sign(s) * np.abs(s) ** e], axis=1)

    def boundary_distance(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return _curve_distance(pts, self._curve, 0.0, 2 * np.pi, samples=8192)

    @property
    def bbox(self):
        return np.array([[-self.a1, self.a1], [-self.a2, self.a2]])

    @property
    def diameter(self):
        t = np.linspace(0, 2 * np.pi, 20001)
        return float(2.0 * np.max(np.linalg.norm(self._curve(t), axis=1)))

    @property
    def measure(self):
        m = self.m
        return float(4 * self.a1 * self.a2 * special.gamma(1 + 1 / m) ** 2 / special.gamma(1 + 2 / m))

    def boundary_polygon(self, samples=4096):
        return self._curve(np.linspace(0, 2 * np.pi, samples, endpoint=False))

    def interior_point(self):
        return np.zeros(2)

    def to_config(self):
        return {"kind": "superellipse", "a1": self.a1, "a2": self.a2, "m": self.m}


@dataclass(frozen=True, eq=False)
class Cusp(ConvexDomain):
    """``{|x1| < 1, 0 < x2 < (1 - x1^2)^s}`` with ``s = b / (1 - a)``.

    Stores the barrier exponents ``(a, b)``.  For ``s > 1`` the region is only
    star-shaped: the top curve has inflection points at ``x1^2 = 1/(2s-1)``.
    It is convex exactly when ``s <= 1``; :meth:`hull` gives the convex hull.
    """

    a: float = 0.8
    b: float = 2.0 / 3.0
    kind: str = field(default="cusp", init=False)
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        if not (0 < self.a < 1 and self.b > 0):
            raise GeometryError("cusp needs 0 < a < 1 and b > 0")

    @property
    def s(self) -> float:
        return self.b / (1.0 - self.a)

    def top(self, x1):
        return np.clip(1.0 - np.asarray(x1) ** 2, 0.0, None) ** self.s

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x1, x2 = pts[:, 0], pts[:, 1]
        return (np.abs(x1) < 1.0) & (x2 > 0.0) & (x2 < self.top(x1))

    def _curve(self, t):
        return np.stack([t, self.top(t)], axis=1)

    def boundary_distance(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d_bottom = _segment_distance(pts, (-1.0, 0.0), (1.0, 0.0))
        d_top = _curve_distance(pts, self._curve, -1.0, 1.0, samples=8192)
        return np.minimum(d_bottom, d_top)

    @property
    def bbox(self):
        return np.array([[-1.0, 1.0], [0.0, 1.0]])

    @property
    def diameter(self):
        pts = self.boundary_polygon(4096)
        hull = pts[ConvexHull(pts).vertices]
        return float(np.max(np.linalg.norm(hull[:, None] - hull[None], axis=2)))

    @property
    def measure(self):
        s = self.s
        return float(np.sqrt(np.pi) * special.gamma(s + 1) / special.gamma(s + 1.5))

    def boundary_polygon(self, samples=4096):
        # top arc from x1 = 1 to -1 then the flat bottom back (counterclockwise)
        t = 0.5 * (1 - np.cos(np.linspace(0, np.pi, samples)))
        x1 = 1.0 - 2.0 * t
        return self._curve(x1)

    def interior_point(self):
        return np.array([0.0, 0.5 * 2.0 ** (-self.s)])

    def to_config(self):
        return {"kind": "cusp", "a": self.a, "b": self.b}

    @property
    def is_convex(self) -> bool:
        return self.s <= 1.0

    def hull(self) -> ConvexDomain:
        return self if self.is_convex else CuspHull(self.a, self.b)


@dataclass(frozen=True, eq=False)
class CuspHull(ConvexDomain):
    """Convex hull of :class:`Cusp`: the top curve is replaced by its tangent
    lines from ``(+-1, 0)`` beyond ``|x1| = 1/(2s-1)``."""

    a: float = 0.8
    b: float = 2.0 / 3.0
    kind: str = field(default="cusp-hull", init=False)
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        if Cusp(self.a, self.b).is_convex:
            raise GeometryError("the cusp is already convex for s <= 1; use it directly")

    @property
    def s(self) -> float:
        return self.b / (1.0 - self.a)

    @property
    def tangent_point(self) -> float:
        return 1.0 / (2.0 * self.s - 1.0) if self.s > 1 else 1.0

    def top(self, x1):
        x1 = np.abs(np.asarray(x1, dtype=float))
        xt = self.tangent_point
        curve = np.clip(1.0 - x1**2, 0.0, None) ** self.s
        if xt >= 1.0:
            return curve
        line = (1.0 - xt**2) ** self.s * np.clip(1.0 - x1, 0.0, None) / (1.0 - xt)
        return np.where(x1 <= xt, curve, line)

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x1, x2 = pts[:, 0], pts[:, 1]
        return (np.abs(x1) < 1.0) & (x2 > 0.0) & (x2 < self.top(x1))

    def _curve(self, t):
        return np.stack([t, self.top(t)], axis=1)

    def boundary_distance(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d_bottom = _segment_distance(pts, (-1.0, 0.0), (1.0, 0.0))
        xt = self.tangent_point
        d_top = _curve_distance(pts, self._curve, -xt, xt, samples=8192)
        if xt < 1.0:
            yt = float(self.top(xt))
            for sg in (-1.0, 1.0):
                d_top = np.minimum(d_top, _segment_distance(pts, (sg * xt, yt), (sg, 0.0)))
        return np.minimum(d_bottom, d_top)

    @property
    def bbox(self):
        return np.array([[-1.0, 1.0], [0.0, 1.0]])

    @property
    def diameter(self):
        pts = self.boundary_polygon(4096)
        hull = pts[ConvexHull(pts).vertices]
        return float(np.max(np.linalg.norm(hull[:, None] - hull[None], axis=2)))

    @property
    def measure(self):
        from scipy.integrate import quad
        xt = self.tangent_point
        inner, _ = quad(lambda t: (1.0 - t * t) ** self.s, 0.0, xt, epsabs=1e-14, epsrel=1e-13)
        tri = 0.5 * float(self.top(xt)) * (1.0 - xt) if xt < 1.0 else 0.0
        return 2.0 * (inner + tri)

    def boundary_polygon(self, samples=4096):
        t = 0.5 * (1 - np.cos(np.linspace(0, np.pi, samples)))
        return self._curve(1.0 - 2.0 * t)

    def interior_point(self):
        return np.array([0.0, 0.25])

    def to_config(self):
        return {"kind": "cusp-hull", "a": self.a, "b": self.b}


def make_domain(kind: str, **kw) -> ConvexDomain:
    kind = kind.lower()
    if kind == "disk":
        return Disk(R=float(kw.get("R", 1.0)), center=kw.get("center"), dim=int(kw.get("dim", 2)))
    if kind == "polygon":
        return Polygon(vertices=tuple(map(tuple, kw["vertices"])))
    if kind == "superellipse":
        return Superellipse(float(kw.get("a1", 1.0)), float(kw.get("a2", 1.0)), float(kw.get("m", 4.0)))
    if kind == "cusp":
        return Cusp(float(kw["a"]), float(kw["b"]))
    if kind == "cusp-hull":
        return CuspHull(float(kw["a"]), float(kw["b"]))
    raise GeometryError(f"unknown domain kind {kind!r}")


def cap_area(n: int, theta: float) -> float:
    """Area of the geodesic cap of half-angle ``theta`` on S^{n-1}."""
    if n == 2:
        return 2.0 * theta
    full = 2.0 * np.pi ** (n / 2) / special.gamma(n / 2)
    half = 0.5 * full * special.betainc((n - 1) / 2, 0.5, np.sin(theta) ** 2)
    return float(half)


def square(side: float = 2.0) -> Polygon:
    s = side / 2
    return Polygon(((-s, -s), (s, -s), (s, s), (-s, s)))


def regular_polygon(k: int, R: float = 1.0, phase: float = 0.0) -> Polygon:
    t = phase + 2 * np.pi * np.arange(k) / k
    return Polygon(tuple(zip(R * np.cos(t), R * np.sin(t))))


__all__: Sequence[str] = [
    "ConvexDomain", "Disk", "Polygon", "Superellipse", "Cusp", "CuspHull", "make_domain",
    "DensitySpec", "constant_density", "pull_back_density", "push_forward_values",
    "SphericalField", "field_to_support", "support_to_field",
    "chart_point", "chart_inverse", "chart_basis", "chart_volume_element", "cap_area",
    "GeometryError", "square", "regular_polygon",
]
