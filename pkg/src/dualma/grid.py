"""Cartesian grids on convex chart domains.

Interior nodes carry the unknowns; the Dirichlet value 0 lives on the exact
boundary.  Along every grid line (and the two diagonals in 2-D) a node sees
its neighbour at distance ``h`` or, if the line leaves the domain first, the
boundary at distance ``theta * h`` with ``0 < theta <= 1``.  All difference
operators are three-point non-uniform (Shortley-Weller) stencils built from
those offsets, so they are exact on quadratics at every node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.spatial import cKDTree
import shapely

from .geometry import ConvexDomain


class GridError(ValueError):
    pass


INTERIOR, BOUNDARY_ADJACENT, EXTERIOR = 1, 2, 0

THETA_FLOOR = 1e-8  # nodes closer than this (in units of h) are treated as boundary


@dataclass(eq=False)
class Grid:
    domain: ConvexDomain
    N: int
    h: float
    origin: np.ndarray          # coordinates of array node (0, ..., 0)
    shape: tuple                # nodes per axis of the full array
    index: np.ndarray           # (M, d) array indices of interior nodes
    x: np.ndarray               # (M, d) coordinates of interior nodes
    labels: np.ndarray          # full-array classification map
    theta: dict                 # direction -> (minus offsets, plus offsets)
    nbr: dict                   # direction -> (minus neighbour idx, plus neighbour idx), -1 = boundary
    weights: np.ndarray         # (M,) quadrature weights
    ops: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def size(self) -> int:
        return self.x.shape[0]

    @property
    def boundary_adjacent(self) -> np.ndarray:
        return self.labels[tuple(self.index.T)] == BOUNDARY_ADJACENT

    def node_coords(self, idx) -> np.ndarray:
        return self.origin + self.h * np.asarray(idx, dtype=float)

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.size))

    def field(self, fn) -> "ScalarField":
        """Sample a callable ``fn(x) -> values`` at the interior nodes."""
        return ScalarField(self, np.asarray(fn(self.x), dtype=float).reshape(self.size))

    def integrate(self, w) -> float:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.size,):
            raise GridError("integrand must have one value per interior node")
        return float(np.sum(self.weights * w))

    def boundary_distance(self) -> np.ndarray:
        if "dist" not in self.ops:
            self.ops["dist"] = self.domain.boundary_distance(self.x)
        return self.ops["dist"]

    def to_full(self, values, fill=np.nan) -> np.ndarray:
        out = np.full(self.shape, fill, dtype=float)
        out[tuple(self.index.T)] = values
        return out


def _directions(d):
    if d == 1:
        return {"x": (1,)}
    return {"x": (1, 0), "y": (0, 1), "xy": (1, 1), "yx": (1, -1)}


def _offsets(domain, x0, step, iters=48):
    """Fractions ``theta`` in (0, 1] where ``x0 + theta*step`` first meets the boundary."""
    lo = np.zeros(len(x0))
    hi = np.ones(len(x0))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = domain.contains(x0 + mid[:, None] * step)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def build_grid(domain: ConvexDomain, N: int) -> Grid:
    """Uniform grid with ``N`` nodes along the longest side of the domain's box."""
    if N < 9:
        raise GridError("need at least 9 nodes per axis")
    d = domain.dim
    bbox = np.asarray(domain.bbox, dtype=float)
    ext = bbox[:, 1] - bbox[:, 0]
    h = float(ext.max() / (N - 1))
    counts = [int(np.ceil(e / h - 1e-9)) + 1 for e in ext]
    mid = 0.5 * (bbox[:, 0] + bbox[:, 1])
    origin = mid - 0.5 * h * (np.asarray(counts) - 1)
    shape = tuple(counts)

    axes = [origin[k] + h * np.arange(counts[k]) for k in range(d)]
    full = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    inside = domain.contains(full).reshape(shape)
    dirs = _directions(d)

    for _ in range(2):
        index = np.argwhere(inside)
        if len(index) == 0:
            raise GridError("grid has no interior nodes; refine")
        x = origin + h * index
        lookup = -np.ones(shape, dtype=np.int64)
        lookup[tuple(index.T)] = np.arange(len(index))
        theta, nbr = {}, {}
        for name, off in dirs.items():
            off = np.asarray(off)
            pair_t, pair_n = [], []
            for sgn in (-1, 1):
                j = index + sgn * off
                ok = np.all((j >= 0) & (j < np.asarray(shape)), axis=1)
                nb = -np.ones(len(index), dtype=np.int64)
                nb[ok] = lookup[tuple(j[ok].T)]
                t = np.ones(len(index))
                cut = nb < 0
                if np.any(cut):
                    t[cut] = _offsets(domain, x[cut], sgn * h * off.astype(float))
                pair_t.append(t)
                pair_n.append(nb)
            theta[name] = tuple(pair_t)
            nbr[name] = tuple(pair_n)
        tmin = np.min([np.minimum(*theta[k]) for k in dirs], axis=0)
        tiny = tmin < THETA_FLOOR
        if not np.any(tiny):
            break
        inside[tuple(index[tiny].T)] = False

    n_comp = ndimage.label(inside)[1]
    if n_comp != 1:
        raise GridError(f"interior node set has {n_comp} edge-connected components; refine")

    labels = np.zeros(shape, dtype=np.int8)
    adjacent = np.zeros(len(index), dtype=bool)
    for name in dirs:
        for k in range(2):
            adjacent |= nbr[name][k] < 0
    labels[tuple(index.T)] = np.where(adjacent, BOUNDARY_ADJACENT, INTERIOR)

    grid = Grid(domain=domain, N=N, h=h, origin=origin, shape=shape, index=index, x=x,
                labels=labels, theta=theta, nbr=nbr, weights=np.zeros(len(index)))
    grid.weights = _cut_cell_weights(grid, full, inside.reshape(-1))
    _build_operators(grid)
    return grid


def _cut_cell_weights(grid: Grid, full: np.ndarray, inside_flat: np.ndarray) -> np.ndarray:
    """Midpoint weights: area of (cell ∩ U); slivers of exterior cells go to the nearest interior node."""
    dom, h, d = grid.domain, grid.h, grid.dim
    if d == 1:
        c = dom.center[0]
        lo = np.maximum(full[:, 0] - h / 2, c - dom.R)
        hi = np.minimum(full[:, 0] + h / 2, c + dom.R)
        area = np.clip(hi - lo, 0.0, None)
    else:
        dist = dom.boundary_distance(full)
        cut = dist <= h * np.sqrt(0.5) * (1 + 1e-9)
        center_in = dom.contains(full)
        area = np.where(center_in & ~cut, h * h, 0.0)
        poly = dom.shapely_polygon(8192)
        shapely.prepare(poly)
        fc = full[cut]
        boxes = shapely.box(fc[:, 0] - h / 2, fc[:, 1] - h / 2, fc[:, 0] + h / 2, fc[:, 1] + h / 2)
        area[cut] = shapely.area(shapely.intersection(boxes, poly))
    w = np.zeros(grid.size)
    flat_index = np.ravel_multi_index(tuple(grid.index.T), grid.shape)
    w += area[flat_index]
    orphan = (area > 0) & ~inside_flat
    if np.any(orphan):
        _, k = cKDTree(grid.x).query(full[orphan])
        np.add.at(w, k, area[orphan])
    return w


def _stencil_rows(grid, name, length):
    """First and second directional difference weights along direction ``name``."""
    tm, tp = grid.theta[name]
    a, b = tm * length, tp * length
    d1 = (-b / (a * (a + b)), (b - a) / (a * b), a / (b * (a + b)))
    d2 = (2.0 / (a * (a + b)), -2.0 / (a * b), 2.0 / (b * (a + b)))
    return d1, d2


def _assemble(grid, name, coeffs):
    M = grid.size
    nm, np_ = grid.nbr[name]
    cm, c0, cp = coeffs
    rows = [np.arange(M)]
    cols = [np.arange(M)]
    vals = [c0]
    for nb, c in ((nm, cm), (np_, cp)):
        ok = nb >= 0
        rows.append(np.nonzero(ok)[0])
        cols.append(nb[ok])
        vals.append(c[ok])
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(M, M))


def _build_operators(grid: Grid) -> None:
    h = grid.h
    if grid.dim == 1:
        d1, d2 = _stencil_rows(grid, "x", h)
        grid.ops["D"] = [_assemble(grid, "x", d1)]
        grid.ops["D2"] = [[_assemble(grid, "x", d2)]]
        return
    dx1, dxx = _stencil_rows(grid, "x", h)
    dy1, dyy = _stencil_rows(grid, "y", h)
    _, dxi = _stencil_rows(grid, "xy", np.sqrt(2.0) * h)
    _, deta = _stencil_rows(grid, "yx", np.sqrt(2.0) * h)
    Dx = _assemble(grid, "x", dx1)
    Dy = _assemble(grid, "y", dy1)
    Dxx = _assemble(grid, "x", dxx)
    Dyy = _assemble(grid, "y", dyy)
    Dxy = 0.5 * (_assemble(grid, "xy", dxi) - _assemble(grid, "yx", deta))
    grid.ops["D"] = [Dx, Dy]
    grid.ops["D2"] = [[Dxx, Dxy], [Dxy, Dyy]]


# ---------------------------------------------------------------------------
# fields


@dataclass(eq=False)
class ScalarField:
    """Values at the interior nodes of ``grid``; zero on the boundary."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise GridError("field needs one value per interior node")
        if not np.all(np.isfinite(self.values)):
            raise GridError("field values must be finite")

    def scaled(self, t: float) -> "ScalarField":
        return ScalarField(self.grid, t * self.values)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values - other.values)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_admissible(self) -> bool:
        return bool(np.all(self.values < 0))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class DerivedQuantities:
    grad: np.ndarray        # (M, d)
    hess: np.ndarray        # (M, d, d)
    ustar: np.ndarray       # x . Du - u
    rho2: np.ndarray        # |Du|^2 + ustar^2
    det: np.ndarray
    min_eig: np.ndarray


def gradient(grid: Grid, u: np.ndarray) -> np.ndarray:
    return np.stack([D @ u for D in grid.ops["D"]], axis=1)


def hessian(grid: Grid, u: np.ndarray) -> np.ndarray:
    d = grid.dim
    H = np.empty((grid.size, d, d))
    for i in range(d):
        for j in range(i, d):
            H[:, i, j] = grid.ops["D2"][i][j] @ u
            H[:, j, i] = H[:, i, j]
    return H


def det_and_min_eig(H: np.ndarray):
    if H.shape[1] == 1:
        return H[:, 0, 0].copy(), H[:, 0, 0].copy()
    a, b, c = H[:, 0, 0], H[:, 0, 1], H[:, 1, 1]
    det = a * c - b * b
    min_eig = 0.5 * (a + c) - 0.5 * np.sqrt((a - c) ** 2 + 4 * b * b)
    return det, min_eig


def differentiate(u) -> DerivedQuantities:
    """Gradient, Hessian, dual height, rho^2, det D^2u and smallest Hessian eigenvalue."""
    grid, v = u.grid, u.values
    Du = gradient(grid, v)
    H = hessian(grid, v)
    ustar = np.sum(grid.x * Du, axis=1) - v
    rho2 = np.sum(Du * Du, axis=1) + ustar**2
    det, mn = det_and_min_eig(H)
    return DerivedQuantities(Du, H, ustar, rho2, det, mn)


def integrate(grid: Grid, w) -> float:
    return grid.integrate(w)


def dump_field(u: ScalarField, path) -> None:
    """Write ``x1[,x2],u`` rows with 17 significant digits."""
    d = u.grid.dim
    header = ",".join([f"x{k + 1}" for k in range(d)] + ["u"])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for xi, ui in zip(u.grid.x, u.values):
            fh.write(",".join(f"{v:.17g}" for v in (*xi, ui)) + "\n")


def read_field(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :-1], data[:, -1]


def refine(grid: Grid, factor: int = 2) -> Grid:
    return build_grid(grid.domain, factor * (grid.N - 1) + 1)


def sample_on(grid: Grid, fn) -> ScalarField:
    return grid.field(fn)


def paraboloid(grid: Grid, scale: float = 1.0, R: Optional[float] = None) -> ScalarField:
    """``scale * (|x|^2 - R^2) / 2``; the exact solution of det D^2u = scale^d on a disk."""
    R = grid.domain.R if R is None else R
    c = np.asarray(getattr(grid.domain, "center", np.zeros(grid.dim)))
    return grid.field(lambda x: 0.5 * scale * (np.sum((x - c) ** 2, axis=1) - R**2))
