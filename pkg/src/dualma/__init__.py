"""Finite-difference lab for the chart form of the L_p dual Minkowski problem.

A convex ``u < 0`` with ``u = 0`` on the boundary solves
``det D^2u = g (eps - u)^(p-1) (|Du|^2 + (x.Du - u)^2)^((n-q)/2)``.
"""
from .geometry import ConvexDomain, Cusp, CuspHull, DensitySpec, Disk, Polygon, Superellipse, make_domain
from .grid import Grid, ScalarField, build_grid
from .problem import ProblemParams, classify

__all__ = [
    "ConvexDomain", "Cusp", "CuspHull", "DensitySpec", "Disk", "Polygon", "Superellipse", "make_domain",
    "Grid", "ScalarField", "build_grid", "ProblemParams", "classify",
]
