"""n=3, p=-2, q=3 on the unit disk: grid solution vs the radial oracle.

Prints the L-infinity error and where it sits, the fitted
boundary exponent and the oracle's own fit on the same window.
"""
import argparse

import numpy as np

from dualma import analysis
from dualma.elliptic import eps_continuation
from dualma.geometry import Disk
from dualma.grid import build_grid
from dualma.oracle import radial_solve
from dualma.problem import ProblemParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", type=int, nargs="+", default=[65, 129, 257])
    args = ap.parse_args()
    P = ProblemParams(3, -2.0, 3.0, 1e-6)
    prof = radial_solve(P)
    for N in args.grids:
        g = build_grid(Disk(1.0), N)
        u = eps_continuation(P, g, list(np.geomspace(1e-1, 1e-6, 6)))[-1][1]
        r = np.linalg.norm(g.x, axis=1)
        err = u.values - prof(r)
        k = int(np.argmax(np.abs(err)))
        ang = np.degrees(np.arctan2(g.x[k, 1], g.x[k, 0]))
        ray = analysis.Ray((1.0, 0.0), (-1.0, 0.0))
        try:
            fit = analysis.fit_boundary_exponent(u, ray)
            lo, hi = fit.window
            d = np.geomspace(lo, hi, 200)
            ofit = np.polyfit(np.log(d), np.log(np.abs(prof(1 - d))), 1)[0]
            ftxt = f"slope {fit.slope:.4f} (R^2 {fit.r2:.5f}), oracle on window {ofit:.4f}"
        except analysis.AnalysisError as exc:
            ftxt = str(exc)
        print(f"N={N:4d}  Linf {abs(err[k]):.3e} at dist {1 - r[k]:.4f}, angle {ang:.1f} deg  {ftxt}")


if __name__ == "__main__":
    main()
