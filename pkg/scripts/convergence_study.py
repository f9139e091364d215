"""Grid convergence of the disk solver against the radial oracle.

p=1, q=3 has the paraboloid as exact solution (the stencils reproduce it to
roundoff); p=1, q=4 has a non-polynomial profile and shows the scheme order.
"""
import argparse

import numpy as np

from dualma.analysis import convergence_study
from dualma.elliptic import solve
from dualma.geometry import Disk
from dualma.grid import build_grid
from dualma.oracle import radial_solve
from dualma.problem import ProblemParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", type=int, nargs="+", default=[33, 65, 129, 257])
    args = ap.parse_args()
    for q in (3.0, 4.0):
        P = ProblemParams(3, 1.0, q)
        prof = radial_solve(P)

        def run(N):
            g = build_grid(Disk(1.0), N)
            u, rep = solve(P, g)
            r = np.linalg.norm(g.x, axis=1)
            return {"linf_err": float(np.max(np.abs(u.values - prof(r))))}

        print(f"p=1, q={q:g}")
        print(f"{'quantity':>10} {'N':>5} {'error':>12} {'order':>7}")
        for row in convergence_study(run, args.grids):
            o = "" if row["order"] is None else f"{row['order']:7.3f}"
            print(f"{row['quantity']:>10} {row['N']:5d} {row['error']:12.3e} {o}")


if __name__ == "__main__":
    main()
