"""Acceptance criteria 1-12. Each test records one PASS/FAIL line, printed in
the terminal summary (see conftest.py) and asserted at the stated tolerance."""
import time

import numpy as np
import pytest

from dualma import analysis, barriers
from dualma.elliptic import (base_shape, eigen_solve, eps_continuation, monotone_norms, newton_solve,
                             s_continuation, solve)
from dualma.flow import FlowConfig, flow_monitors, flow_run
from dualma.functionals import eval_invariant_I0, eval_Vq, fd_variation_Vq, first_variation_Vq
from dualma.geometry import Cusp, Disk
from dualma.grid import ScalarField, build_grid, paraboloid
from dualma.oracle import cap_area_check, paraboloid_check, radial_eigen, radial_solve, self_agreement
from dualma.problem import ProblemParams

pytestmark = pytest.mark.slow

RESULTS = []


def record(k, passed, detail):
    RESULTS.append(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
    return passed


def note(k, detail):
    RESULTS.append(f"criterion {k:2d}: INFO  {detail}")


def _radius(g):
    return np.linalg.norm(g.x, axis=1)


@pytest.fixture(scope="module")
def grids():
    cache = {}

    def get(dom_key, N):
        key = (dom_key, N)
        if key not in cache:
            dom = {"disk": Disk(1.0)}.get(dom_key, dom_key)
            cache[key] = build_grid(dom, N)
        return cache[key]
    return get


def test_12_oracle_gate():
    par = paraboloid_check()
    cap = cap_area_check(3, np.pi / 4, 257)
    sa = self_agreement(ProblemParams(3, 1.0, 4.0))
    ok = par <= 1e-9 and cap <= 1e-3 and sa <= 1e-8
    record(12, ok, f"paraboloid ODE dev {par:.2e} <= 1e-9, cap rel err {cap:.2e} <= 1e-3, "
                   f"two-tolerance agreement {sa:.2e} <= 1e-8")
    assert ok


def test_01_golden(grids):
    P = ProblemParams(3, 1.0, 3.0)
    errs, times = {}, {}
    for N in (65, 129):
        g = grids("disk", N)
        r2 = np.sum(g.x**2, axis=1)
        u0 = ScalarField(g, 0.4 * (0.75 * r2 + 0.25 * r2**2 - 1))   # convex, not the solution
        t0 = time.perf_counter()
        u, rep = newton_solve(P, u0)
        times[N] = time.perf_counter() - t0
        assert rep.converged
        errs[N] = float(np.max(np.abs(u.values - paraboloid(g).values)))
    order = np.log2(errs[65] / errs[129]) if errs[129] > 0 else np.inf
    # the stencils are exact on quadratics, so both errors sit at roundoff and
    # the ratio carries no order information; order is then shown on p=1, q=4
    exact = max(errs.values()) <= 1e-9
    prof = radial_solve(ProblemParams(3, 1.0, 4.0))
    e4 = {}
    for N in (65, 129):
        g = grids("disk", N)
        e4[N] = float(np.max(np.abs(solve(ProblemParams(3, 1.0, 4.0), g)[0].values - prof(_radius(g)))))
    order4 = np.log2(e4[65] / e4[129])
    ok = errs[129] <= 5e-4 and (order >= 1.8 or exact) and order4 >= 1.8 and times[129] <= 60
    record(1, ok, f"Linf err {errs[129]:.2e} <= 5e-4 at N=129, roundoff-exact at both N: {exact} "
                  f"(raw ratio order {order:.2f}), q=4 oracle order {order4:.2f} >= 1.8, "
                  f"runtime {times[129]:.1f}s <= 60s")
    assert ok


def test_02_functionals(grids):
    g1, g2 = grids("disk", 129), grids("disk", 257)
    v3 = eval_Vq(paraboloid(g1), 3, 3)

    def rel(g, u, psi):
        an = first_variation_Vq(u, psi, 3, 3)
        return abs(an - fd_variation_Vq(u, psi, 3, 3)) / abs(an)

    psi = lambda g: ScalarField(g, 1 - np.sum(g.x**2, axis=1))
    r_par = rel(g1, paraboloid(g1), psi(g1))

    def pair(g):
        x, y = g.x[:, 0], g.x[:, 1]
        r2 = x * x + y * y
        u = ScalarField(g, (r2 - 1) * (1 + 0.3 * x + 0.5 * x * x + 0.2 * y * y))
        return u, ScalarField(g, (1 - r2) * np.exp(x))

    r129, r257 = rel(g1, *pair(g1)), rel(g2, *pair(g2))
    ok = abs(v3 - np.pi / 12) <= 1e-3 and r_par <= 0.02 and r129 <= 0.02 and r257 < r129
    record(2, ok, f"V3 {v3:.6f} vs pi/12 (|diff| {abs(v3 - np.pi / 12):.1e} <= 1e-3); first variation vs FD "
                  f"rel err {r_par:.1e} (paraboloid), non-radial pair {r129:.2e} at N=129 -> {r257:.2e} at N=257")
    assert ok


def test_03_invariant(grids):
    out = {}
    for N in (129, 257):
        g = grids("disk", N)
        r2 = np.sum(g.x**2, axis=1)
        a = eval_invariant_I0(paraboloid(g), 3)
        b = eval_invariant_I0(ScalarField(g, (r2 - 1) * (1 + 0.3 * g.x[:, 0] + 0.5 * r2)), 3)
        out[N] = abs(a - b) / abs(a)
    u = paraboloid(grids("disk", 129))
    scale = max(abs(eval_invariant_I0(u.scaled(t), 3) - eval_invariant_I0(u, 3)) / eval_invariant_I0(u, 3)
                for t in (0.01, 0.5, 3.0, 100.0))
    ok = out[129] <= 0.02 and out[257] <= 0.01 and scale <= 1e-10
    record(3, ok, f"I0 two-field rel gap {out[129]:.2e} <= 2% (N=129), {out[257]:.2e} <= 1% (N=257); "
                  f"scale invariance {scale:.1e} <= 1e-10")
    assert ok


def test_04_flow(grids):
    P = ProblemParams(3, 1.0, 4.0, 0.1)
    g = grids("disk", 65)
    t0 = time.perf_counter()
    state, rep = flow_run(P, base_shape(g), FlowConfig())
    wall = time.perf_counter() - t0
    mon = flow_monitors(state)
    un, rn = newton_solve(P, state.u)
    gap = float(np.max(np.abs(un.values - state.u.values)))
    sup_ut = float(np.max(np.abs(state.ut)))
    ok = (rep.converged and mon.descent and sup_ut <= 1e-6 and gap <= 1e-4 and mon.gradient
          and mon.ut_bounds and mon.rho_bound and mon.non_collapse and wall <= 300)
    record(4, ok, f"{state.steps} accepted steps, max J increase {mon.max_increase:.1e} <= 1e-8, "
                  f"terminal |u_t| {sup_ut:.1e} <= 1e-6, flow vs Newton {gap:.1e} <= 1e-4, "
                  f"monitors grad/u_t/rho/non-collapse {mon.gradient}/{mon.ut_bounds}/{mon.rho_bound}/"
                  f"{mon.non_collapse}, runtime {wall:.1f}s")
    assert ok


def test_05_scaling():
    chk = analysis.scaling_identity_check(ProblemParams(3, 1.0, 4.0), 10_000, seed=0)
    rows = analysis.scaling_sweep(trials=2000, seed=0)
    flags = all(r["flag"] == r["expected"] for r in rows)
    dev = max([chk.max_rel_dev] + [r["max_rel_dev"] for r in rows])
    ok = dev <= 1e-12 and flags
    record(5, ok, f"max rel deviation {dev:.1e} <= 1e-12 over 1e4 samples, strict-inequality flag == (q > p) "
                  f"on all {len(rows)} (p, q) pairs: {flags}")
    assert ok


def test_06_uniqueness(grids):
    P = ProblemParams(3, 1.0, 4.0, 0.1)
    g = grids("disk", 65)
    r2 = np.sum(g.x**2, axis=1)
    starts = [base_shape(g).scaled(0.1), base_shape(g).scaled(10.0),
              ScalarField(g, (r2 - 1) * (1 + 0.3 * g.x[:, 0] + 0.2 * g.x[:, 1] ** 2))]
    sols = []
    for s in starts:
        u, rep = newton_solve(P, s)
        assert rep.converged
        sols.append(u.values)
    worst = max(np.max(np.abs(a - b)) for a in sols for b in sols)
    ok = worst <= 1e-6
    record(6, ok, f"three starts, pairwise Linf {worst:.1e} <= 1e-6")
    assert ok


def test_07_critical(grids):
    P = ProblemParams(3, 2.0, 2.0)
    g = grids("disk", 65)
    a = eigen_solve(P, base_shape(g))
    r2 = np.sum(g.x**2, axis=1)
    b = eigen_solve(P, ScalarField(g, (r2 - 1) * (2 + g.x[:, 1] + 0.5 * g.x[:, 0] ** 2)))
    lam_or = radial_eigen(P).lam
    dlam = abs(a.lam_history[-1] - a.lam_history[-2])
    rel = abs(a.lam - lam_or) / lam_or
    ugap = float(np.max(np.abs(a.u.values - b.u.values)))
    sc = s_continuation(P, g, np.linspace(0.0, 0.8 * a.lam, 31))
    srel = abs(sc.lam_estimate - a.lam) / a.lam
    ok = (a.report.converged and b.report.converged and dlam < 1e-8 and rel <= 0.01 and ugap <= 1e-4
          and srel <= 0.05)
    record(7, ok, f"lambda {a.lam:.6f}, |dlambda| {dlam:.1e} < 1e-8, oracle {lam_or:.6f} (rel {rel:.1e} <= 1%), "
                  f"two-start eigenfunction gap {ugap:.1e} <= 1e-4, S^(p-1) {sc.lam_estimate:.5f} "
                  f"(rel {srel:.1e} <= 5%)")
    assert ok


def test_08_singular():
    P = ProblemParams(3, 0.0, 3.0, 1e-4)
    chain_eps = [1e-1, 1e-2, 1e-3, 1e-4]
    meas, norms, conv, mono = [], [], True, True
    for R in (0.5, 1.0, 2.0):
        g = build_grid(Disk(R), 65)
        chain = eps_continuation(P, g, chain_eps)
        conv &= len(chain) == len(chain_eps) and all(r.converged for *_, r in chain)
        mono &= monotone_norms(chain)
        meas.append(g.domain.measure)
        norms.append(chain[-1][1].sup_norm)
    stars = [analysis.star_measure(m, 3, 3.0) for m in meas]
    # calibrate c on the unit disk with a factor-two margin, then test every size
    c = 0.5 * analysis.lower_bound_constant(norms[1], stars[1], 0.0, 3.0)
    bound = all(nm >= c * s ** (1 / 3) for nm, s in zip(norms, stars))
    power = analysis.measured_power(meas, norms)
    pred = analysis.predicted_power(meas, 3, 0.0, 3.0)
    ok = conv and mono and c > 0 and bound and abs(power - pred) <= 0.2 * abs(pred)
    record(8, ok, f"eps chain to 1e-4 converged on R=0.5,1,2: {conv}, monotone sup-norms: {mono}; "
                  f"lower bound with c={c:.4f}: {bound}; power {power:.4f} vs predicted {pred:.4f} (within 20%)")
    assert ok


def test_09_barriers(grids):
    P = ProblemParams(3, 0.0, 3.0, 1e-4)
    g = grids("disk", 129)
    u = eps_continuation(P, g, [1e-1, 1e-2, 1e-3, 1e-4])[-1][1]
    specs, Cfit = barriers.calibrate_over_boundary(P, g.domain, g)
    cert = all(c.passed for _, c in specs)
    cmp = min((barriers.comparison_check(u, barriers.evaluate(s, g.x), 1e-10, g) for s, _ in specs),
              key=lambda c: c.worst_gap)
    ratio = float(np.max(np.abs(u.values) / g.boundary_distance() ** (2 / 3)))
    ok = cert and cmp.passed and ratio <= Cfit
    record(9, ok, f"v_a certified at all nodes for {len(specs)} anchors: {cert}; u >= v_a gap {cmp.worst_gap:.2e}; "
                  f"max |u|/dist^(2/3) {ratio:.3f} <= C_fit {Cfit:.3f}")
    assert ok


def _cusp_checks(P, spec0, dom, N):
    g = build_grid(dom, N)
    spec, cert = barriers.calibrate(spec0, P, g)
    try:
        chain = eps_continuation(P, g, [1e-1, 1e-2, 1e-3, 1e-4])
        conv = len(chain) == 4 and chain[-1][2].converged
        u = chain[-1][1]
    except RuntimeError as exc:
        return {"converged": False, "certified": cert.passed, "C": spec.C, "error": str(exc)}
    w = barriers.evaluate(spec, g.x)
    cmp = barriers.comparison_check(w, u, 1e-10, g)
    fit = analysis.fit_boundary_exponent(u, analysis.Ray((0.0, 0.0), (0.0, 1.0)))
    lower = bool(np.all(fit.abs_u >= 0.5 * spec.C * fit.d**0.8))
    env = analysis.envelope_defect(u)
    return {"converged": conv, "certified": cert.passed, "C": spec.C, "w_ge_u": cmp.passed, "slope": fit.slope,
            "r2": fit.r2, "lower": lower, "envelope": env, "sup": u.sup_norm}


def _cusp_line(r):
    if "error" in r:
        return f"solve failed ({r['error']}); w certified {r['certified']} (C={r['C']:.4f})"
    return (f"eps chain converged {r['converged']}, w certified {r['certified']} (C={r['C']:.4f}), "
            f"w >= u {r['w_ge_u']}, axis slope {r['slope']:.3f} in [0.62, 0.85] with R^2 {r['r2']:.4f}, "
            f"|u(0,x2)| >= (C/2) x2^0.8 on window {r['lower']}, convex-envelope defect "
            f"{r['envelope'][0]:.2e}/{r['envelope'][1]:.2e}")


def test_10_cusp():
    P = ProblemParams(3, 0.0, 3.0, 1e-4)
    spec0, cusp = barriers.make_supersolution(P, 0.8)
    assert isinstance(cusp, Cusp)
    lit = _cusp_checks(P, spec0, cusp, 129)
    ok = ("error" not in lit and lit["converged"] and lit["certified"] and lit["w_ge_u"]
          and 0.62 <= lit["slope"] <= 0.85 and lit["r2"] >= 0.99 and lit["lower"])
    record(10, ok, "cusp (s = 10/3, not convex) N=129: " + _cusp_line(lit))
    # supplementary, not counted: the same checks on the convex hull of the cusp
    hull = _cusp_checks(P, spec0, cusp.hull(), 257)
    note(10, "supplementary convex hull N=257: " + _cusp_line(hull))
    assert ok


def test_11_radial_exponent(grids):
    P = ProblemParams(3, -2.0, 3.0, 1e-6)
    prof = radial_solve(P)
    g = grids("disk", 257)
    chain = eps_continuation(P, g, [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    u = chain[-1][1]
    conv = all(r.converged for *_, r in chain) and len(chain) == 6
    err = float(np.max(np.abs(u.values - prof(_radius(g)))))
    fit = analysis.fit_boundary_exponent(u, analysis.Ray((1.0, 0.0), (-1.0, 0.0)))
    ok = conv and err <= 1e-3 and abs(fit.slope - 0.6) <= 0.05
    record(11, ok, f"N=257 eps chain to 1e-6 converged {conv}; Linf vs oracle {err:.2e} <= 1e-3; "
                   f"fitted exponent {fit.slope:.4f} vs 3/5 (|diff| {abs(fit.slope - 0.6):.3f} <= 0.05)")
    assert ok
