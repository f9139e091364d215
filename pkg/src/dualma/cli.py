"""Config-driven experiment runner.

Exit status: 0 all asserted properties hold, 1 a property failed, 2 a solver
did not converge, 3 the configuration is invalid.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, barriers, elliptic, flow, oracle
from .config import ConfigError, RunConfig, load_config
from .functionals import evaluate_all
from .geometry import Cusp, CuspHull, Disk, GeometryError, chart_inverse, chart_point
from .grid import GridError, build_grid, dump_field, paraboloid
from .problem import ParamsError, ProblemParams
from .report import Report

EXIT_OK, EXIT_PROPERTY, EXIT_NONCONVERGENCE, EXIT_CONFIG = 0, 1, 2, 3


class NonConvergence(RuntimeError):
    pass


def _eps_chain(cfg: RunConfig) -> list:
    if "eps_chain" in cfg.options:
        return [float(v) for v in cfg.options["eps_chain"].replace(",", " ").split()]
    target = cfg.params.eps
    if target >= 1e-1:
        return [target]
    k = int(round(np.log10(1e-1 / target))) + 1
    return list(np.geomspace(1e-1, target, k))


def _solve(cfg: RunConfig, grid, rep: Report):
    """Newton solve, or a warm-started eps chain in the singular regime."""
    P = cfg.params
    tol = cfg.tolerances["newton"]
    if P.regime == "singular":
        chain = elliptic.eps_continuation(P, grid, _eps_chain(cfg), tol=tol)
        rep.results["eps_chain"] = [{"eps": e, "converged": r.converged, "iterations": r.iterations,
                                     "sup_norm": u.sup_norm, "residual": r.residual} for e, u, r in chain]
        e, u, r = chain[-1]
        if not r.converged or e != _eps_chain(cfg)[-1]:
            raise NonConvergence(f"eps chain stopped at eps = {e:g}: {r.message}")
        rep.check("eps_monotone_norms", elliptic.monotone_norms(chain))
        return u, r, chain
    u, r = elliptic.solve(P, grid, tol=tol, tol_convex=-cfg.tolerances["convex"])
    if not r.converged:
        raise NonConvergence(r.message)
    return u, r, None


def _grid(cfg: RunConfig):
    dom = cfg.build_domain()
    if isinstance(dom, Cusp) and not dom.is_convex:
        print(f"warning: cusp with s = {dom.s:.4g} is not convex; its convex hull is kind = cusp-hull",
              file=sys.stderr)
    return build_grid(dom, cfg.N)


def cmd_solve(cfg, rep, out):
    grid = _grid(cfg)
    u, r, _ = _solve(cfg, grid, rep)
    rep.results["solve"] = r.to_dict()
    rep.results["sup_norm"] = u.sup_norm
    rep.check("converged", r.converged)
    rep.check("convexity", r.convexity_violations == 0, violations=r.convexity_violations)
    rep.check("negative_interior", bool(np.all(u.values < 0)))
    dump_field(u, out / "field.csv")


def cmd_flow(cfg, rep, out):
    P = cfg.params
    grid = _grid(cfg)
    fc = flow.FlowConfig(scheme=cfg.options.get("scheme", "implicit").strip(),
                         tol_steady=cfg.tolerances["steady"], descent_tol=cfg.tolerances["descent"],
                         t_max=float(cfg.options.get("t_max", 1e6)))
    u0 = elliptic.base_shape(grid).scaled(float(cfg.options.get("u0_scale", 1.0)))
    state, r = flow.flow_run(P, u0, fc)
    state.dump_history(out / "history.csv")
    dump_field(state.u, out / "field.csv")
    rep.results["flow"] = r.to_dict()
    rep.results["steps"] = state.steps
    rep.results["rejected"] = state.rejected
    if not r.converged:
        raise NonConvergence(r.message)
    mon = flow.flow_monitors(state, cfg.tolerances["descent"])
    rep.results["monitors"] = mon.__dict__
    rep.check("energy_descent", mon.descent, max_increase=mon.max_increase)
    rep.check("gradient_monitor", mon.gradient)
    rep.check("ut_monitor", mon.ut_bounds)
    rep.check("rho_lower_bound", mon.rho_bound, ratio=mon.min_rho_ratio)
    rep.check("non_collapse", mon.non_collapse)
    un, rn = elliptic.newton_solve(P, state.u, tol=cfg.tolerances["newton"])
    gap = float(np.max(np.abs(un.values - state.u.values)))
    rep.check("flow_vs_newton", rn.converged and gap <= float(cfg.options.get("agreement", 1e-4)), gap=gap)


def _is_centered_disk(dom) -> bool:
    return isinstance(dom, Disk) and np.allclose(dom.center, 0)


def cmd_eigen(cfg, rep, out):
    P = cfg.params
    grid = _grid(cfg)
    res = elliptic.eigen_solve(P, elliptic.base_shape(grid), tol_eigen=cfg.tolerances["eigen"],
                               tol=cfg.tolerances["newton"])
    rep.results["eigen"] = res.report.to_dict()
    rep.results["lambda"] = res.lam
    rep.results["lambda_history"] = res.lam_history
    dump_field(res.u, out / "field.csv")
    if not res.report.converged:
        raise NonConvergence(res.report.message)
    dom = grid.domain
    if _is_centered_disk(dom):
        prof = oracle.radial_eigen(P, dom.R)
        rel = abs(res.lam - prof.lam) / prof.lam
        rep.results["oracle_lambda"] = prof.lam
        rep.check("oracle_lambda", rel <= 0.01, relative_error=rel)


def cmd_continuation(cfg, rep, out):
    P = cfg.params
    grid = _grid(cfg)
    if P.regime == "singular":
        u, r, chain = _solve(cfg, grid, rep)
        dump_field(u, out / "field.csv")
        return
    if P.regime != "critical":
        raise ConfigError("continuation runs the eps chain (singular) or the s family (critical)")
    ev = elliptic.eigen_solve(P, elliptic.base_shape(grid), tol_eigen=cfg.tolerances["eigen"],
                              tol=cfg.tolerances["newton"])
    if not ev.report.converged:
        raise NonConvergence(ev.report.message)
    # 1/||u_s|| vanishes at s = S with S^(p-1) = lambda; stop well short of it
    s_max = float(cfg.options.get("s_max", 0.8 * ev.lam ** (1.0 / (P.p - 1))))
    s_seq = list(np.linspace(0.0, s_max, int(cfg.options.get("s_steps", 31))))
    sc = elliptic.s_continuation(P, grid, s_seq, tol=cfg.tolerances["newton"])
    rep.results["lambda"] = ev.lam
    rep.results["s"] = sc.s
    rep.results["norms"] = sc.norms
    rep.results["S"] = sc.S
    rep.results["S_pow"] = sc.lam_estimate
    if len(sc.s) < 4:
        raise NonConvergence("s continuation stopped before four converged steps")
    dump_field(sc.fields[-1], out / "field.csv")
    rel = abs(sc.lam_estimate - ev.lam) / ev.lam
    rep.check("blowup_vs_lambda", rel <= 0.05, relative_error=rel)


def _probe(dom):
    if isinstance(dom, (Cusp, CuspHull)):
        return analysis.Ray((0.0, 0.0), (0.0, 1.0))
    if isinstance(dom, Disk):
        c = np.asarray(dom.center)
        return analysis.Ray(tuple(c + [dom.R, 0.0]), (-1.0, 0.0))
    return None


def cmd_holder(cfg, rep, out):
    grid = _grid(cfg)
    u, r, _ = _solve(cfg, grid, rep)
    rep.results["solve"] = r.to_dict()
    dump_field(u, out / "field.csv")
    probe = _probe(grid.domain)
    fit, lo, hi = analysis.half_window_slopes(u, probe)
    fit.dump(out / "profile.csv")
    rep.results["fit"] = fit.to_dict()
    rep.results["half_window_slopes"] = [lo, hi]
    if fit.r2 >= 0.999:
        rep.check("half_window_reproducible", abs(lo - hi) <= 0.05, difference=abs(lo - hi))
    band = cfg.options.get("band")
    if band is None and isinstance(grid.domain, (Cusp, CuspHull)):
        band = "0.62 0.85"
    if band is not None:
        b0, b1 = (float(v) for v in band.replace(",", " ").split())
        rep.check("exponent_band", b0 <= fit.slope <= b1, slope=fit.slope, band=[b0, b1])
        rep.check("fit_r2", fit.r2 >= float(cfg.options.get("min_r2", 0.99)), r2=fit.r2)


def cmd_barriers(cfg, rep, out):
    P = cfg.params
    grid = _grid(cfg)
    dom = grid.domain
    u, r, _ = _solve(cfg, grid, rep)
    dump_field(u, out / "field.csv")
    tol = cfg.tolerances["comparison"]
    if isinstance(dom, Disk):
        specs, Cmax = barriers.calibrate_over_boundary(P, dom, grid)
        rep.results["C_fit"] = Cmax
        rep.results["anchors"] = [c.summary() for _, c in specs]
        specs[0][1].dump(out / "certificate.csv")
        rep.check("subsolution_certified", all(c.passed for _, c in specs))
        worst = min((barriers.comparison_check(u, barriers.evaluate(s, grid.x), tol, grid) for s, _ in specs),
                    key=lambda c: c.worst_gap)
        rep.check("u_above_subsolution", worst.passed, worst_gap=worst.worst_gap, worst_x=worst.worst_x)
        a = barriers.sub_exponent(P)
        ratio = np.abs(u.values) / grid.boundary_distance() ** a
        rep.results["upper_ratio_max"] = float(ratio.max())
        rep.check("upper_bound", float(ratio.max()) <= Cmax, ratio=float(ratio.max()), C_fit=Cmax)
    elif isinstance(dom, (Cusp, CuspHull)):
        spec, cusp = barriers.make_supersolution(P, dom.a)
        spec, cert = barriers.calibrate(spec, P, grid)
        cert.dump(out / "certificate.csv")
        rep.results["supersolution"] = cert.summary()
        rep.check("supersolution_certified", cert.passed)
        w = barriers.evaluate(spec, grid.x)
        cmp = barriers.comparison_check(w, u, tol, grid)
        rep.check("w_above_u", cmp.passed, worst_gap=cmp.worst_gap, worst_x=cmp.worst_x)
    else:
        raise ConfigError("barriers run on a disk (subsolution) or a cusp domain (supersolution)")


def cmd_oracle(cfg, rep, out):
    par = oracle.paraboloid_check()
    rep.check("paraboloid_exact", par <= 1e-9, deviation=par)
    sa = oracle.self_agreement(ProblemParams(3, 1.0, 4.0))
    rep.check("self_agreement", sa <= 1e-8, deviation=sa)
    cap = oracle.cap_area_check(3, np.pi / 4, 257)
    rep.check("cap_area", cap <= 1e-3, relative_error=cap)
    dom = cfg.build_domain()
    if _is_centered_disk(dom) and cfg.params.regime in ("subcritical", "supercritical", "singular", "critical"):
        P = cfg.params
        prof = oracle.radial_eigen(P, dom.R) if P.regime == "critical" else oracle.radial_solve(P, dom.R)
        prof.dump(out / "profile.csv")
        rep.results["m"] = prof.m
        rep.results["lambda"] = prof.lam


def cmd_selftest(cfg, rep, out):
    P = ProblemParams(3, 1.0, 3.0)
    grid = build_grid(Disk(1.0), 65)
    u, r = elliptic.solve(P, grid)
    err = float(np.max(np.abs(u.values - paraboloid(grid).values)))
    rep.check("golden_paraboloid", r.converged and err <= 5e-4, error=err)
    rng = np.random.default_rng(cfg.seed)
    x = rng.uniform(-3, 3, (1000, 2))
    rt = float(np.max(np.abs(chart_inverse(chart_point(x)) - x)))
    rep.check("chart_round_trip", rt <= 1e-12, error=rt)
    sc = analysis.scaling_identity_check(ProblemParams(3, 1.0, 4.0), 10_000, cfg.seed)
    rep.check("scaling_identity", sc.max_rel_dev <= 1e-12 and sc.flag == sc.expected_flag,
              deviation=sc.max_rel_dev)
    rep.results["functionals"] = evaluate_all(u, P).to_dict()


COMMANDS = {
    "solve": cmd_solve, "flow": cmd_flow, "eigen": cmd_eigen, "continuation": cmd_continuation,
    "holder": cmd_holder, "barriers": cmd_barriers, "oracle": cmd_oracle, "selftest": cmd_selftest,
}


def run(cfg: RunConfig) -> int:
    try:
        cfg.validate()
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rep = Report(cfg.subcommand, cfg.to_dict())
    try:
        COMMANDS[cfg.subcommand](cfg, rep, out)
        if rep.all_passed:
            rep.status, rep.message = EXIT_OK, "all properties hold"
        else:
            rep.status, rep.message = EXIT_PROPERTY, "failed: " + ", ".join(rep.failed())
    except (ConfigError, ParamsError, GeometryError, GridError) as exc:
        rep.status, rep.message = EXIT_CONFIG, f"invalid config: {exc}"
    except (NonConvergence, oracle.OracleError, barriers.BarrierError, analysis.AnalysisError,
            flow.FlowError) as exc:
        rep.status, rep.message = EXIT_NONCONVERGENCE, f"{type(exc).__name__}: {exc}"
    rep.write(out)
    stream = sys.stdout if rep.status == EXIT_OK else sys.stderr
    print(f"{cfg.subcommand}: {rep.message} (exit {rep.status})", file=stream)
    return rep.status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="dualma", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="INI run configuration")
    ap.add_argument("--grid", type=int, dest="N", help="grid resolution N (overrides the config)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    over = {"N": args.N, "out": args.out, "seed": args.seed}
    cfg = replace(cfg, subcommand=args.subcommand, **{k: v for k, v in over.items() if v is not None})
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
