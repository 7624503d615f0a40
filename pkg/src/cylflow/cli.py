"""Command-line interface.

Subcommands: simulate, advdiff, verify-inequalities, kernel-table,
fit-rates, report.  The exit code is 0 only when every acceptance-relevant
check requested by the invocation passes; informational subcommands exit 0
on success.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import advdiff as advdiff_mod
from . import diagnostics as diag_mod
from . import inequalities as ineq_mod
from .biotsavart import grad_perp_K, kernel_K
from .config import (
    EstimatedConstant,
    RunConfig,
    get_constant,
    parse_config,
    serialize_config,
    update_constant,
)
from .io import read_csv_records, read_state, write_csv_records, write_state
from .solver import InitialDataSpec, make_initial_data, run
from .spectral import ScalarField, make_grid

__all__ = ["main"]


def _load_config(args):
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = RunConfig()
    overrides = {}
    for name in (
        "nx",
        "ny",
        "lam",
        "t_end",
        "dt_acc",
        "safety",
        "diag_step",
        "diag_times",
        "kind",
        "seed",
        "target_ru",
        "target_romega",
        "band",
        "rho",
        "center",
        "out_dir",
        "constants_path",
    ):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    if getattr(args, "no_snapshots", False):
        overrides["snapshots"] = False
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg.validate()


def _cmd_simulate(args):
    cfg = _load_config(args)
    os.makedirs(cfg.out_dir, exist_ok=True)
    grid = make_grid(cfg.nx, cfg.ny, cfg.lam)
    spec = InitialDataSpec(
        kind=cfg.kind,
        seed=cfg.seed,
        target_ru=cfg.target_ru,
        target_romega=cfg.target_romega,
        band=cfg.band,
    )
    state = make_initial_data(spec, grid)
    center = cfg.center
    try:
        center = float(center)
    except ValueError:
        pass
    options = diag_mod.DiagnosticsOptions(rho=cfg.rho, center=center)
    collector = diag_mod.TrajectoryCollector(options)
    records = []
    final = run(
        state,
        cfg.t_end,
        diag_times=cfg.diag_schedule(),
        sink=records,
        collector=collector,
        safety=cfg.safety,
        dt_acc=cfg.dt_acc,
    )
    write_csv_records(records, os.path.join(cfg.out_dir, "diagnostics.csv"))
    with open(os.path.join(cfg.out_dir, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(serialize_config(cfg))
    if cfg.snapshots:
        snap_dir = os.path.join(cfg.out_dir, "snapshots")
        os.makedirs(snap_dir, exist_ok=True)
        for i, snap in enumerate(collector.snapshots):
            write_state(snap.state, os.path.join(snap_dir, f"state_{i:05d}.bin"))
    summary = {
        "t_final": final.t,
        "m0_norm": state.m0_norm,
        "ru_achieved": collector.snapshots[0].sup_u if collector.snapshots else None,
        "center": collector.center,
        "records": len(records),
    }
    with open(os.path.join(cfg.out_dir, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"simulate: wrote {len(records)} records to {cfg.out_dir}")
    return 0


def _parse_floats(text):
    return [float(s) for s in text.split(",") if s.strip()]


def _cmd_advdiff(args):
    grid = make_grid(args.nx, args.ny, args.lam)
    drift = advdiff_mod.DriftSpec(kind=args.drift, amplitude=args.amplitude, period=args.period)
    os.makedirs(args.out_dir, exist_ok=True)
    failures = 0

    rows = []
    if args.p_list and args.q_list:
        ps = _parse_floats(args.p_list)
        qs = [np.inf if s.strip() in ("inf", "oo") else float(s) for s in args.q_list.split(",")]
        if len(ps) != len(qs):
            raise SystemExit("p-list and q-list must pair up")
        times = _parse_floats(args.times)
        sigma0 = args.sigma0 if args.sigma0 > 0 else 2.0 * max(grid.dx, grid.dy)
        y = (args.y1 if args.y1 is not None else grid.lam / 2.0, args.y2)
        bump = advdiff_mod.periodized_gaussian(grid, y, sigma0)
        for p, q in zip(ps, qs):
            res = advdiff_mod.check_lp_lq(drift, bump, p, q, times, dt_acc=args.dt_acc)
            for t, r in zip(res.times, res.ratios):
                rows.append((p, q, t, r))
        with open(os.path.join(args.out_dir, "lplq.csv"), "w", encoding="utf-8") as fh:
            fh.write("p,q,t,ratio\n")
            for p, q, t, r in rows:
                qtxt = "inf" if q == np.inf else format(q, ".17g")
                fh.write(f"{p:.17g},{qtxt},{t:.17g},{r:.17g}\n")

    env_rows = []
    if args.envelope_times:
        times = _parse_floats(args.envelope_times)
        sigma0 = args.sigma0 if args.sigma0 > 0 else 2.0 * max(grid.dx, grid.dy)
        y = (args.y1 if args.y1 is not None else grid.lam / 2.0, args.y2)
        for t in times:
            gam = advdiff_mod.fundamental_solution(drift, y, t, sigma0, grid=grid, dt_acc=args.dt_acc)
            fit = advdiff_mod.check_gaussian_envelope(gam, y, t, drift.amplitude, args.envelope_lambda)
            env_rows.append((t, fit))
            if not fit.passed:
                failures += 1
        with open(os.path.join(args.out_dir, "envelope.csv"), "w", encoding="utf-8") as fh:
            fh.write("t,slope,K2_est,lambda_eff,passed\n")
            for t, fit in env_rows:
                fh.write(
                    f"{t:.17g},{fit.slope:.17g},{fit.K2_est:.17g},{fit.lambda_eff:.17g},{int(fit.passed)}\n"
                )

    print(f"advdiff: {len(rows)} smoothing ratios, {len(env_rows)} envelope fits, {failures} failures")
    return 1 if failures else 0


def _cmd_verify_inequalities(args):
    grid = make_grid(args.nx, args.ny, args.lam)
    weights = None
    if args.weights:
        weights = {}
        for part in args.weights.split(","):
            name, _, w = part.partition("=")
            weights[name.strip()] = float(w)
    rows, report = ineq_mod.nash_suite(grid, args.samples, args.seed, weights)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "nash_samples.csv"), "w", encoding="utf-8") as fh:
        fh.write("family,lhs,rhs_branch1,rhs_branch2,ratio,psi_c\n")
        for r in rows:
            fh.write(
                f"{r['family']},{r['lhs']:.17g},{r['rhs_branch1']:.17g},"
                f"{r['rhs_branch2']:.17g},{r['ratio']:.17g},{r['psi_c']:.17g}\n"
            )

    # split-half stability of the suite maximum
    ratios = [r["ratio"] for r in rows]
    half = len(ratios) // 2
    m1, m2 = max(ratios[:half]), max(ratios[half:])
    stable = abs(m1 - m2) <= 0.15 * max(m1, m2)

    rng = np.random.default_rng(args.seed + 1)
    poincare_max = 0.0
    for _ in range(args.poincare_samples):
        f = ineq_mod.sample_test_field(grid, rng, "generic")
        vals = f.data - f.data.mean(axis=1, keepdims=True)
        poincare_max = max(poincare_max, ineq_mod.poincare_check(ScalarField(grid, vals)))
    ok = stable and poincare_max <= 1.0 + 1e-10

    summary = {
        "samples": report.samples,
        "nash_max_ratio": report.max_ratio,
        "nash_quantiles": report.quantiles,
        "split_half": [m1, m2],
        "stable_15pct": stable,
        "poincare_max": poincare_max,
        "config": report.config,
    }
    with open(os.path.join(args.out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    if args.constants_path:
        update_constant(
            args.constants_path,
            EstimatedConstant(name="C_nash", value=report.max_ratio, provenance=report.config),
        )
    print(
        f"verify-inequalities: nash max {report.max_ratio:.4f} "
        f"(halves {m1:.4f}/{m2:.4f}), poincare max {poincare_max:.6f}"
    )
    return 0 if ok else 1


def _parse_lattice(text):
    a, b, n = text.split(":")
    return np.linspace(float(a), float(b), int(n))


def _cmd_kernel_table(args):
    xs = _parse_lattice(args.x1)
    ys = _parse_lattice(args.x2)
    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    try:
        out.write("x1,x2,K,gradperpK_1,gradperpK_2\n")
        for x in xs:
            for y in ys:
                try:
                    k = kernel_K(x, y)
                    g1, g2 = grad_perp_K(x, y)
                except ValueError:
                    k, g1, g2 = math.nan, math.nan, math.nan
                out.write(f"{x:.17g},{y:.17g},{k:.17g},{g1:.17g},{g2:.17g}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_fit_rates(args):
    records = read_csv_records(args.csv)
    series = [(r.t, getattr(r, args.column)) for r in records]
    fit = diag_mod.fit_decay_rate(series, (args.t_lo, args.t_hi), args.model)
    print(
        json.dumps(
            {
                "model": fit.model,
                "exponent_or_rate": fit.exponent_or_rate,
                "window": list(fit.window),
                "rms_log_residual": fit.rms_log_residual,
            }
        )
    )
    return 0


def _cmd_report(args):
    snap_dir = os.path.join(args.run_dir, "snapshots")
    names = sorted(n for n in os.listdir(snap_dir) if n.endswith(".bin"))
    if not names:
        raise SystemExit(f"no snapshots under {snap_dir}")
    states = [read_state(os.path.join(snap_dir, n)) for n in names]
    states.sort(key=lambda s: s.t)
    collector = diag_mod.TrajectoryCollector(diag_mod.DiagnosticsOptions(rho=args.rho))
    for s in states:
        collector.add(s)
    traj = collector.trajectory()

    if args.c3 is not None:
        c3 = args.c3
    else:
        try:
            c3 = get_constant(args.constants_path, "C3")
        except KeyError:
            # estimate the flux constant from this run and record it
            c3 = ineq_mod.flux_bound_constants(traj)["C3"].max_ratio
            g = states[0].grid
            update_constant(
                args.constants_path,
                EstimatedConstant(
                    "C3", c3, {"nx": g.nx, "ny": g.ny, "lambda": g.lam, "run_dir": args.run_dir}
                ),
            )
            print(f"report: estimated C3={c3:.4g} from the run and recorded it in {args.constants_path}")
    cfg = diag_mod.TheoremCheckConfig(
        c3=c3,
        window=tuple(_parse_floats(args.window)) if args.window else None,
        t_grid=tuple(_parse_floats(args.t_grid)),
        tau=args.tau,
        laminar_window=tuple(_parse_floats(args.laminar_window)),
    )
    report = diag_mod.theorem_checks(traj, cfg)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, default=float)
        fh.write("\n")

    failures = 0
    for row in report["localized_energy"]:
        ok = row["ratio"] <= 1.0
        failures += 0 if ok else 1
        print(f"localized-energy T={row['T']:g}: ratio={row['ratio']:.4f} {'PASS' if ok else 'FAIL'}")
    lam_sec = report["laminar"]
    if "passes_floor" in lam_sec:
        ok = lam_sec["passes_floor"]
        failures += 0 if ok else 1
        print(
            f"laminar: ul2 rate {lam_sec['ul2_rate']:.3f} vs floor {lam_sec['rate_floor']:.3f} "
            f"{'PASS' if ok else 'FAIL'}"
        )
    print(f"velocity bound ratio: {report['velocity_bound']['ratio']:.4f}")
    print(f"vorticity decay ratio: {report['vorticity_decay']['ratio']:.4f}")
    print(f"smoothing max ratio: {report['smoothing']['max_ratio']:.4f}")
    print(f"report: wrote {args.out}")
    return 1 if failures else 0


def _build_parser():
    ap = argparse.ArgumentParser(prog="cylflow", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate the vorticity equation with diagnostics")
    sim.add_argument("--config", help="flat key=value config file")
    sim.add_argument("--nx", type=int)
    sim.add_argument("--ny", type=int)
    sim.add_argument("--lambda", dest="lam", type=float)
    sim.add_argument("--t-end", dest="t_end", type=float)
    sim.add_argument("--dt-acc", dest="dt_acc", type=float)
    sim.add_argument("--safety", type=float)
    sim.add_argument("--diag-step", dest="diag_step", type=float)
    sim.add_argument("--diag-times", dest="diag_times")
    sim.add_argument("--kind")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--target-ru", dest="target_ru", type=float)
    sim.add_argument("--target-romega", dest="target_romega", type=float)
    sim.add_argument("--band", type=int)
    sim.add_argument("--rho", type=float)
    sim.add_argument("--center")
    sim.add_argument("--out", dest="out_dir")
    sim.add_argument("--no-snapshots", action="store_true")
    sim.set_defaults(fn=_cmd_simulate)

    adv = sub.add_parser("advdiff", help="linear advection-diffusion checks")
    adv.add_argument("--drift", default="zero", choices=["zero", "steady_shear_u1", "time_periodic_shear"])
    adv.add_argument("--amplitude", type=float, default=1.0)
    adv.add_argument("--period", type=float, default=1.0)
    adv.add_argument("--nx", type=int, default=128)
    adv.add_argument("--ny", type=int, default=32)
    adv.add_argument("--lambda", dest="lam", type=float, default=16.0)
    adv.add_argument("--dt-acc", dest="dt_acc", type=float, default=1e-3)
    adv.add_argument("--p-list", dest="p_list", default="")
    adv.add_argument("--q-list", dest="q_list", default="")
    adv.add_argument("--times", default="0.1,0.5,1.0")
    adv.add_argument("--sigma0", type=float, default=0.0, help="0 means 2*max(dx, dy)")
    adv.add_argument("--y1", type=float, default=None)
    adv.add_argument("--y2", type=float, default=0.5)
    adv.add_argument("--envelope-times", dest="envelope_times", default="")
    adv.add_argument("--envelope-lambda", dest="envelope_lambda", type=float, default=0.9)
    adv.add_argument("--out", dest="out_dir", default="out-advdiff")
    adv.set_defaults(fn=_cmd_advdiff)

    ver = sub.add_parser("verify-inequalities", help="sample the functional inequalities")
    ver.add_argument("--samples", type=int, default=1000)
    ver.add_argument("--poincare-samples", dest="poincare_samples", type=int, default=50)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--nx", type=int, default=64)
    ver.add_argument("--ny", type=int, default=64)
    ver.add_argument("--lambda", dest="lam", type=float, default=16.0)
    ver.add_argument("--weights", default="", help="family=weight list, e.g. broad=1,narrow=2")
    ver.add_argument("--out", dest="out_dir", default="out-inequalities")
    ver.add_argument("--constants", dest="constants_path", default="")
    ver.set_defaults(fn=_cmd_verify_inequalities)

    ker = sub.add_parser("kernel-table", help="tabulate K and grad-perp K as CSV")
    ker.add_argument("--x1", required=True, help="start:stop:count")
    ker.add_argument("--x2", required=True, help="start:stop:count")
    ker.add_argument("--out", default="-")
    ker.set_defaults(fn=_cmd_kernel_table)

    fit = sub.add_parser("fit-rates", help="decay-rate fit on a diagnostics CSV column")
    fit.add_argument("--csv", required=True)
    fit.add_argument("--column", default="sup_uhat")
    fit.add_argument("--t-lo", dest="t_lo", type=float, required=True)
    fit.add_argument("--t-hi", dest="t_hi", type=float, required=True)
    fit.add_argument("--model", default="exponential", choices=["exponential", "power"])
    fit.set_defaults(fn=_cmd_fit_rates)

    rep = sub.add_parser("report", help="theorem-level report from a simulate run directory")
    rep.add_argument("--run-dir", dest="run_dir", required=True)
    rep.add_argument("--constants", dest="constants_path", default="constants.json")
    rep.add_argument("--c3", type=float, default=None, help="override the ledger C3")
    rep.add_argument("--rho", type=float, default=1.0)
    rep.add_argument("--t-grid", dest="t_grid", default="1,4,16")
    rep.add_argument("--tau", type=float, default=0.1)
    rep.add_argument("--window", default="")
    rep.add_argument("--laminar-window", dest="laminar_window", default="0.05,0.5")
    rep.add_argument("--out", default="report.json")
    rep.set_defaults(fn=_cmd_report)
    return ap


def main(argv=None):
    args = _build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
