"""Command-line surface.

Subcommands: run (flow + diagnostics), oracle (stationary solve only),
compare (one flow per speed, shared data), check (identity suite on a
short trajectory), dump-info (CMAF1 header echo).  Exit codes: 0 success
or converged, 2 NOT_CONVERGED, 1 error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import cmaf
from .config import RunConfig
from .diagnostics import (
    CSV_HEADER_COMMENT,
    COLUMNS,
    append_csv,
    fit_decay,
)
from .errors import CmaflowError, ConfigError
from .flow import run_flow, stable_dt
from .identities import all_checks, f2_two_route, logtrh_two_route, \
    short_trajectory
from .speed import (
    SpeedFunction,
    inverse_ma_speed,
    linear_speed,
    log_speed,
    neg_power_scaled_speed,
    power_speed,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

IDENTITY_HEADER = "# cmaflow-identity v1"


def _max_workers(count: int) -> int:
    env = os.environ.get("CMAFLOW_THREADS")
    if env:
        try:
            return max(1, min(count, int(env)))
        except ValueError:
            raise ConfigError("CMAFLOW_THREADS", f"not an integer: {env!r}")
    return min(4, count)


def parse_speed_spec(spec: str) -> SpeedFunction:
    parts = spec.split(":")
    kind = parts[0]
    if kind == "log":
        return log_speed()
    if kind == "linear":
        return linear_speed()
    if kind == "inverse_ma":
        return inverse_ma_speed()
    if kind == "power":
        if len(parts) != 2:
            raise ConfigError("speeds", f"power needs an exponent: {spec!r}")
        return power_speed(float(parts[1]))
    if kind == "neg_power_scaled":
        if len(parts) != 3:
            raise ConfigError("speeds", f"expected neg_power_scaled:a:scale, got {spec!r}")
        return neg_power_scaled_speed(float(parts[1]), float(parts[2]))
    raise ConfigError("speeds", f"unknown speed {spec!r}")


def _setup(cfg: RunConfig):
    chi = cfg.build_chi()
    f = cfg.build_f()
    u0 = cfg.build_u0()
    policy = cfg.build_policy()
    return chi, f, u0, policy


def cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    chi, f, u0, policy = _setup(cfg)
    F = cfg.build_speed()
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    csv_path = outdir / "diagnostics.csv"
    with open(csv_path, "w") as fh:
        fh.write(CSV_HEADER_COMMENT + "\n")
        fh.write(",".join(COLUMNS) + "\n")
        step_count = [0]

        def on_step(state, rec):
            append_csv(fh, rec)
            if cfg.dump_every > 0 and step_count[0] % cfg.dump_every == 0:
                cmaf.write_field(outdir / f"u_{step_count[0]:06d}.cmaf", state.u)
            step_count[0] += 1

        result = run_flow(u0, f, chi, F, policy, A=cfg.A, B=cfg.B,
                          on_step=on_step)

    cmaf.write_field(outdir / "phi.cmaf", result.phi)
    fit = fit_decay([r.t for r in result.series],
                    [r.osc_udot for r in result.series])
    print(f"status: {result.status}")
    print(f"steps: {result.steps}  t_final: {result.state.t:.6g}  "
          f"residual_sup: {result.series[-1].residual_sup:.3e}  c0: {result.c0:.9f}")
    if fit.fitted:
        print(f"decay fit: eta = {fit.eta:.4f}  C = {fit.C:.4g}  "
              f"R^2 = {fit.r_squared:.4f}")
    else:
        print(f"decay fit skipped: {fit.note}")
    print(f"wrote {csv_path} and {outdir / 'phi.cmaf'}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_oracle(args) -> int:
    from .stationary import StationaryProblem, residual, solve_n1, solve_newton

    cfg = RunConfig.load(args.config)
    chi, f, _, _ = _setup(cfg)
    problem = StationaryProblem(chi, f)
    phi = solve_n1(problem) if cfg.n == 1 else solve_newton(problem)
    _, sup = residual(chi, f, phi, problem.c0)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    cmaf.write_field(outdir / "phi_oracle.cmaf", phi)
    print(f"c0: {problem.c0:.12f}")
    print(f"stationary residual sup: {sup:.3e}")
    print(f"wrote {outdir / 'phi_oracle.cmaf'}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = RunConfig.load(args.config)
    chi, f, u0, policy = _setup(cfg)
    specs = [s.strip() for s in args.speeds.split(",") if s.strip()]
    if not specs:
        raise ConfigError("speeds", "empty speed list")
    speeds = [(s, parse_speed_spec(s)) for s in specs]

    def one(item):
        name, F = item
        return name, run_flow(u0, f, chi, F, policy, A=cfg.A, B=cfg.B)

    with ThreadPoolExecutor(max_workers=_max_workers(len(speeds))) as pool:
        results = list(pool.map(one, speeds))

    all_converged = True
    for name, res in results:
        fit = fit_decay([r.t for r in res.series],
                        [r.osc_udot for r in res.series])
        eta = f"{fit.eta:.4f}" if fit.fitted else "n/a"
        print(f"{name:>20}: {res.status:>14}  steps={res.steps:6d}  "
              f"residual={res.series[-1].residual_sup:.3e}  eta={eta}")
        all_converged &= res.converged

    max_diff = 0.0
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            ni, ri = results[i]
            nj, rj = results[j]
            d = float(np.max(np.abs(ri.phi.values - rj.phi.values)))
            max_diff = max(max_diff, d)
            print(f"sup|phi[{ni}] - phi[{nj}]| = {d:.3e}")
    if len(results) > 1:
        print(f"max pairwise phi difference: {max_diff:.3e}")
    return EXIT_OK if all_converged else EXIT_NOT_CONVERGED


def cmd_check(args) -> int:
    from .flow import FlowState

    cfg = RunConfig.load(args.config)
    chi, f, u0, policy = _setup(cfg)
    F = cfg.build_speed()

    state0 = FlowState.create(0.0, u0, f, chi, F)
    dt = min(cfg.check_dt, stable_dt(state0, F, f, policy))
    states = short_trajectory(u0, f, chi, F, dt, cfg.check_steps)
    reports = all_checks(states, F, f, chi)
    mid = states[len(states) // 2]
    algebra = [
        ("f2_two_route", f2_two_route(mid, F, f, chi)),
        ("logtrh_two_route", logtrh_two_route(mid, F, f, chi)),
    ]

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    report_path = outdir / "identity_report.csv"
    with open(report_path, "w") as fh:
        fh.write(IDENTITY_HEADER + "\n")
        fh.write("name,t,residual_sup,dt,N\n")
        for rep in reports:
            fh.write(f"{rep.name},{rep.t:.17g},{rep.residual_sup:.17g},"
                     f"{rep.dt:.17g},{rep.N}\n")
        for name, val in algebra:
            fh.write(f"{name},{mid.t:.17g},{val:.17g},0,{cfg.N}\n")

    for rep in reports:
        print(f"{rep.name:>16}: residual_sup = {rep.residual_sup:.3e} "
              f"(dt = {rep.dt:.3e}, N = {rep.N})")
    for name, val in algebra:
        print(f"{name:>16}: max pointwise difference = {val:.3e}")
    print(f"wrote {report_path}")
    return EXIT_OK


def cmd_dump_info(args) -> int:
    n, N, count = cmaf.read_info(args.field)
    print(f"n={n}, N={N}, count={count}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cmaflow",
        description="Parabolic complex Monge-Ampere flow solver on flat tori",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="integrate the flow and record diagnostics")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("oracle", help="stationary solve only")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("compare", help="run several speeds on shared data")
    sp.add_argument("config")
    sp.add_argument("--speeds", default="log,linear,power:2,inverse_ma")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("check", help="identity suite on a short trajectory")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("dump-info", help="CMAF1 header echo")
    sp.add_argument("field")
    sp.set_defaults(func=cmd_dump_info)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CmaflowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
