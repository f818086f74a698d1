"""Command-line entry point.

Subcommands:

    sktmc solve-mc --config run.cfg --out results/     Monte Carlo solve
    sktmc solve-fd --config run.cfg --out results/     finite-difference solve
    sktmc verify   --config run.cfg --out results/     run the check suite
    sktmc compare  --config run.cfg --out results/     MC vs FD sup-norm check

Common flags: --seed N, --workers N, --mode {layered,picard}, --progress.
Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 one or more verification checks failed.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .coeffs import NonPositiveRadicand
from .config import ConfigError, RunConfig, config_echo, load_config
from .fd import CFLViolation, FDConfig, cfl_limit, fd_solve
from .mc import FieldTrajectory, NoConvergence, SolverConfig, solve_layered, solve_picard
from .model import field_from_initial, make_gaussian_test
from .sde import NonFiniteState
from .verify import (
    compare_trajectories,
    duality_pairing,
    flow_monotonicity,
    martingale_check,
    weak_residual,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_CHECK_FAILED = 3


def write_trajectory_csv(path: Path, traj: FieldTrajectory) -> int:
    """Fixed column order, full-precision decimal floats, locale-independent."""
    nodes = traj[0].grid.nodes()
    rows = 0
    with open(path, "w", newline="") as fh:
        fh.write("t,x,u1,u2,v1,v2\n")
        for f in traj.fields:
            for i, x in enumerate(nodes):
                fh.write(",".join(repr(float(v)) for v in
                                  (f.t, x, f.u1[i], f.u2[i], f.v1[i], f.v2[i])) + "\n")
                rows += 1
    return rows


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fd_config(cfg: RunConfig) -> FDConfig:
    u1_0, u2_0 = cfg.initial_profiles()
    f0 = field_from_initial(cfg.grid, u1_0, u2_0)
    limit = cfl_limit(f0, cfg.params)
    dt_fd = cfg.fd_dt if cfg.fd_dt is not None else cfg.fd_cfl_safety * limit
    return FDConfig(dt_fd=dt_fd, snapshot_dt=cfg.solver.dt)


def _run_solve_mc(cfg: RunConfig, outdir: Path, emit_progress: bool) -> int:
    u1_0, u2_0 = cfg.initial_profiles()
    progress_records: list[dict] = []
    progress = progress_records.append if emit_progress else None
    t0 = time.time()
    drift_sign = -1.0 if cfg.flip_drift_correction else 1.0
    if cfg.mode == "picard":
        result = solve_picard(u1_0, u2_0, cfg.params, cfg.grid, cfg.solver,
                              progress=progress, drift_sign=drift_sign)
        extra = {"iterations": result.iterations,
                 "residuals": list(result.residuals),
                 "converged": result.converged}
        if not result.converged:
            raise NoConvergence(
                f"Picard did not converge in {result.iterations} passes; "
                f"residuals {list(result.residuals)}")
    else:
        result = solve_layered(u1_0, u2_0, cfg.params, cfg.grid, cfg.solver,
                               progress=progress, drift_sign=drift_sign)
        extra = {}
    runtime = time.time() - t0
    rows = write_trajectory_csv(outdir / "trajectory.csv", result.trajectory)
    summary = {
        "solver": "mc",
        "mode": cfg.mode,
        "runtime_s": runtime,
        "seed": cfg.solver.master_seed,
        "workers": cfg.solver.workers,
        "rows": rows,
        "layers": len(result.trajectory) - 1,
        "clips": result.clips,
        "clamps": result.clamps,
        "interp_events": result.events,
        "clamp_fraction": result.clamp_fraction,
        "config": config_echo(cfg),
        **extra,
    }
    _write_json(outdir / "summary.json", summary)
    if emit_progress:
        with open(outdir / "progress.ndjson", "w") as fh:
            for rec in progress_records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return EXIT_OK


def _run_solve_fd(cfg: RunConfig, outdir: Path) -> int:
    u1_0, u2_0 = cfg.initial_profiles()
    fdcfg = _fd_config(cfg)
    t0 = time.time()
    traj = fd_solve(u1_0, u2_0, cfg.params, cfg.grid, cfg.solver.T, fdcfg)
    runtime = time.time() - t0
    rows = write_trajectory_csv(outdir / "trajectory.csv", traj)
    _write_json(outdir / "summary.json", {
        "solver": "fd",
        "runtime_s": runtime,
        "dt_fd": fdcfg.dt_fd,
        "rows": rows,
        "layers": len(traj) - 1,
        "config": config_echo(cfg),
    })
    return EXIT_OK


def _verify_reports(cfg: RunConfig) -> list:
    """Run every configured check on the scenario and collect the reports."""
    v = cfg.verify
    u1_0, u2_0 = cfg.initial_profiles()
    f0 = field_from_initial(cfg.grid, u1_0, u2_0)
    drift_sign = -1.0 if cfg.flip_drift_correction else 1.0
    reports = []
    for check in cfg.checks:
        if check == "weak_residual":
            h = parse_test_function(v.get("weak_h", "gaussian(0,1.5)"))
            traj = fd_solve(u1_0, u2_0, cfg.params, cfg.grid, cfg.solver.T, _fd_config(cfg))
            tol = float(v.get("weak_tolerance", 5e-4))
            for q in (1, 2):
                reports.append(weak_residual(traj, cfg.params, h, q, tolerance=tol))
        elif check == "martingale":
            t = float(v.get("martingale_t", 0.05))
            gcfg = SolverConfig(
                npaths=int(v.get("martingale_npaths", 100000)),
                substeps=int(v.get("martingale_substeps", 20)),
                dt=t, T=t, master_seed=cfg.solver.master_seed,
            )
            centers = [float(s) for s in str(v.get("martingale_centers", "-1,0,1")).split(",")]
            widths = [float(s) for s in str(v.get("martingale_widths", "0.8,1.0,0.9")).split(",")]
            span = float(v.get("martingale_start_span", 0.6))
            count = int(v.get("martingale_start_count", 9))
            for c, w in zip(centers, widths):
                h = make_gaussian_test(c, w)
                starts = c + np.linspace(-span, span, count)
                for q in (1, 2):
                    reports.append(martingale_check(
                        f0, cfg.params, q, h, t, gcfg, starts=starts,
                        drift_sign=drift_sign))
        elif check == "flow_monotonicity":
            t = float(v.get("flow_t", 0.05))
            fcfg = SolverConfig(
                npaths=1, substeps=int(v.get("flow_substeps", 25)),
                dt=t, T=t, master_seed=cfg.solver.master_seed,
            )
            for q in (1, 2):
                reports.append(flow_monotonicity(
                    f0, cfg.params, q, t, fcfg,
                    npaths=int(v.get("flow_npaths", 1000))))
        elif check == "duality_pairing":
            t = float(v.get("duality_t", 0.05))
            dcfg = SolverConfig(
                npaths=int(v.get("duality_npaths", 20000)),
                substeps=int(v.get("duality_substeps", 20)),
                dt=t, T=t, master_seed=cfg.solver.master_seed,
            )
            h = parse_test_function(v.get("duality_h", "gaussian(0,1.2)"))
            stride = int(v.get("duality_stride", 2))
            for q in (1, 2):
                reports.append(duality_pairing(f0, cfg.params, q, h, t, dcfg, stride=stride))
        elif check == "compare_mc_fd":
            res = solve_layered(u1_0, u2_0, cfg.params, cfg.grid, cfg.solver,
                                drift_sign=drift_sign)
            traj_fd = fd_solve(u1_0, u2_0, cfg.params, cfg.grid, cfg.solver.T, _fd_config(cfg))
            reports.append(compare_trajectories(
                res.trajectory, traj_fd,
                tolerance=float(v.get("compare_tolerance", 2e-2))))
    return reports


def parse_test_function(text: str):
    """Build a test function from a gaussian(center,width) string."""
    text = text.strip()
    if not text.startswith("gaussian(") or not text.endswith(")"):
        raise ConfigError(f"test functions must be gaussian(center,width), got {text!r}")
    parts = text[len("gaussian("):-1].split(",")
    if len(parts) != 2:
        raise ConfigError(f"gaussian test function takes 2 arguments, got {text!r}")
    return make_gaussian_test(float(parts[0]), float(parts[1]))


def _run_verify(cfg: RunConfig, outdir: Path) -> int:
    t0 = time.time()
    reports = _verify_reports(cfg)
    payload = {
        "scenario": cfg.scenario,
        "runtime_s": time.time() - t0,
        "flip_drift_correction": cfg.flip_drift_correction,
        "checks": [r.to_json() for r in reports],
        "all_pass": all(r.passed for r in reports),
    }
    _write_json(outdir / "checks.json", payload)
    for r in reports:
        flag = "PASS" if r.passed else "FAIL"
        print(f"{flag} {r.name}: statistic={r.statistic:.6g} tolerance={r.tolerance:.6g}")
    return EXIT_OK if payload["all_pass"] else EXIT_CHECK_FAILED


def _run_compare(cfg: RunConfig, outdir: Path) -> int:
    u1_0, u2_0 = cfg.initial_profiles()
    res = solve_layered(u1_0, u2_0, cfg.params, cfg.grid, cfg.solver)
    traj_fd = fd_solve(u1_0, u2_0, cfg.params, cfg.grid, cfg.solver.T, _fd_config(cfg))
    rep = compare_trajectories(res.trajectory, traj_fd,
                               tolerance=float(cfg.verify.get("compare_tolerance", 2e-2)))
    _write_json(outdir / "compare.json", rep.to_json())
    flag = "PASS" if rep.passed else "FAIL"
    print(f"{flag} {rep.name}: statistic={rep.statistic:.6g} tolerance={rep.tolerance:.6g}")
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sktmc",
                                 description="Monte Carlo solver for the 1-D SKT cross-diffusion system")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve-mc", "solve-fd", "verify", "compare"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="path to the run config file")
        sp.add_argument("--out", default=".", help="output directory (created if missing)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--workers", type=int, default=None, help="override worker count")
        sp.add_argument("--mode", choices=("layered", "picard"), default=None,
                        help="override the closure mode")
        if name == "solve-mc":
            sp.add_argument("--progress", action="store_true",
                            help="write per-layer progress records (ndjson)")
        if name == "verify":
            sp.add_argument("--flip-drift-correction", action="store_true",
                            help="flip the squared-gradient drift correction sign "
                                 "in the martingale suite (mutation check)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, overrides={
            "seed": args.seed,
            "workers": args.workers,
            "mode": args.mode,
            "flip_drift_correction": getattr(args, "flip_drift_correction", False),
        })
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "solve-mc":
            return _run_solve_mc(cfg, outdir, args.progress)
        if args.command == "solve-fd":
            return _run_solve_fd(cfg, outdir)
        if args.command == "verify":
            return _run_verify(cfg, outdir)
        if args.command == "compare":
            return _run_compare(cfg, outdir)
        raise AssertionError(f"unhandled command {args.command}")
    except (CFLViolation, NoConvergence, NonFiniteState, NonPositiveRadicand) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
