"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test prints a one-line PASS/FAIL verdict with the measured statistic.
The expensive Monte Carlo solves are shared through module-scoped fixtures;
all runs are deterministic in the pinned seeds, so reruns reproduce the
numbers exactly.
"""
import json
import math
import time

import numpy as np
import pytest

from sktmc import (
    FDConfig,
    GridSpec,
    SKTParameters,
    SolverConfig,
    cfl_limit,
    compare_trajectories,
    duality_pairing,
    exact_linear,
    fd_solve,
    field_from_initial,
    flow_monotonicity,
    gaussian_profile,
    make_gaussian_test,
    make_initial,
    martingale_check,
    solve_layered,
    weak_residual,
)
from sktmc.cli import main
from sktmc.model import DensityField
from sktmc.sde import FieldTable, NoiseStream, run_matrix_block

GRID = GridSpec(-8.0, 8.0, 161)
SEED = 20260809

LINEAR_PARAMS = SKTParameters(d1=0.5, d2=1.0)
GROWTH_PARAMS = SKTParameters(d1=0.5, d2=1.0, a1=1.0)
CROSS_PARAMS = SKTParameters(d1=0.25, d2=0.25, d11=0.05, d12=0.1, d21=0.1, d22=0.05,
                             a1=0.5, a2=0.5, a11=0.25, a12=0.25, a21=0.25, a22=0.25)
CROSS_INIT = "two-bumps(-1.5,1.5,0.8,3)"

MART_TESTS = ((-2.3, 0.8), (0.0, 1.0), (2.3, 0.9))
MART_T = 0.05
MART_CFG = SolverConfig(npaths=100000, substeps=20, dt=MART_T, T=MART_T,
                         master_seed=31415)


def _verdict(num, ok, message):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {message}")
    assert ok, message


@pytest.fixture(scope="module")
def linear_run():
    prof = gaussian_profile(0.0, 1.0, 1.0)
    cfg = SolverConfig(npaths=100000, substeps=5, dt=0.025, T=0.25,
                       master_seed=SEED, workers=1)
    t0 = time.time()
    res = solve_layered(prof, prof, LINEAR_PARAMS, GRID, cfg)
    return res, time.time() - t0


@pytest.fixture(scope="module")
def growth_run():
    prof = gaussian_profile(0.0, 1.0, 1.0)
    cfg = SolverConfig(npaths=100000, substeps=5, dt=0.025, T=0.25,
                       master_seed=SEED, workers=8)
    return solve_layered(prof, prof, GROWTH_PARAMS, GRID, cfg)


@pytest.fixture(scope="module")
def cross_run():
    prof = make_initial(CROSS_INIT)
    cfg = SolverConfig(npaths=100000, substeps=5, dt=0.025, T=0.2,
                       master_seed=SEED, workers=8)
    res = solve_layered(prof, prof, CROSS_PARAMS, GRID, cfg)
    f0 = field_from_initial(GRID, prof, prof)
    traj_fd = fd_solve(prof, prof, CROSS_PARAMS, GRID, 0.2,
                       FDConfig(dt_fd=0.8 * cfl_limit(f0, CROSS_PARAMS),
                                snapshot_dt=0.025))
    return res, traj_fd


@pytest.fixture(scope="module")
def cross_field():
    prof = make_initial(CROSS_INIT)
    return field_from_initial(GRID, prof, prof)


def test_criterion_1_linear_oracle_equivalence(linear_run):
    res, wall = linear_run
    x = GRID.nodes()
    fT = res.trajectory[-1]
    worst = -math.inf
    for u, se, d in ((fT.u1, res.u1_stderr, 0.5), (fT.u2, res.u2_stderr, 1.0)):
        exact = exact_linear(0.0, 1.0, 1.0, d, 0.0, 0.25, x)
        gap = np.abs(u - exact)
        tol = np.maximum(3.0 * se, 5e-3)
        worst = max(worst, float(np.max(gap - tol)))
    ok = worst <= 0.0 and res.clips == 0
    _verdict(1, ok,
             f"sup-norm within max(3*stderr, 5e-3): margin {-worst:.2e}; "
             f"clips={res.clips}; wall {wall:.0f}s single-worker (target <120s)")


def test_criterion_2_growth_consistency(growth_run):
    res = growth_run
    x = GRID.nodes()
    fT = res.trajectory[-1]
    mass = float(np.trapezoid(fT.u1, dx=GRID.dx))
    mass_ok = abs(mass / math.exp(0.25) - 1.0) <= 0.01
    exact = exact_linear(0.0, 1.0, 1.0, 0.5, 1.0, 0.25, x)
    gap = np.abs(fT.u1 - exact)
    tol = np.maximum(3.0 * res.u1_stderr, 5e-3)
    point_ok = bool(np.all(gap <= tol))
    _verdict(2, mass_ok and point_ok,
             f"mass {mass:.6f} vs e^0.25 (rel err {abs(mass/math.exp(0.25)-1):.2e}, "
             f"tol 1%); pointwise sup gap {float(np.max(gap)):.2e}")


def test_criterion_3_cross_diffusion_oracle(cross_run):
    res, traj_fd = cross_run
    stderr_sup = max(float(np.max(res.u1_stderr)), float(np.max(res.u2_stderr)))
    tol = max(3.0 * stderr_sup, 2e-2)
    rep = compare_trajectories(res.trajectory, traj_fd, tolerance=tol)
    _verdict(3, rep.passed,
             f"sup|u_mc - u_fd| = {rep.statistic:.3e} <= {tol:.1e}")


def test_criterion_4_structural_invariants(cross_field):
    # matrix functional stays lower-triangular bitwise over many steps
    dws = NoiseStream.derive(SEED, 400).increments(0.002, 25, 2000)
    x, m11, m21, m22, _ = run_matrix_block(
        [FieldTable(cross_field)], CROSS_PARAMS, 1, np.zeros(2000), 0.002, dws)
    from sktmc import simulate_path
    res = simulate_path("reversed", "matrix", 0.3, cross_field, CROSS_PARAMS,
                        1, 0.05, 25, NoiseStream.derive(SEED, 401))
    triangular = res.state.wmat[0, 1] == 0.0
    start_vals = (res.state.jac == 1.0 or res.state.jac > 0.0)

    # fresh states start at weight 1, jacobian 1, identity matrix
    from sktmc import PathState
    s0 = PathState(x=0.0)
    init_ok = (s0.weight == 1.0 and s0.jac == 1.0
               and np.array_equal(s0.wmat, np.eye(2)))

    # flow scenario: jacobian positive on all paths, zero order violations
    g = GridSpec(-4.0, 4.0, 81)
    xs = g.nodes()
    amp = 1.0 + 0.1 * xs
    big_d = 0.5 * amp * amp
    flow_field = DensityField(grid=g, t=0.0, u1=big_d - 0.1, u2=np.zeros_like(xs),
                              v1=0.1 * amp, v2=np.zeros_like(xs))
    flow_params = SKTParameters(d1=0.1, d2=0.1, d11=1.0, d21=1.0)
    fcfg = SolverConfig(npaths=1, substeps=25, dt=0.05, T=0.05, master_seed=SEED)
    rep = flow_monotonicity(flow_field, flow_params, 1, 0.05, fcfg,
                            starts=np.linspace(-2, 2, 50), npaths=1000)
    ok = triangular and start_vals and init_ok and rep.statistic == 0.0
    _verdict(4, ok,
             f"lower-triangular exact, unit initial state, jac>0 "
             f"(min {rep.details['min_jac']:.3f}), order violations "
             f"{rep.details['order_violations']}")


def test_criterion_5_martingale_suite(cross_field):
    all_pass = True
    worst = 0.0
    for c, w in MART_TESTS:
        h = make_gaussian_test(c, w)
        starts = c + np.linspace(-0.6, 0.6, 9)
        for q in (1, 2):
            rep = martingale_check(cross_field, CROSS_PARAMS, q, h, MART_T,
                                   MART_CFG, starts=starts)
            all_pass = all_pass and rep.passed
            worst = max(worst, abs(rep.statistic) / rep.tolerance)
    _verdict(5, all_pass,
             f"3 test functions x 2 species all within 3 pooled stderr "
             f"(worst |stat|/tol = {worst:.2f})")


def test_criterion_6_duality_pairing(cross_field):
    h = make_gaussian_test(0.0, 1.2)
    dcfg = SolverConfig(npaths=20000, substeps=20, dt=0.05, T=0.05, master_seed=777)
    prof = gaussian_profile(0.0, 1.0, 1.0)
    const_field = field_from_initial(GRID, prof, prof)
    all_pass = True
    details = []
    for name, field, params in (("constant-coefficient", const_field, LINEAR_PARAMS),
                                ("cross-diffusion", cross_field, CROSS_PARAMS)):
        for q in (1, 2):
            rep = duality_pairing(field, params, q, h, 0.05, dcfg, stride=2)
            all_pass = all_pass and rep.passed
            details.append(f"{name} q={q}: {abs(rep.statistic):.2e}<={rep.tolerance:.2e}")
    _verdict(6, all_pass, "; ".join(details))


def test_criterion_7_weak_residual_refinement():
    h = make_gaussian_test(0.0, 1.5)
    ratios = []
    for params, init, T in ((LINEAR_PARAMS, "gaussian(0,1,1)", 0.25),
                            (CROSS_PARAMS, CROSS_INIT, 0.2)):
        prof = make_initial(init)
        stats = []
        for n, snap in ((161, 0.025), (321, 0.00625)):
            g = GridSpec(-8.0, 8.0, n)
            f0 = field_from_initial(g, prof, prof)
            dt_fd = 0.8 * cfl_limit(f0, params)  # halving dx quarters this step
            traj = fd_solve(prof, prof, params, g, T,
                            FDConfig(dt_fd=dt_fd, snapshot_dt=snap))
            stats.append(max(abs(weak_residual(traj, params, h, q).statistic)
                             for q in (1, 2)))
        ratios.append(stats[0] / stats[1])
    ok = all(r >= 3.0 for r in ratios)
    _verdict(7, ok,
             f"residual shrink factors under (dx,dt_fd)->(dx/2,dt_fd/4): "
             f"linear {ratios[0]:.2f}, cross-diffusion {ratios[1]:.2f} (need >=3)")


def test_criterion_8_gradient_representation(cross_run):
    res, _ = cross_run
    fT = res.trajectory[-1]
    dx = GRID.dx
    worst = -math.inf
    for u, v, se_u, se_v in ((fT.u1, fT.v1, res.u1_stderr, res.v1_stderr),
                             (fT.u2, fT.v2, res.u2_stderr, res.v2_stderr)):
        diffd = np.gradient(u, dx)
        gap = np.abs(v - diffd)[2:-2]
        comb = np.sqrt(se_v ** 2
                       + (np.roll(se_u, -1) ** 2 + np.roll(se_u, 1) ** 2)
                       / (2 * dx) ** 2)[2:-2]
        tol = np.maximum(3.0 * comb, 5e-2)
        worst = max(worst, float(np.max(gap - tol)))
    _verdict(8, worst <= 0.0,
             f"matrix-functional gradient vs differenced value field at interior "
             f"nodes: margin {-worst:.2e} (floor 5e-2)")


def test_criterion_9_parallel_determinism(tmp_path):
    cfg = tmp_path / "det.cfg"
    cfg.write_text(f"""
[run]
scenario = cross-diffusion

[grid]
n = 41
xmin = -6
xmax = 6

[solver]
npaths = 2000
substeps = 3
dt = 0.025
T = 0.05
seed = {SEED}
""")
    out1, out8 = tmp_path / "w1", tmp_path / "w8"
    rc1 = main(["solve-mc", "--config", str(cfg), "--out", str(out1), "--workers", "1"])
    rc8 = main(["solve-mc", "--config", str(cfg), "--out", str(out8), "--workers", "8"])
    same = ((out1 / "trajectory.csv").read_bytes()
            == (out8 / "trajectory.csv").read_bytes())
    _verdict(9, rc1 == 0 and rc8 == 0 and same,
             "solve-mc trajectory.csv byte-identical for --workers 1 and --workers 8")


def test_criterion_10_mutation_sensitivity(cross_field, tmp_path):
    # direct check: the flipped drift correction breaks every martingale check
    flipped_fail = 0
    total = 0
    for c, w in MART_TESTS:
        h = make_gaussian_test(c, w)
        starts = c + np.linspace(-0.6, 0.6, 9)
        for q in (1, 2):
            rep = martingale_check(cross_field, CROSS_PARAMS, q, h, MART_T,
                                   MART_CFG, starts=starts, drift_sign=-1.0)
            total += 1
            flipped_fail += int(not rep.passed)

    # and through the CLI debug flag: the suite exits 3
    cfg = tmp_path / "flip.cfg"
    cfg.write_text(f"""
[run]
scenario = cross-diffusion

[solver]
seed = 31415

[verify]
checks = martingale
""")
    out = tmp_path / "flip_out"
    rc = main(["verify", "--config", str(cfg), "--out", str(out),
               "--flip-drift-correction"])
    report = json.loads((out / "checks.json").read_text())
    ok = flipped_fail >= 1 and rc == 3 and not report["all_pass"]
    _verdict(10, ok,
             f"flipped drift correction fails {flipped_fail}/{total} martingale "
             f"checks; cli verify --flip-drift-correction exits {rc}")
