"""Executable checks of the identities the solver relies on.

Each check returns a CheckReport whose pass flag is recomputable from
(statistic, tolerance):

* weak_residual        integrated weak-form defect of a trajectory
* martingale_check     drift of the stochastic test functional weight*h(x)*jac
* flow_monotonicity    order preservation of the forward flow in 1-D
* duality_pairing      reversed-path pairing against forward-path pairing
* compare_trajectories sup-norm distance between two trajectories
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .mc import FieldTrajectory, SolverConfig
from .model import DensityField, SKTParameters, TestFunction
from .sde import FieldTable, NoiseStream, run_flow_block, run_test_block, run_weight_block, _sample_table

_trapz = getattr(np, "trapezoid", None) or np.trapz

# Key namespaces keeping check noise distinct from solver noise.
_KEY_MART = 901
_KEY_FLOW = 902
_KEY_DUAL = 903


class GridMismatch(ValueError):
    """Two trajectories do not share grid and snapshot times."""


@dataclass(frozen=True)
class CheckReport:
    name: str
    statistic: float
    tolerance: float
    passed: bool
    details: dict = dc_field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "details": self.details,
        }


def _report(name: str, statistic: float, tolerance: float, details: dict) -> CheckReport:
    return CheckReport(
        name=name,
        statistic=float(statistic),
        tolerance=float(tolerance),
        passed=bool(abs(statistic) <= tolerance),
        details=details,
    )


def weak_residual(
    traj: FieldTrajectory,
    params: SKTParameters,
    h: TestFunction,
    q: int,
    tolerance: float = 1e-3,
) -> CheckReport:
    """Weak-form defect of a trajectory against a time-independent h.

    statistic = <u(T), h> - <u(0), h> - int_0^T <u(s), D_u lap_h + c_u h> ds
    with D_u = d_q + d_q1 u1 + d_q2 u2 (half the squared diffusion amplitude)
    and all inner products by trapezoid quadrature on the grid; the time
    integral uses trapezoid weights over the snapshots so that its own error
    stays below the scheme error it is meant to expose.
    """
    grid = traj[0].grid
    x = grid.nodes()
    hx = h.h(x)
    lap = h.lap(x)
    dq, dq1, dq2 = params.diffusion(q)
    aq, aq1, aq2 = params.reaction(q)

    integrand = np.empty(len(traj))
    for k, f in enumerate(traj.fields):
        u = f.u1 if q == 1 else f.u2
        big_d = dq + dq1 * f.u1 + dq2 * f.u2
        c = aq - aq1 * f.u1 - aq2 * f.u2
        integrand[k] = _trapz(u * (big_d * lap + c * hx), dx=grid.dx)

    u_first = traj[0].u1 if q == 1 else traj[0].u2
    u_last = traj[-1].u1 if q == 1 else traj[-1].u2
    pairing_first = _trapz(u_first * hx, dx=grid.dx)
    pairing_last = _trapz(u_last * hx, dx=grid.dx)
    time_integral = _trapz(integrand, dx=traj.dt) if len(traj) > 1 else 0.0
    statistic = pairing_last - pairing_first - time_integral
    return _report(
        f"weak_residual[q={q}]", statistic, tolerance,
        {"pairing_initial": pairing_first, "pairing_final": pairing_last,
         "time_integral": float(time_integral), "snapshots": len(traj)},
    )


def _default_starts(h: TestFunction) -> np.ndarray:
    width = h.support_radius / 8.0
    return h.center + width * np.array([-1.6, -0.8, 0.0, 0.8, 1.6])


def martingale_check(
    field: DensityField,
    params: SKTParameters,
    q: int,
    h: TestFunction,
    t: float,
    cfg: SolverConfig,
    starts: Sequence[float] | None = None,
    drift_sign: float = 1.0,
) -> CheckReport:
    """Zero-drift test of the stochastic test functional on a frozen field.

    For each start y, forward paths build the functional weight * h(x) * jac
    and the running left-endpoint integral of (amp^2/2 lap_h + react h) times
    weight and jac; the per-path defect value(t) - h(y) - integral has mean
    zero exactly when the corrected drift carries the plus sign.  Samples are
    pooled over all starts; tolerance is three pooled standard errors.
    """
    if starts is None:
        starts = _default_starts(h)
    tab = FieldTable(field)
    dtheta = t / cfg.substeps
    defects = []
    per_start = {}
    clamps = 0
    for j, y in enumerate(starts):
        stream = NoiseStream.derive(cfg.master_seed, _KEY_MART, q, j)
        dws = stream.increments(dtheta, cfg.substeps, cfg.npaths)
        x, weight, jac, integral, ncl = run_test_block(
            tab, params, q, float(y), h, dtheta, dws, drift_sign)
        clamps += ncl
        value = weight * h.h(x) * jac
        d = value - float(h.h(float(y))) - integral
        defects.append(d)
        per_start[f"y={float(y):g}"] = float(np.mean(d))
    pooled = np.concatenate(defects)
    statistic = float(np.mean(pooled))
    stderr = float(np.std(pooled, ddof=1) / math.sqrt(pooled.size))
    return _report(
        f"martingale[q={q}]", statistic, 3.0 * stderr,
        {"stderr": stderr, "npaths": cfg.npaths, "substeps": cfg.substeps,
         "starts": [float(y) for y in starts], "per_start_mean": per_start,
         "clamps": clamps},
    )


def flow_monotonicity(
    field: DensityField,
    params: SKTParameters,
    q: int,
    t: float,
    cfg: SolverConfig,
    starts: Sequence[float] | None = None,
    npaths: int = 1000,
) -> CheckReport:
    """Order preservation of the forward flow under one shared noise stream.

    statistic counts ordering violations among adjacent starts at the final
    time plus any nonpositive Jacobian determinant; it must be exactly zero.
    """
    grid = field.grid
    if starts is None:
        half = 0.25 * (grid.xmax - grid.xmin)
        mid = 0.5 * (grid.xmin + grid.xmax)
        starts = np.linspace(mid - half, mid + half, 50)
    starts = np.asarray(starts, dtype=np.float64)
    tab = FieldTable(field)
    dtheta = t / cfg.substeps
    stream = NoiseStream.derive(cfg.master_seed, _KEY_FLOW, q)
    dws = stream.increments(dtheta, cfg.substeps, npaths)
    x, jac, clamps = run_flow_block(tab, params, q, starts, dtheta, dws)
    violations = 0
    if starts.size > 1:
        violations = int(np.count_nonzero(np.diff(x, axis=1) <= 0.0))
    jac_bad = int(np.count_nonzero(jac <= 0.0))
    statistic = float(violations + jac_bad)
    return _report(
        f"flow_monotonicity[q={q}]", statistic, 0.0,
        {"order_violations": violations, "jac_nonpositive": jac_bad,
         "min_jac": float(np.min(jac)), "npaths": npaths,
         "nstarts": int(starts.size), "clamps": clamps},
    )


def _trapz_weights(n: int, dx: float) -> np.ndarray:
    w = np.full(n, dx)
    w[0] = w[-1] = 0.5 * dx
    return w


def _second_diff_bound(values: np.ndarray, dx: float) -> float:
    if values.size < 3:
        return 0.0
    second = np.abs(np.diff(values, 2)) / (dx * dx)
    return float(np.max(second))


def duality_pairing(
    field: DensityField,
    params: SKTParameters,
    q: int,
    h: TestFunction,
    t: float,
    cfg: SolverConfig,
    stride: int = 1,
) -> CheckReport:
    """Reversed-path pairing against forward-path pairing on a frozen field.

    A = integral over x of E[weight_rev * u0(x_rev(t))] h(x)
    B = integral over y of u0(y) E[weight_fwd * h(x_fwd(t)) * jac]

    Both quadratures run on the (optionally strided) grid; the tolerance is
    three combined standard errors plus a trapezoid remainder bound estimated
    from second differences of the integrands.
    """
    grid = field.grid
    nodes = grid.nodes()[::stride]
    dxq = grid.dx * stride
    u0 = (field.u1 if q == 1 else field.u2)[::stride]
    tab = FieldTable(field)
    dtheta = t / cfg.substeps
    weights = _trapz_weights(nodes.size, dxq)

    a_mean = np.empty(nodes.size)
    a_var = np.empty(nodes.size)
    b_mean = np.empty(nodes.size)
    b_var = np.empty(nodes.size)
    clamps = 0
    for i, y in enumerate(nodes):
        stream = NoiseStream.derive(cfg.master_seed, _KEY_DUAL, q, 0, i)
        dws = stream.increments(dtheta, cfg.substeps, cfg.npaths)
        x, weight, ncl = run_weight_block(
            [tab], params, q, np.full(cfg.npaths, float(y)), dtheta, dws, mode="reversed")
        u1e, u2e, _, _, ncl2 = _sample_table(tab, x)
        clamps += ncl + ncl2
        samples = weight * (u1e if q == 1 else u2e)
        a_mean[i] = np.mean(samples)
        a_var[i] = np.var(samples, ddof=1) / cfg.npaths

        stream = NoiseStream.derive(cfg.master_seed, _KEY_DUAL, q, 1, i)
        dws = stream.increments(dtheta, cfg.substeps, cfg.npaths)
        x, weight, jac, _, ncl = run_test_block(
            tab, params, q, float(y), h, dtheta, dws)
        clamps += ncl
        samples = weight * h.h(x) * jac
        b_mean[i] = np.mean(samples)
        b_var[i] = np.var(samples, ddof=1) / cfg.npaths

    side_a = float(np.sum(weights * a_mean * h.h(nodes)))
    side_b = float(np.sum(weights * u0 * b_mean))
    var_a = float(np.sum((weights * h.h(nodes)) ** 2 * a_var))
    var_b = float(np.sum((weights * u0) ** 2 * b_var))
    stderr = math.sqrt(var_a + var_b)
    span = nodes[-1] - nodes[0]
    quad_bound = (dxq * dxq / 12.0) * span * max(
        _second_diff_bound(a_mean * h.h(nodes), dxq),
        _second_diff_bound(u0 * b_mean, dxq),
    )
    statistic = side_a - side_b
    return _report(
        f"duality[q={q}]", statistic, 3.0 * stderr + quad_bound,
        {"side_reversed": side_a, "side_forward": side_b, "stderr": stderr,
         "quad_bound": quad_bound, "npaths": cfg.npaths, "stride": stride,
         "clamps": clamps},
    )


def compare_trajectories(
    traj_mc: FieldTrajectory,
    traj_fd: FieldTrajectory,
    tolerance: float,
) -> CheckReport:
    """Sup-norm distance of the value fields over nodes, times and species."""
    ga, gb = traj_mc[0].grid, traj_fd[0].grid
    if (ga.xmin, ga.xmax, ga.n) != (gb.xmin, gb.xmax, gb.n):
        raise GridMismatch(f"grids differ: {ga} vs {gb}")
    if len(traj_mc) != len(traj_fd) or not np.allclose(
            traj_mc.times, traj_fd.times, rtol=0.0, atol=1e-9):
        raise GridMismatch("snapshot times differ")
    statistic = 0.0
    worst = {"t": 0.0, "q": 1}
    for fa, fb in zip(traj_mc.fields, traj_fd.fields):
        for q, (ua, ub) in enumerate(((fa.u1, fb.u1), (fa.u2, fb.u2)), start=1):
            gap = float(np.max(np.abs(ua - ub)))
            if gap > statistic:
                statistic = gap
                worst = {"t": fa.t, "q": q}
    return _report("compare_mc_fd", statistic, tolerance,
                   {"worst_time": worst["t"], "worst_species": worst["q"],
                    "snapshots": len(traj_mc)})
