"""Deterministic finite-difference oracle for the cross-diffusion system.

Explicit scheme, independent of the Monte Carlo code path: the value update
applies the plain second difference to the flux w = u (d_q + d_q1 u1 + d_q2 u2)
with homogeneous Neumann boundaries via ghost-node reflection, plus the
reaction term.  Also provides the exact solution of the decoupled linear case
(heat kernel with exponential growth) and a joint (u, v) evolution used as a
gradient-consistency diagnostic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import DensityField, GridSpec, SKTParameters, field_from_initial, gaussian_profile
from .mc import FieldTrajectory


class CFLViolation(RuntimeError):
    """Time step exceeds the explicit stability bound."""

    def __init__(self, dt_fd: float, admissible: float):
        super().__init__(
            f"dt_fd={dt_fd:g} violates the CFL bound; admissible step is {admissible:g}"
        )
        self.dt_fd = dt_fd
        self.admissible = admissible


@dataclass(frozen=True)
class FDConfig:
    """Explicit solver settings: time step and snapshot cadence."""

    dt_fd: float
    snapshot_dt: float

    def __post_init__(self) -> None:
        if not self.dt_fd > 0.0:
            raise ValueError(f"dt_fd must be > 0, got {self.dt_fd}")
        if not self.snapshot_dt > 0.0:
            raise ValueError(f"snapshot_dt must be > 0, got {self.snapshot_dt}")


def cfl_limit(field: DensityField, params: SKTParameters) -> float:
    """Largest stable explicit step dx^2 / (2 max diffusivity) for this field."""
    dx = field.grid.dx
    dmax = 0.0
    for q in (1, 2):
        dq, dq1, dq2 = params.diffusion(q)
        dmax = max(dmax, float(np.max(dq + (dq1 * field.u1 + dq2 * field.u2))))
    return dx * dx / (2.0 * dmax)


def _second_difference_neumann(w: np.ndarray, dx: float) -> np.ndarray:
    """(w[i-1] - 2 w[i] + w[i+1]) / dx^2 with even ghost reflection."""
    out = np.empty_like(w)
    out[1:-1] = (w[:-2] - 2.0 * w[1:-1] + w[2:]) / (dx * dx)
    out[0] = (w[1] - 2.0 * w[0] + w[1]) / (dx * dx)
    out[-1] = (w[-2] - 2.0 * w[-1] + w[-2]) / (dx * dx)
    return out


def fd_step(field: DensityField, params: SKTParameters, dt_fd: float) -> DensityField:
    """One explicit step of both species; raises CFLViolation if unstable."""
    admissible = cfl_limit(field, params)
    if dt_fd > admissible * (1.0 + 1e-12):
        raise CFLViolation(dt_fd, admissible)
    dx = field.grid.dx
    new_u = []
    for q in (1, 2):
        dq, dq1, dq2 = params.diffusion(q)
        aq, aq1, aq2 = params.reaction(q)
        u = field.u1 if q == 1 else field.u2
        w = u * (dq + (dq1 * field.u1 + dq2 * field.u2))
        c = aq - (aq1 * field.u1 + aq2 * field.u2)
        new_u.append(u + dt_fd * (_second_difference_neumann(w, dx) + c * u))
    u1, u2 = new_u
    return DensityField(
        grid=field.grid, t=field.t + dt_fd,
        u1=u1, u2=u2,
        v1=np.gradient(u1, dx), v2=np.gradient(u2, dx),
    )


def fd_solve(
    u1_0: Callable,
    u2_0: Callable,
    params: SKTParameters,
    grid: GridSpec,
    T: float,
    cfg: FDConfig,
) -> FieldTrajectory:
    """Iterate fd_step from t=0 to T, snapshotting every cfg.snapshot_dt.

    The step is shrunk to divide the snapshot interval exactly, so snapshot
    times land on the Monte Carlo layer times without drift.
    """
    nlayers = round(T / cfg.snapshot_dt)
    if abs(T / cfg.snapshot_dt - nlayers) > 1e-9:
        raise ValueError(f"T/snapshot_dt must be integral, got {T / cfg.snapshot_dt}")
    nsub = max(1, math.ceil(cfg.snapshot_dt / cfg.dt_fd - 1e-12))
    dt_eff = cfg.snapshot_dt / nsub

    field = field_from_initial(grid, u1_0, u2_0)
    # reject an over-limit request up front instead of quietly snapping the
    # step to the snapshot cadence (the per-step check still guards evolution)
    admissible = cfl_limit(field, params)
    if cfg.dt_fd > admissible * (1.0 + 1e-12):
        raise CFLViolation(cfg.dt_fd, admissible)
    fields = [field]
    for k in range(int(nlayers)):
        for _ in range(nsub):
            field = fd_step(field, params, dt_eff)
        # pin the time label to the exact layer time
        field = DensityField(grid=grid, t=(k + 1) * cfg.snapshot_dt,
                             u1=field.u1, u2=field.u2, v1=field.v1, v2=field.v2)
        fields.append(field)
    return FieldTrajectory(tuple(fields))


def exact_linear(
    center: float,
    width: float,
    mass: float,
    d: float,
    alpha: float,
    t: float,
    x,
):
    """Exact solution of u_t = d u_xx + alpha u for Gaussian initial data.

    exp(alpha t) times the initial Gaussian convolved with the heat kernel:
    a normal density of variance width^2 + 2 d t carrying the initial mass.
    """
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    var = width * width + 2.0 * d * t
    profile = gaussian_profile(center, math.sqrt(var), mass)
    return math.exp(alpha * t) * profile(x)


def _odd_reflect_second_difference(g: np.ndarray, dx: float) -> np.ndarray:
    """Second difference with odd ghost reflection (g anti-symmetric)."""
    out = np.empty_like(g)
    out[1:-1] = (g[:-2] - 2.0 * g[1:-1] + g[2:]) / (dx * dx)
    out[0] = (-g[1] - 2.0 * g[0] + g[1]) / (dx * dx)
    out[-1] = (g[-2] - 2.0 * g[-1] - g[-2]) / (dx * dx)
    return out


def fd_gradient_step(field: DensityField, params: SKTParameters, dt_fd: float) -> DensityField:
    """Joint explicit step of (u, v) with v evolved by its own flux equation.

    Diagnostic twin of fd_step: the gradient components follow
    v_t = (v D + u cross)'' + u c' + c v with cross = d_q1 v1 + d_q2 v2 and
    c' = -a_q1 v1 - a_q2 v2.  The gradient flux reflects oddly at the
    boundaries (Neumann on u makes its derivative anti-symmetric there).
    """
    admissible = cfl_limit(field, params)
    if dt_fd > admissible * (1.0 + 1e-12):
        raise CFLViolation(dt_fd, admissible)
    dx = field.grid.dx
    new = {}
    for q in (1, 2):
        dq, dq1, dq2 = params.diffusion(q)
        aq, aq1, aq2 = params.reaction(q)
        u = field.u1 if q == 1 else field.u2
        v = field.v1 if q == 1 else field.v2
        big_d = dq + (dq1 * field.u1 + dq2 * field.u2)
        cross = dq1 * field.v1 + dq2 * field.v2
        c = aq - (aq1 * field.u1 + aq2 * field.u2)
        cgrad = -(aq1 * field.v1 + aq2 * field.v2)
        new[f"u{q}"] = u + dt_fd * (_second_difference_neumann(u * big_d, dx) + c * u)
        new[f"v{q}"] = v + dt_fd * (
            _odd_reflect_second_difference(v * big_d + u * cross, dx) + u * cgrad + c * v
        )
    return DensityField(grid=field.grid, t=field.t + dt_fd, **new)
