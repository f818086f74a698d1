"""Monte Carlo solver for the cross-diffusion system.

Estimates (u, grad u) for both species through reversed diffusion paths
carrying the 2x2 matrix functional, propagates whole time layers with
coefficients frozen at the previous layer, and closes the coefficient
feedback either layer by layer (explicit freezing) or globally by Picard
iteration over the trajectory.

Reproducibility: the noise for grid node i in layer k is derived from
(master_seed, k, i) and is shared by both species, so results are a pure
function of the inputs and the master seed, independent of the worker count,
and swapping the two species' parameters and initial data swaps the outputs
exactly.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import DensityField, EstimatorResult, GridSpec, SKTParameters
from .sde import FieldTable, NoiseStream


class NoConvergence(RuntimeError):
    """Picard iteration hit picard_max with residual above tolerance."""


@dataclass(frozen=True)
class SolverConfig:
    """Monte Carlo solver settings.

    npaths      paths per (grid node, species)
    substeps    Euler steps within each time layer
    dt          layer size
    T           final time
    picard_tol  sup-norm tolerance on successive trajectory iterates
    picard_max  maximum number of Picard passes
    master_seed seed from which all path noise is derived
    workers     concurrent node workers (must not change results)
    """

    npaths: int
    substeps: int
    dt: float
    T: float
    picard_tol: float = 1e-3
    picard_max: int = 12
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.npaths < 1:
            raise ValueError(f"npaths must be >= 1, got {self.npaths}")
        if self.substeps < 1:
            raise ValueError(f"substeps must be >= 1, got {self.substeps}")
        if not (0.0 < self.dt <= self.T):
            raise ValueError(f"need 0 < dt <= T, got dt={self.dt}, T={self.T}")
        if not self.picard_tol > 0.0:
            raise ValueError(f"picard_tol must be > 0, got {self.picard_tol}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    @property
    def layers(self) -> int:
        k = self.T / self.dt
        r = round(k)
        if abs(k - r) > 1e-9:
            raise ValueError(f"T/dt must be integral, got {k}")
        return int(r)


@dataclass(frozen=True)
class FieldTrajectory:
    """Fields at the uniformly spaced times 0, dt, 2 dt, ..., T."""

    fields: tuple[DensityField, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "fields", tuple(self.fields))
        if len(self.fields) < 1:
            raise ValueError("trajectory needs at least one field")
        times = [f.t for f in self.fields]
        if len(times) > 1:
            steps = np.diff(times)
            if np.min(steps) <= 0.0:
                raise ValueError("trajectory times must be strictly increasing")
            if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, times[-1]):
                raise ValueError("trajectory times must be uniformly spaced")

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.fields])

    @property
    def dt(self) -> float:
        return self.fields[1].t - self.fields[0].t if len(self.fields) > 1 else 0.0

    def __len__(self) -> int:
        return len(self.fields)

    def __getitem__(self, k: int) -> DensityField:
        return self.fields[k]


@dataclass(frozen=True)
class LayerResult:
    field: DensityField
    clips: int
    clamps: int
    events: int
    u1_stderr: np.ndarray
    u2_stderr: np.ndarray
    v1_stderr: np.ndarray
    v2_stderr: np.ndarray


@dataclass(frozen=True)
class SolveResult:
    trajectory: FieldTrajectory
    clips: int
    clamps: int
    events: int
    u1_stderr: np.ndarray  # pointwise standard errors of the final layer
    u2_stderr: np.ndarray
    v1_stderr: np.ndarray
    v2_stderr: np.ndarray

    @property
    def clamp_fraction(self) -> float:
        return self.clamps / self.events if self.events else 0.0


@dataclass(frozen=True)
class PicardResult:
    trajectory: FieldTrajectory
    iterations: int
    residuals: tuple[float, ...]
    converged: bool
    clips: int
    clamps: int
    events: int

    @property
    def clamp_fraction(self) -> float:
        return self.clamps / self.events if self.events else 0.0


def _point_block(
    params: SKTParameters,
    q: int,
    tables: Sequence[FieldTable],
    endpoint_tab: FieldTable,
    x0: np.ndarray,
    dtheta: float,
    dws: np.ndarray,
    substeps_per_table: int,
    drift_sign: float,
):
    """Reversed matrix paths plus the endpoint read-off for one species.

    Returns per-path samples of the value and gradient components and the
    clamp count over all interpolation events of the block.
    """
    from ._kernels import estimator_kernel
    from .coeffs import NonPositiveRadicand
    from .sde import NonFiniteState, _stacked_tables, _step_layers

    tab = tables[0]
    dq, dq1, dq2 = params.diffusion(q)
    aq, aq1, aq2 = params.reaction(q)
    u1s, u2s, v1s, v2s = _stacked_tables(tables)
    uq_end = endpoint_tab.u1 if q == 1 else endpoint_tab.u2
    vq_end = endpoint_tab.v1 if q == 1 else endpoint_tab.v2
    su, sv, clamps, status = estimator_kernel(
        np.asarray(x0, dtype=np.float64), u1s, u2s, v1s, v2s,
        tab.xmin, tab.dx, tab.n,
        _step_layers(dws.shape[-1], substeps_per_table, len(tables)),
        uq_end, vq_end,
        dq, dq1, dq2, aq, aq1, aq2,
        float(dtheta), np.asarray(dws, dtype=np.float64), float(drift_sign),
    )
    if status == 1:
        raise NonPositiveRadicand(
            f"diffusion radicand for species {q} became nonpositive in the estimator")
    if not (np.all(np.isfinite(su)) and np.all(np.isfinite(sv))):
        raise NonFiniteState(f"estimator block for species {q} left the finite range")
    return su, sv, int(clamps)


def _mean_stderr(samples: np.ndarray) -> tuple[float, float]:
    n = samples.size
    mean = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, stderr


def estimate_point(
    params: SKTParameters,
    q: int,
    x: float,
    field: DensityField,
    dt: float,
    cfg: SolverConfig,
    noise_key: tuple[int, ...] = (),
    drift_sign: float = 1.0,
) -> tuple[EstimatorResult, EstimatorResult]:
    """One-layer Monte Carlo estimate of (u_q, grad u_q) at position x.

    Simulates cfg.npaths reversed paths over [0, dt] with coefficients frozen
    at `field`, each carrying the matrix functional, and averages the two
    components of (matrix . (u, v)) read off at the path endpoints.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    stream = NoiseStream.derive(cfg.master_seed, *noise_key)
    dtheta = dt / cfg.substeps
    dws = stream.increments(dtheta, cfg.substeps, cfg.npaths)
    tab = FieldTable(field)
    su, sv, clamps = _point_block(
        params, q, [tab], tab, np.full(cfg.npaths, float(x)), dtheta, dws,
        cfg.substeps, drift_sign,
    )
    u_mean, u_stderr = _mean_stderr(su)
    v_mean, v_stderr = _mean_stderr(sv)
    u_est = EstimatorResult(mean=u_mean, stderr=u_stderr, paths=cfg.npaths, clamps=clamps)
    v_est = EstimatorResult(mean=v_mean, stderr=v_stderr, paths=cfg.npaths, clamps=clamps)
    return u_est, v_est


def _map_nodes(fn: Callable, n: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(n)))


def _assemble_layer(
    field: DensityField,
    params: SKTParameters,
    cfg: SolverConfig,
    t_new: float,
    node_worker: Callable,
) -> LayerResult:
    """Run node_worker on every grid node and build the next field."""
    n = field.grid.n
    rows = _map_nodes(node_worker, n, cfg.workers)
    u1 = np.empty(n)
    u2 = np.empty(n)
    v1 = np.empty(n)
    v2 = np.empty(n)
    se = {name: np.empty(n) for name in ("u1", "u2", "v1", "v2")}
    clips = clamps = events = 0
    for i, row in enumerate(rows):
        (u1[i], se["u1"][i], v1[i], se["v1"][i],
         u2[i], se["u2"][i], v2[i], se["v2"][i], ncl, nev) = row
        clamps += ncl
        events += nev
    for arr in (u1, u2):
        neg = arr < 0.0
        clips += int(np.count_nonzero(neg))
        arr[neg] = 0.0
    new_field = DensityField(grid=field.grid, t=t_new, u1=u1, u2=u2, v1=v1, v2=v2)
    return LayerResult(
        field=new_field, clips=clips, clamps=clamps, events=events,
        u1_stderr=se["u1"], u2_stderr=se["u2"], v1_stderr=se["v1"], v2_stderr=se["v2"],
    )


def propagate_layer(
    field: DensityField,
    params: SKTParameters,
    cfg: SolverConfig,
    layer_index: int = 0,
    drift_sign: float = 1.0,
) -> LayerResult:
    """Advance the field by one layer of length cfg.dt.

    Every node and both species are estimated with coefficients frozen at
    `field`; both species consume the same per-node increment block.
    Negative value estimates are clipped to zero and counted.
    """
    tab = FieldTable(field)
    nodes = field.grid.nodes()
    dtheta = cfg.dt / cfg.substeps

    def node_worker(i: int):
        stream = NoiseStream.derive(cfg.master_seed, layer_index, i)
        dws = stream.increments(dtheta, cfg.substeps, cfg.npaths)
        x0 = np.full(cfg.npaths, float(nodes[i]))
        out = []
        clamps = 0
        for q in (1, 2):
            su, sv, ncl = _point_block(
                params, q, [tab], tab, x0, dtheta, dws, cfg.substeps, drift_sign)
            clamps += ncl
            um, us = _mean_stderr(su)
            vm, vs = _mean_stderr(sv)
            out.extend([um, us, vm, vs])
        events = 2 * cfg.npaths * (cfg.substeps + 1)
        return (*out, clamps, events)

    return _assemble_layer(field, params, cfg, field.t + cfg.dt, node_worker)


def solve_layered(
    u1_0: Callable,
    u2_0: Callable,
    params: SKTParameters,
    grid: GridSpec,
    cfg: SolverConfig,
    progress: Callable | None = None,
    drift_sign: float = 1.0,
) -> SolveResult:
    """Propagate the initial data layer by layer from t=0 to t=T.

    Returns the trajectory of layers+1 fields together with the clip/clamp
    counters and the final layer's pointwise standard errors.  Deterministic
    given cfg.master_seed.
    """
    from .model import field_from_initial

    nlayers = cfg.layers
    field = field_from_initial(grid, u1_0, u2_0)
    fields = [field]
    clips = clamps = events = 0
    last: LayerResult | None = None
    for k in range(nlayers):
        last = propagate_layer(field, params, cfg, layer_index=k, drift_sign=drift_sign)
        field = last.field
        fields.append(field)
        clips += last.clips
        clamps += last.clamps
        events += last.events
        if progress is not None:
            progress({
                "layer": k + 1,
                "t": field.t,
                "u1_min": float(np.min(field.u1)), "u1_max": float(np.max(field.u1)),
                "u2_min": float(np.min(field.u2)), "u2_max": float(np.max(field.u2)),
                "clips": last.clips, "clamps": last.clamps, "events": last.events,
            })
    n = grid.n
    zeros = np.zeros(n)
    return SolveResult(
        trajectory=FieldTrajectory(tuple(fields)),
        clips=clips, clamps=clamps, events=events,
        u1_stderr=last.u1_stderr if last else zeros,
        u2_stderr=last.u2_stderr if last else zeros,
        v1_stderr=last.v1_stderr if last else zeros,
        v2_stderr=last.v2_stderr if last else zeros,
    )


def _picard_pass(
    traj: FieldTrajectory,
    params: SKTParameters,
    cfg: SolverConfig,
    drift_sign: float,
) -> tuple[FieldTrajectory, int, int, int]:
    """Recompute every snapshot by paths over [0, t] against the trajectory.

    The coefficient field seen at path time theta in [j dt, (j+1) dt) is the
    trajectory snapshot at t - j dt (reversed clock, piecewise constant per
    layer); the endpoint always reads the initial data at t=0.
    """
    grid = traj[0].grid
    nodes = grid.nodes()
    dtheta = cfg.dt / cfg.substeps
    init_tab = FieldTable(traj[0])
    fields = [traj[0]]
    clips = clamps = events = 0
    for m in range(1, len(traj)):
        tables = [FieldTable(traj[m - j]) for j in range(m)]

        def node_worker(i: int, m=m, tables=tables):
            stream = NoiseStream.derive(cfg.master_seed, m, i)
            dws = stream.increments(dtheta, m * cfg.substeps, cfg.npaths)
            x0 = np.full(cfg.npaths, float(nodes[i]))
            out = []
            ncl_total = 0
            for q in (1, 2):
                su, sv, ncl = _point_block(
                    params, q, tables, init_tab, x0, dtheta, dws,
                    cfg.substeps, drift_sign)
                ncl_total += ncl
                um, us = _mean_stderr(su)
                vm, vs = _mean_stderr(sv)
                out.extend([um, us, vm, vs])
            nev = 2 * cfg.npaths * (m * cfg.substeps + 1)
            return (*out, ncl_total, nev)

        layer = _assemble_layer(traj[0], params, cfg, m * cfg.dt, node_worker)
        fields.append(layer.field)
        clips += layer.clips
        clamps += layer.clamps
        events += layer.events
    return FieldTrajectory(tuple(fields)), clips, clamps, events


def _trajectory_residual(a: FieldTrajectory, b: FieldTrajectory) -> float:
    res = 0.0
    for fa, fb in zip(a.fields, b.fields):
        res = max(res, float(np.max(np.abs(fa.u1 - fb.u1))))
        res = max(res, float(np.max(np.abs(fa.u2 - fb.u2))))
    return res


def solve_picard(
    u1_0: Callable,
    u2_0: Callable,
    params: SKTParameters,
    grid: GridSpec,
    cfg: SolverConfig,
    progress: Callable | None = None,
    drift_sign: float = 1.0,
) -> PicardResult:
    """Global fixed-point closure over the whole trajectory.

    Warm-starts from the layered solution, then repeatedly recomputes the
    trajectory against its own previous iterate (common random numbers per
    pass) until the sup-norm difference of the value fields drops below
    cfg.picard_tol or cfg.picard_max passes are reached.  Non-convergence is
    reported through the converged flag and residual history, never silently.
    """
    base = solve_layered(u1_0, u2_0, params, grid, cfg, drift_sign=drift_sign)
    traj = base.trajectory
    clips, clamps, events = base.clips, base.clamps, base.events
    residuals: list[float] = []
    converged = False
    for it in range(1, cfg.picard_max + 1):
        new_traj, c, cl, ev = _picard_pass(traj, params, cfg, drift_sign)
        clips += c
        clamps += cl
        events += ev
        residual = _trajectory_residual(new_traj, traj)
        residuals.append(residual)
        traj = new_traj
        if progress is not None:
            progress({"iteration": it, "residual": residual})
        if residual <= cfg.picard_tol:
            converged = True
            break
    return PicardResult(
        trajectory=traj,
        iterations=len(residuals),
        residuals=tuple(residuals),
        converged=converged,
        clips=clips, clamps=clamps, events=events,
    )
