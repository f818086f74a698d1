"""Euler-Maruyama engine for every stochastic process of the representation.

Two layers:

* scalar single-step updates and `simulate_path`, the readable reference
  implementation used by tests and small diagnostics;
* vectorized path blocks (`run_matrix_block`, `run_weight_block`,
  `run_test_block`, `run_flow_block`) used by the solver and the verification
  suite.  The block kernels evaluate the same expressions in the same order
  as the scalar steps, so feeding both the same increments yields
  bit-identical states; tests assert this.

Noise is derived from (master seed, integer key) through SeedSequence and a
counter-based Philox generator, so any (seed, key) pair produces the same
increment sequence on every platform and under any worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .coeffs import NonPositiveRadicand, PointCoeffs, matrix_coeffs, point_coeffs_from_values
from .model import DensityField, SKTParameters, TestFunction, interpolate_with_flag


class NonFiniteState(RuntimeError):
    """A path state left the finite floating-point range."""


class NoiseStream:
    """Reproducible source of Gaussian increments.

    The same (seed, key) pair yields a bit-identical increment sequence
    regardless of execution order or worker count; `counter` records how many
    blocks have been drawn from this instance.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self.counter = 0
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    @classmethod
    def derive(cls, master_seed: int, *key: int) -> "NoiseStream":
        return cls(master_seed, key)

    def increments(self, dtheta: float, nsteps: int, npaths: int | None = None) -> np.ndarray:
        """Brownian increments of variance dtheta; shape (nsteps,) or (npaths, nsteps)."""
        if not dtheta > 0.0:
            raise ValueError(f"dtheta must be > 0, got {dtheta}")
        shape = (nsteps,) if npaths is None else (npaths, nsteps)
        self.counter += 1
        return math.sqrt(dtheta) * self._gen.standard_normal(shape)


def _identity2() -> np.ndarray:
    return np.eye(2)


@dataclass(frozen=True)
class PathState:
    """One simulated particle.

    x       position
    weight  scalar multiplicative functional, starts at 1
    wmat    2x2 lower-triangular matrix functional, starts at the identity
    jac     Jacobian determinant of the flow, stays > 0 along every path
    clock   elapsed path time
    """

    x: float
    weight: float = 1.0
    wmat: np.ndarray = field(default_factory=_identity2)
    jac: float = 1.0
    clock: float = 0.0


def step_forward(state: PathState, pc: PointCoeffs, dtheta: float, dw: float) -> PathState:
    """Driftless position update x' = x + amp * dw."""
    return replace(state, x=state.x + pc.amp * dw, clock=state.clock + dtheta)


def step_reversed(state: PathState, pc: PointCoeffs, dtheta: float, dw: float) -> PathState:
    """Time-reversed position update x' = x + amp * amp_grad * dtheta + amp * dw."""
    x = state.x + pc.amp * pc.amp_grad * dtheta + pc.amp * dw
    return replace(state, x=x, clock=state.clock + dtheta)


def step_weight(state: PathState, pc: PointCoeffs, dtheta: float, dw: float) -> PathState:
    """Multiplicative weight update w' = w * (1 + drift dtheta + noise dw)."""
    return replace(state, weight=state.weight * (1.0 + pc.drift * dtheta + pc.noise * dw))


def step_jacobian(state: PathState, pc: PointCoeffs, dtheta: float, dw: float) -> PathState:
    """Jacobian determinant in log form, exact for frozen amp_grad.

    The per-step exact solution of the linear determinant SDE keeps jac > 0
    structurally; a naive Euler update could cross zero.
    """
    jac = state.jac * math.exp(pc.amp_grad * dw - 0.5 * (pc.amp_grad * pc.amp_grad) * dtheta)
    return replace(state, jac=jac)


def step_matrix(state: PathState, pc: PointCoeffs, dtheta: float, dw: float,
                drift_sign: float = 1.0) -> PathState:
    """Matrix functional update wmat' = (I + drift dtheta + noise dw) wmat.

    Computed componentwise on the lower triangle, so the (1,2) entry stays
    exactly zero after any number of steps.
    """
    a, b = matrix_coeffs(pc, drift_sign)
    m00 = 1.0 + a[0, 0] * dtheta + b[0, 0] * dw
    m10 = a[1, 0] * dtheta + b[1, 0] * dw
    m11 = 1.0 + a[1, 1] * dtheta + b[1, 1] * dw
    w = state.wmat
    new = np.array([
        [m00 * w[0, 0], 0.0],
        [m10 * w[0, 0] + m11 * w[1, 0], m11 * w[1, 1]],
    ])
    return replace(state, wmat=new)


@dataclass(frozen=True)
class PathResult:
    state: PathState
    integral: float
    clamps: int


def simulate_path(
    mode: str,
    functional: str,
    start: float,
    field_: DensityField,
    params: SKTParameters,
    q: int,
    t: float,
    nsteps: int,
    noise: NoiseStream,
    h: TestFunction | None = None,
    drift_sign: float = 1.0,
) -> PathResult:
    """Simulate one whole path with nsteps Euler steps of size t / nsteps.

    mode        "forward" (driftless) or "reversed" (with amp*amp_grad drift)
    functional  "weight"  evolve the scalar weight,
                "matrix"  evolve the 2x2 matrix functional,
                "test"    evolve weight and jacobian and accumulate the
                          left-endpoint quadrature of
                          (amp^2/2 * lap_h + react * h)(x) * weight * jac
                          (requires h)

    Coefficients are re-evaluated from the frozen field at the current
    position before every step.  Returns the final state, the accumulated
    integral (0 unless functional="test") and the clamp count.
    """
    if not t > 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    if nsteps < 1:
        raise ValueError(f"nsteps must be >= 1, got {nsteps}")
    if mode not in ("forward", "reversed"):
        raise ValueError(f"unknown mode {mode!r}")
    if functional not in ("weight", "matrix", "test"):
        raise ValueError(f"unknown functional {functional!r}")
    if functional == "test" and h is None:
        raise ValueError("functional='test' requires a test function h")

    dtheta = t / nsteps
    dws = noise.increments(dtheta, nsteps)
    state = PathState(x=float(start))
    integral = 0.0
    clamps = 0
    for k in range(nsteps):
        (u1, u2, v1, v2), clamped = interpolate_with_flag(field_, state.x)
        clamps += clamped
        pc = point_coeffs_from_values(params, q, u1, u2, v1, v2, drift_sign)
        dw = float(dws[k])
        if functional == "test":
            integral += (
                (0.5 * (pc.amp * pc.amp) * float(h.lap(state.x)) + pc.react * float(h.h(state.x)))
                * state.weight * state.jac * dtheta
            )
        moved = step_forward(state, pc, dtheta, dw) if mode == "forward" else step_reversed(state, pc, dtheta, dw)
        if functional == "weight":
            state = replace(moved, weight=step_weight(state, pc, dtheta, dw).weight)
        elif functional == "matrix":
            state = replace(moved, wmat=step_matrix(state, pc, dtheta, dw, drift_sign).wmat)
        else:
            state = replace(
                moved,
                weight=step_weight(state, pc, dtheta, dw).weight,
                jac=step_jacobian(state, pc, dtheta, dw).jac,
            )
    if not (
        math.isfinite(state.x)
        and math.isfinite(state.weight)
        and math.isfinite(state.jac)
        and bool(np.all(np.isfinite(state.wmat)))
        and math.isfinite(integral)
    ):
        raise NonFiniteState(f"path from {start} (species {q}) left the finite range")
    return PathResult(state=state, integral=integral, clamps=clamps)


# ---------------------------------------------------------------------------
# Vectorized path blocks.
# ---------------------------------------------------------------------------


class FieldTable:
    """Plain-array view of a DensityField for fast interpolation."""

    __slots__ = ("xmin", "dx", "n", "u1", "u2", "v1", "v2")

    def __init__(self, field_: DensityField):
        self.xmin = field_.grid.xmin
        self.dx = field_.grid.dx
        self.n = field_.grid.n
        self.u1 = field_.u1
        self.u2 = field_.u2
        self.v1 = field_.v1
        self.v2 = field_.v2


_NODE_SNAP = 1e-9  # keep in sync with model._NODE_SNAP


def _sample_table(tab: FieldTable, x: np.ndarray):
    """Vector interpolation; mirrors model.interpolate_with_flag exactly."""
    t = (x - tab.xmin) / tab.dx
    r = np.rint(t)
    t = np.where(np.abs(t - r) < _NODE_SNAP, r, t)
    n_clamped = int(np.count_nonzero((t < 0.0) | (t > tab.n - 1.0)))
    tc = np.clip(t, 0.0, float(tab.n - 1))
    idx = np.minimum(tc.astype(np.int64), tab.n - 2)
    frac = tc - idx
    w = 1.0 - frac
    u1 = tab.u1[idx] * w + tab.u1[idx + 1] * frac
    u2 = tab.u2[idx] * w + tab.u2[idx + 1] * frac
    v1 = tab.v1[idx] * w + tab.v1[idx + 1] * frac
    v2 = tab.v2[idx] * w + tab.v2[idx + 1] * frac
    return u1, u2, v1, v2, n_clamped


def _stacked_tables(tables: Sequence[FieldTable]):
    first = tables[0]
    for tab in tables[1:]:
        if (tab.xmin, tab.dx, tab.n) != (first.xmin, first.dx, first.n):
            raise ValueError("all coefficient tables must share one grid")
    u1s = np.stack([t.u1 for t in tables])
    u2s = np.stack([t.u2 for t in tables])
    v1s = np.stack([t.v1 for t in tables])
    v2s = np.stack([t.v2 for t in tables])
    return u1s, u2s, v1s, v2s


def _step_layers(nsteps: int, steps_per_table: int, ntables: int) -> np.ndarray:
    return np.minimum(np.arange(nsteps, dtype=np.int64) // steps_per_table, ntables - 1)


def _check_status(status: int, what: str, q: int) -> None:
    if status == 1:
        raise NonPositiveRadicand(
            f"diffusion radicand for species {q} became nonpositive in {what}")


def run_matrix_block(
    tables: Sequence[FieldTable],
    params: SKTParameters,
    q: int,
    x0: np.ndarray,
    dtheta: float,
    dws: np.ndarray,
    mode: str = "reversed",
    drift_sign: float = 1.0,
    steps_per_table: int | None = None,
):
    """Paths carrying the 2x2 matrix functional; the estimator's hot kernel.

    tables holds one FieldTable per coefficient layer; step k reads
    tables[k // steps_per_table] (a single frozen table when len == 1).
    Returns (x, m11, m21, m22, clamps); the (1,2) entry is identically zero.
    """
    from ._kernels import matrix_kernel

    nsteps = dws.shape[-1]
    if steps_per_table is None:
        steps_per_table = nsteps
    tab = tables[0]
    dq, dq1, dq2 = params.diffusion(q)
    aq, aq1, aq2 = params.reaction(q)
    u1s, u2s, v1s, v2s = _stacked_tables(tables)
    x, m11, m21, m22, clamps, status = matrix_kernel(
        np.asarray(x0, dtype=np.float64), u1s, u2s, v1s, v2s,
        tab.xmin, tab.dx, tab.n,
        _step_layers(nsteps, steps_per_table, len(tables)),
        dq, dq1, dq2, aq, aq1, aq2,
        float(dtheta), np.asarray(dws, dtype=np.float64), float(drift_sign),
        mode == "reversed",
    )
    _check_status(status, "matrix block", q)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(m11))
            and np.all(np.isfinite(m21)) and np.all(np.isfinite(m22))):
        raise NonFiniteState(f"matrix path block for species {q} left the finite range")
    return x, m11, m21, m22, int(clamps)


def run_weight_block(
    tables: Sequence[FieldTable],
    params: SKTParameters,
    q: int,
    x0: np.ndarray,
    dtheta: float,
    dws: np.ndarray,
    mode: str = "reversed",
    drift_sign: float = 1.0,
    steps_per_table: int | None = None,
):
    """Paths carrying the scalar multiplicative weight.

    Returns (x, weight, clamps).
    """
    from ._kernels import weight_kernel

    nsteps = dws.shape[-1]
    if steps_per_table is None:
        steps_per_table = nsteps
    tab = tables[0]
    dq, dq1, dq2 = params.diffusion(q)
    aq, aq1, aq2 = params.reaction(q)
    u1s, u2s, v1s, v2s = _stacked_tables(tables)
    x, weight, clamps, status = weight_kernel(
        np.asarray(x0, dtype=np.float64), u1s, u2s, v1s, v2s,
        tab.xmin, tab.dx, tab.n,
        _step_layers(nsteps, steps_per_table, len(tables)),
        dq, dq1, dq2, aq, aq1, aq2,
        float(dtheta), np.asarray(dws, dtype=np.float64), float(drift_sign),
        mode == "reversed",
    )
    _check_status(status, "weight block", q)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(weight))):
        raise NonFiniteState(f"weight path block for species {q} left the finite range")
    return x, weight, int(clamps)


def run_test_block(
    tab: FieldTable,
    params: SKTParameters,
    q: int,
    start: float,
    h: TestFunction,
    dtheta: float,
    dws: np.ndarray,
    drift_sign: float = 1.0,
):
    """Forward paths building the stochastic test functional weight*h(x)*jac.

    Accumulates the left-endpoint quadrature of
    (amp^2/2 * lap_h + react * h)(x) * weight * jac along each path.
    Requires a Gaussian test function (h.gauss set) so the kernel can inline
    its evaluation; use simulate_path for arbitrary test functions.
    Returns (x, weight, jac, integral, clamps).
    """
    from ._kernels import test_kernel

    if h.gauss is None:
        raise ValueError("run_test_block needs a Gaussian test function; "
                         "use simulate_path(functional='test') for general h")
    center, width = h.gauss
    dq, dq1, dq2 = params.diffusion(q)
    aq, aq1, aq2 = params.reaction(q)
    x, weight, jac, integral, clamps, status = test_kernel(
        float(start), tab.u1, tab.u2, tab.v1, tab.v2,
        tab.xmin, tab.dx, tab.n,
        dq, dq1, dq2, aq, aq1, aq2,
        float(center), float(width) * float(width),
        float(dtheta), np.asarray(dws, dtype=np.float64), float(drift_sign),
    )
    _check_status(status, "test block", q)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(weight))
            and np.all(np.isfinite(jac)) and np.all(np.isfinite(integral))):
        raise NonFiniteState(f"test path block for species {q} left the finite range")
    return x, weight, jac, integral, int(clamps)


def run_flow_block(
    tab: FieldTable,
    params: SKTParameters,
    q: int,
    starts: np.ndarray,
    dtheta: float,
    dws: np.ndarray,
):
    """Forward flow from an ordered set of starts under one shared noise stream.

    dws has shape (npaths, nsteps); every start within a path sees the same
    increments, so each path realizes one sample of the flow map.  Returns
    (positions (npaths, nstarts), jac (npaths, nstarts), clamps).
    """
    from ._kernels import flow_kernel

    dq, dq1, dq2 = params.diffusion(q)
    aq, aq1, aq2 = params.reaction(q)
    x, jac, clamps, status = flow_kernel(
        np.asarray(starts, dtype=np.float64), tab.u1, tab.u2, tab.v1, tab.v2,
        tab.xmin, tab.dx, tab.n,
        dq, dq1, dq2, aq, aq1, aq2,
        float(dtheta), np.asarray(dws, dtype=np.float64),
    )
    _check_status(status, "flow block", q)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(jac))):
        raise NonFiniteState(f"flow block for species {q} left the finite range")
    return x, jac, int(clamps)
