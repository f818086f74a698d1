"""Model definition for the two-species SKT cross-diffusion system on a 1-D grid.

Holds the twelve model constants, the uniform spatial grid, density fields
with stored spatial gradients, piecewise-linear field interpolation with
boundary clamping, and smooth Gaussian test functions with exact first and
second derivatives.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Index offsets within this distance of a grid node are snapped onto it so
# that interpolation at node positions reproduces node values exactly.
_NODE_SNAP = 1e-9


class NonPositiveDiffusion(ValueError):
    """Base diffusion rate d1 or d2 is not strictly positive."""


class NegativeRate(ValueError):
    """A cross-diffusion or competition rate is negative."""


class NegativeInitialData(ValueError):
    """Initial density takes a negative value on the grid."""


class NonPositiveWidth(ValueError):
    """Test-function width must be strictly positive."""


@dataclass(frozen=True)
class SKTParameters:
    """The twelve constants of the two-species model.

    d1, d2    base diffusion rates, strictly positive
    dqr       cross-diffusion rates (q = affected species, r = source), >= 0
    a1, a2    intrinsic growth rates, any sign
    aqr       competition rates, >= 0
    """

    d1: float
    d2: float
    d11: float = 0.0
    d12: float = 0.0
    d21: float = 0.0
    d22: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    a11: float = 0.0
    a12: float = 0.0
    a21: float = 0.0
    a22: float = 0.0

    def diffusion(self, q: int) -> tuple[float, float, float]:
        """Diffusion constants (d_q, d_q1, d_q2) for species q in {1, 2}."""
        if q == 1:
            return self.d1, self.d11, self.d12
        if q == 2:
            return self.d2, self.d21, self.d22
        raise ValueError(f"species index must be 1 or 2, got {q}")

    def reaction(self, q: int) -> tuple[float, float, float]:
        """Reaction constants (a_q, a_q1, a_q2) for species q in {1, 2}."""
        if q == 1:
            return self.a1, self.a11, self.a12
        if q == 2:
            return self.a2, self.a21, self.a22
        raise ValueError(f"species index must be 1 or 2, got {q}")

    def swapped(self) -> "SKTParameters":
        """Parameters with the two species exchanged."""
        return SKTParameters(
            d1=self.d2, d2=self.d1,
            d11=self.d22, d12=self.d21, d21=self.d12, d22=self.d11,
            a1=self.a2, a2=self.a1,
            a11=self.a22, a12=self.a21, a21=self.a12, a22=self.a11,
        )


def validate_params(p: SKTParameters) -> None:
    """Raise NonPositiveDiffusion / NegativeRate if any invariant fails."""
    if not (p.d1 > 0.0 and p.d2 > 0.0):
        raise NonPositiveDiffusion(f"base diffusion rates must be > 0, got d1={p.d1}, d2={p.d2}")
    for name in ("d11", "d12", "d21", "d22", "a11", "a12", "a21", "a22"):
        value = getattr(p, name)
        if value < 0.0:
            raise NegativeRate(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of n nodes on [xmin, xmax]."""

    xmin: float
    xmax: float
    n: int

    def __post_init__(self) -> None:
        if not self.xmin < self.xmax:
            raise ValueError(f"need xmin < xmax, got [{self.xmin}, {self.xmax}]")
        if self.n < 3:
            raise ValueError(f"need at least 3 nodes, got {self.n}")

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / (self.n - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, self.n)


def _as_field_array(values, n: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.shape != (n,):
        raise ValueError(f"expected shape ({n},), got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DensityField:
    """Time slice of both densities and their spatial gradients on a grid.

    Immutable after construction: the node arrays are copied and marked
    read-only, so fields can be shared freely across worker threads.
    """

    grid: GridSpec
    t: float
    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self) -> None:
        n = self.grid.n
        for name in ("u1", "u2", "v1", "v2"):
            object.__setattr__(self, name, _as_field_array(getattr(self, name), n))
        if self.t < 0.0:
            raise ValueError(f"time label must be >= 0, got {self.t}")
        for name in ("u1", "u2"):
            arr = getattr(self, name)
            if np.min(arr) < 0.0:
                raise ValueError(f"{name} must be nonnegative everywhere")
        for name in ("u1", "u2", "v1", "v2"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")

    def sample(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]:
        """Piecewise-linear interpolation of all four arrays at positions x.

        Positions outside the grid are clamped to the nearest boundary node;
        the number of clamped positions is returned as the last element.
        """
        idx, frac, n_clamped = _locate(x, self.grid.xmin, self.grid.dx, self.grid.n)
        w = 1.0 - frac
        u1 = self.u1[idx] * w + self.u1[idx + 1] * frac
        u2 = self.u2[idx] * w + self.u2[idx + 1] * frac
        v1 = self.v1[idx] * w + self.v1[idx + 1] * frac
        v2 = self.v2[idx] * w + self.v2[idx + 1] * frac
        return u1, u2, v1, v2, n_clamped


def _locate(x, xmin: float, dx: float, n: int):
    """Map positions to (left index, fractional offset, clamp count)."""
    t = (np.asarray(x, dtype=np.float64) - xmin) / dx
    r = np.rint(t)
    t = np.where(np.abs(t - r) < _NODE_SNAP, r, t)
    clamped = (t < 0.0) | (t > n - 1.0)
    tc = np.clip(t, 0.0, float(n - 1))
    idx = np.minimum(tc.astype(np.int64), n - 2)
    frac = tc - idx
    return idx, frac, int(np.count_nonzero(clamped))


def interpolate(field: DensityField, x: float) -> tuple[float, float, float, float]:
    """Interpolated (u1, u2, v1, v2) at position x, clamped to the grid."""
    values, _ = interpolate_with_flag(field, x)
    return values


def interpolate_with_flag(field: DensityField, x: float):
    """Like interpolate(), but also reports whether x was clamped."""
    grid = field.grid
    t = (float(x) - grid.xmin) / grid.dx
    r = round(t)
    if abs(t - r) < _NODE_SNAP:
        t = float(r)
    clamped = t < 0.0 or t > grid.n - 1.0
    tc = min(max(t, 0.0), float(grid.n - 1))
    i = min(int(tc), grid.n - 2)
    frac = tc - i
    w = 1.0 - frac
    values = (
        float(field.u1[i] * w + field.u1[i + 1] * frac),
        float(field.u2[i] * w + field.u2[i + 1] * frac),
        float(field.v1[i] * w + field.v1[i + 1] * frac),
        float(field.v2[i] * w + field.v2[i + 1] * frac),
    )
    return values, int(clamped)


def field_from_initial(grid: GridSpec, u1_0: Callable, u2_0: Callable) -> DensityField:
    """Sample initial densities at the nodes and difference their gradients.

    Gradients use central differences at interior nodes and one-sided
    differences at the two boundary nodes.
    """
    x = grid.nodes()
    u1 = np.asarray(u1_0(x), dtype=np.float64)
    u2 = np.asarray(u2_0(x), dtype=np.float64)
    for name, arr in (("u1", u1), ("u2", u2)):
        if arr.shape != x.shape:
            raise ValueError(f"initial condition for {name} returned shape {arr.shape}")
        if np.min(arr) < 0.0:
            raise NegativeInitialData(f"initial {name} is negative somewhere on the grid")
    v1 = np.gradient(u1, grid.dx)
    v2 = np.gradient(u2, grid.dx)
    return DensityField(grid=grid, t=0.0, u1=u1, u2=u2, v1=v1, v2=v2)


@dataclass(frozen=True)
class TestFunction:
    """Smooth test function with analytically supplied first two derivatives.

    gauss carries (center, width) when the function is a Gaussian bump, which
    lets the compiled path kernels inline its evaluation.
    """

    __test__ = False  # not a pytest class despite the name

    h: Callable
    grad: Callable
    lap: Callable
    support_radius: float
    center: float = 0.0
    gauss: tuple[float, float] | None = None


def make_gaussian_test(center: float, width: float) -> TestFunction:
    """Gaussian bump exp(-(x-center)^2 / (2 width^2)) with exact derivatives."""
    if not width > 0.0:
        raise NonPositiveWidth(f"width must be > 0, got {width}")
    c = float(center)
    w2 = float(width) * float(width)

    def h(x):
        z = x - c
        return np.exp(-(z * z) / (2.0 * w2))

    def grad(x):
        z = x - c
        return -z / w2 * np.exp(-(z * z) / (2.0 * w2))

    def lap(x):
        z = x - c
        return ((z * z) / w2 - 1.0) / w2 * np.exp(-(z * z) / (2.0 * w2))

    return TestFunction(h=h, grad=grad, lap=lap, support_radius=8.0 * float(width),
                        center=c, gauss=(c, float(width)))


@dataclass(frozen=True)
class EstimatorResult:
    """Monte Carlo estimate with its sampling error and event counters."""

    mean: float
    stderr: float
    paths: int
    clamps: int

    def __post_init__(self) -> None:
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if self.stderr < 0.0:
            raise ValueError("stderr must be >= 0")


def gaussian_profile(center: float, width: float, mass: float) -> Callable:
    """Normal density with the given center and width, scaled to total mass."""
    if not width > 0.0:
        raise NonPositiveWidth(f"width must be > 0, got {width}")

    def profile(x):
        z = (np.asarray(x, dtype=np.float64) - center) / width
        return mass * np.exp(-0.5 * z * z) / (width * SQRT_2PI)

    return profile


def constant_profile(value: float) -> Callable:
    if value < 0.0:
        raise NegativeInitialData(f"constant initial value must be >= 0, got {value}")

    def profile(x):
        return np.full_like(np.asarray(x, dtype=np.float64), value)

    return profile


def two_bumps_profile(c1: float, c2: float, width: float, mass: float) -> Callable:
    """Two Gaussian bumps at c1 and c2, each carrying half the total mass."""
    left = gaussian_profile(c1, width, 0.5 * mass)
    right = gaussian_profile(c2, width, 0.5 * mass)

    def profile(x):
        return left(x) + right(x)

    return profile


# Families selectable by name in config files, with their argument counts.
INITIAL_FAMILIES = {
    "gaussian": (gaussian_profile, 3),
    "constant": (constant_profile, 1),
    "two-bumps": (two_bumps_profile, 4),
}

_INITIAL_RE = re.compile(r"^\s*([A-Za-z_][\w\-]*)\s*\((.*)\)\s*$")


def make_initial(spec: str) -> Callable:
    """Build an initial-condition callable from a name(args) string.

    Supported: gaussian(center,width,mass), constant(value),
    two-bumps(c1,c2,width,mass).
    """
    m = _INITIAL_RE.match(spec)
    if m is None:
        raise ValueError(f"cannot parse initial condition {spec!r}; expected name(arg, ...)")
    name, argstr = m.group(1), m.group(2)
    if name not in INITIAL_FAMILIES:
        known = ", ".join(sorted(INITIAL_FAMILIES))
        raise ValueError(f"unknown initial condition family {name!r}; known: {known}")
    factory, arity = INITIAL_FAMILIES[name]
    parts = [s for s in (p.strip() for p in argstr.split(",")) if s]
    if len(parts) != arity:
        raise ValueError(f"{name} takes {arity} arguments, got {len(parts)} in {spec!r}")
    try:
        args = [float(s) for s in parts]
    except ValueError as exc:
        raise ValueError(f"non-numeric argument in {spec!r}") from exc
    return factory(*args)
