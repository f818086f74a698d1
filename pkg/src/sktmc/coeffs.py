"""Coefficient algebra of the stochastic system.

Every quantity the path simulations need at a point: the diffusion amplitude
sqrt(2 (d_q + d_q1 u1 + d_q2 u2)), the reaction rate a_q - a_q1 u1 - a_q2 u2,
their spatial derivatives through the stored field gradients, the corrected
drift rate, the noise coefficient of the multiplicative weight, and the 2x2
lower-triangular coefficient matrices of the joint (value, gradient) system.

Gradients are evaluated analytically by the chain rule through the stored
gradient fields, never by differencing on the grid, so no interpolation error
compounds inside the SDE coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DensityField, SKTParameters, interpolate


class NonPositiveRadicand(ValueError):
    """d_q + d_q1 u1 + d_q2 u2 must stay strictly positive."""


def diffusion_amp(p: SKTParameters, q: int, u1: float, u2: float) -> float:
    """sqrt(2 (d_q + d_q1 u1 + d_q2 u2)); half its square is the diffusivity."""
    dq, dq1, dq2 = p.diffusion(q)
    radicand = dq + (dq1 * u1 + dq2 * u2)
    if not radicand > 0.0:
        raise NonPositiveRadicand(
            f"d_{q} + d_{q}1*u1 + d_{q}2*u2 = {radicand} (needs > 0); u1={u1}, u2={u2}"
        )
    return math.sqrt(2.0 * radicand)


def diffusion_amp_grad(p: SKTParameters, q: int, u1: float, u2: float, v1: float, v2: float) -> float:
    """Spatial derivative of diffusion_amp along the field: (d_q1 v1 + d_q2 v2) / amp."""
    dq, dq1, dq2 = p.diffusion(q)
    amp = diffusion_amp(p, q, u1, u2)
    return (dq1 * v1 + dq2 * v2) / amp


def reaction(p: SKTParameters, q: int, u1: float, u2: float) -> float:
    """a_q - a_q1 u1 - a_q2 u2."""
    aq, aq1, aq2 = p.reaction(q)
    return aq - (aq1 * u1 + aq2 * u2)


def reaction_grad(p: SKTParameters, q: int, v1: float, v2: float) -> float:
    """Spatial derivative of the reaction rate: -a_q1 v1 - a_q2 v2."""
    aq, aq1, aq2 = p.reaction(q)
    return -(aq1 * v1 + aq2 * v2)


@dataclass(frozen=True)
class PointCoeffs:
    """All coefficients for one species at one point.

    amp        diffusion amplitude of the position update
    amp_grad   spatial derivative of amp (chain rule through v1, v2)
    react      reaction rate
    react_grad spatial derivative of the reaction rate
    drift      corrected drift rate of the multiplicative weight,
               react + amp_grad^2 (sign of the correction flippable for
               mutation testing via drift_sign)
    noise      noise coefficient of the multiplicative weight, -amp_grad
    cross      d_q1 v1 + d_q2 v2, the gradient coupling of the matrix system
    """

    amp: float
    amp_grad: float
    react: float
    react_grad: float
    drift: float
    noise: float
    cross: float


def point_coeffs(
    p: SKTParameters,
    q: int,
    field: DensityField,
    x: float,
    drift_sign: float = 1.0,
) -> PointCoeffs:
    """Bundle of all coefficients at position x of the interpolated field."""
    u1, u2, v1, v2 = interpolate(field, x)
    return point_coeffs_from_values(p, q, u1, u2, v1, v2, drift_sign)


def point_coeffs_from_values(
    p: SKTParameters,
    q: int,
    u1: float,
    u2: float,
    v1: float,
    v2: float,
    drift_sign: float = 1.0,
) -> PointCoeffs:
    dq, dq1, dq2 = p.diffusion(q)
    aq, aq1, aq2 = p.reaction(q)
    radicand = dq + (dq1 * u1 + dq2 * u2)
    if not radicand > 0.0:
        raise NonPositiveRadicand(
            f"d_{q} + d_{q}1*u1 + d_{q}2*u2 = {radicand} (needs > 0); u1={u1}, u2={u2}"
        )
    amp = math.sqrt(2.0 * radicand)
    cross = dq1 * v1 + dq2 * v2
    amp_grad = cross / amp
    react = aq - (aq1 * u1 + aq2 * u2)
    react_grad = -(aq1 * v1 + aq2 * v2)
    drift = react + drift_sign * (amp_grad * amp_grad)
    return PointCoeffs(
        amp=amp,
        amp_grad=amp_grad,
        react=react,
        react_grad=react_grad,
        drift=drift,
        noise=-amp_grad,
        cross=cross,
    )


def matrix_coeffs(pc: PointCoeffs, drift_sign: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Drift and noise matrices of the joint (value, gradient) weight system.

    Both are 2x2 lower-triangular with equal diagonal drift entries:

        drift = [[drift, 0], [react_grad + amp_grad^2, drift]]
        noise = [[-amp_grad, 0], [-amp_grad, cross/amp - amp_grad]]

    The (2,2) noise entry vanishes identically whenever the stored gradients
    are the true derivatives of the stored densities, because then
    amp_grad == cross/amp; the general form is kept for fields whose gradient
    components are independent data.
    """
    g2 = pc.amp_grad * pc.amp_grad
    drift = np.array(
        [[pc.drift, 0.0], [pc.react_grad + drift_sign * g2, pc.drift]]
    )
    noise = np.array(
        [[-pc.amp_grad, 0.0], [-pc.amp_grad, pc.cross / pc.amp - pc.amp_grad]]
    )
    return drift, noise
