"""Compiled inner loops for the path blocks.

Each kernel walks all paths of a block step by step with the whole state in
registers, evaluating exactly the same expressions in the same order as the
scalar reference steps in sde.py; tests assert bit-identity against that
reference.  Coefficient fields arrive as stacked (layer, node) arrays so the
same kernels serve both frozen-field layers and the multi-layer reversed
clock of the Picard pass.

Status codes: 0 ok, 1 nonpositive diffusion radicand.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

_SNAP = 1e-9  # keep in sync with model._NODE_SNAP


@njit(cache=True, nogil=True, inline="always")
def _locate(x, xmin, dx, n):
    t = (x - xmin) / dx
    r = np.rint(t)
    if abs(t - r) < _SNAP:
        t = r
    clamped = 0
    if t < 0.0 or t > n - 1.0:
        clamped = 1
        t = min(max(t, 0.0), n - 1.0)
    i = int(t)
    if i > n - 2:
        i = n - 2
    return i, t - i, clamped


@njit(cache=True, nogil=True)
def matrix_kernel(x0, u1s, u2s, v1s, v2s, xmin, dx, n, step_layer,
                  dq, dq1, dq2, aq, aq1, aq2, dtheta, dws, drift_sign, reversed_mode):
    npaths = x0.shape[0]
    nsteps = dws.shape[1]
    xf = np.empty(npaths)
    m11f = np.empty(npaths)
    m21f = np.empty(npaths)
    m22f = np.empty(npaths)
    clamps = 0
    status = 0
    for p in range(npaths):
        x = x0[p]
        m11 = 1.0
        m21 = 0.0
        m22 = 1.0
        for k in range(nsteps):
            li = step_layer[k]
            i, frac, cl = _locate(x, xmin, dx, n)
            clamps += cl
            w = 1.0 - frac
            u1 = u1s[li, i] * w + u1s[li, i + 1] * frac
            u2 = u2s[li, i] * w + u2s[li, i + 1] * frac
            v1 = v1s[li, i] * w + v1s[li, i + 1] * frac
            v2 = v2s[li, i] * w + v2s[li, i + 1] * frac
            radicand = dq + (dq1 * u1 + dq2 * u2)
            if not radicand > 0.0:
                status = 1
                break
            amp = math.sqrt(2.0 * radicand)
            cross = dq1 * v1 + dq2 * v2
            amp_grad = cross / amp
            react = aq - (aq1 * u1 + aq2 * u2)
            react_grad = -(aq1 * v1 + aq2 * v2)
            drift = react + drift_sign * (amp_grad * amp_grad)
            noise = -amp_grad
            dw = dws[p, k]
            f11 = 1.0 + drift * dtheta + noise * dw
            f21 = (react_grad + drift_sign * (amp_grad * amp_grad)) * dtheta + noise * dw
            f22 = 1.0 + drift * dtheta + (cross / amp - amp_grad) * dw
            m21 = f21 * m11 + f22 * m21
            m11 = f11 * m11
            m22 = f22 * m22
            if reversed_mode:
                x = x + amp * amp_grad * dtheta + amp * dw
            else:
                x = x + amp * dw
        if status != 0:
            break
        xf[p] = x
        m11f[p] = m11
        m21f[p] = m21
        m22f[p] = m22
    return xf, m11f, m21f, m22f, clamps, status


@njit(cache=True, nogil=True)
def estimator_kernel(x0, u1s, u2s, v1s, v2s, xmin, dx, n, step_layer,
                     uq_end, vq_end,
                     dq, dq1, dq2, aq, aq1, aq2, dtheta, dws, drift_sign):
    """Matrix paths fused with the endpoint read-off of (value, gradient).

    Returns per-path samples su = m11 u(x_T) and sv = m21 u(x_T) + m22 v(x_T)
    where (u, v) interpolate the endpoint arrays (the initial-data field).
    """
    npaths = x0.shape[0]
    nsteps = dws.shape[1]
    su = np.empty(npaths)
    sv = np.empty(npaths)
    clamps = 0
    status = 0
    for p in range(npaths):
        x = x0[p]
        m11 = 1.0
        m21 = 0.0
        m22 = 1.0
        for k in range(nsteps):
            li = step_layer[k]
            i, frac, cl = _locate(x, xmin, dx, n)
            clamps += cl
            w = 1.0 - frac
            u1 = u1s[li, i] * w + u1s[li, i + 1] * frac
            u2 = u2s[li, i] * w + u2s[li, i + 1] * frac
            v1 = v1s[li, i] * w + v1s[li, i + 1] * frac
            v2 = v2s[li, i] * w + v2s[li, i + 1] * frac
            radicand = dq + (dq1 * u1 + dq2 * u2)
            if not radicand > 0.0:
                status = 1
                break
            amp = math.sqrt(2.0 * radicand)
            cross = dq1 * v1 + dq2 * v2
            amp_grad = cross / amp
            react = aq - (aq1 * u1 + aq2 * u2)
            react_grad = -(aq1 * v1 + aq2 * v2)
            drift = react + drift_sign * (amp_grad * amp_grad)
            noise = -amp_grad
            dw = dws[p, k]
            f11 = 1.0 + drift * dtheta + noise * dw
            f21 = (react_grad + drift_sign * (amp_grad * amp_grad)) * dtheta + noise * dw
            f22 = 1.0 + drift * dtheta + (cross / amp - amp_grad) * dw
            m21 = f21 * m11 + f22 * m21
            m11 = f11 * m11
            m22 = f22 * m22
            x = x + amp * amp_grad * dtheta + amp * dw
        if status != 0:
            break
        i, frac, cl = _locate(x, xmin, dx, n)
        clamps += cl
        w = 1.0 - frac
        u = uq_end[i] * w + uq_end[i + 1] * frac
        v = vq_end[i] * w + vq_end[i + 1] * frac
        su[p] = m11 * u
        sv[p] = m21 * u + m22 * v
    return su, sv, clamps, status


@njit(cache=True, nogil=True)
def weight_kernel(x0, u1s, u2s, v1s, v2s, xmin, dx, n, step_layer,
                  dq, dq1, dq2, aq, aq1, aq2, dtheta, dws, drift_sign, reversed_mode):
    npaths = x0.shape[0]
    nsteps = dws.shape[1]
    xf = np.empty(npaths)
    wf = np.empty(npaths)
    clamps = 0
    status = 0
    for p in range(npaths):
        x = x0[p]
        weight = 1.0
        for k in range(nsteps):
            li = step_layer[k]
            i, frac, cl = _locate(x, xmin, dx, n)
            clamps += cl
            w = 1.0 - frac
            u1 = u1s[li, i] * w + u1s[li, i + 1] * frac
            u2 = u2s[li, i] * w + u2s[li, i + 1] * frac
            v1 = v1s[li, i] * w + v1s[li, i + 1] * frac
            v2 = v2s[li, i] * w + v2s[li, i + 1] * frac
            radicand = dq + (dq1 * u1 + dq2 * u2)
            if not radicand > 0.0:
                status = 1
                break
            amp = math.sqrt(2.0 * radicand)
            cross = dq1 * v1 + dq2 * v2
            amp_grad = cross / amp
            react = aq - (aq1 * u1 + aq2 * u2)
            drift = react + drift_sign * (amp_grad * amp_grad)
            noise = -amp_grad
            dw = dws[p, k]
            weight = weight * (1.0 + drift * dtheta + noise * dw)
            if reversed_mode:
                x = x + amp * amp_grad * dtheta + amp * dw
            else:
                x = x + amp * dw
        if status != 0:
            break
        xf[p] = x
        wf[p] = weight
    return xf, wf, clamps, status


@njit(cache=True, nogil=True)
def test_kernel(start, u1g, u2g, v1g, v2g, xmin, dx, n,
                dq, dq1, dq2, aq, aq1, aq2, h_center, h_w2,
                dtheta, dws, drift_sign):
    """Forward paths of the stochastic test functional with a Gaussian h."""
    npaths = dws.shape[0]
    nsteps = dws.shape[1]
    xf = np.empty(npaths)
    wf = np.empty(npaths)
    jf = np.empty(npaths)
    intf = np.empty(npaths)
    clamps = 0
    status = 0
    for p in range(npaths):
        x = start
        weight = 1.0
        jac = 1.0
        integral = 0.0
        for k in range(nsteps):
            i, frac, cl = _locate(x, xmin, dx, n)
            clamps += cl
            w = 1.0 - frac
            u1 = u1g[i] * w + u1g[i + 1] * frac
            u2 = u2g[i] * w + u2g[i + 1] * frac
            v1 = v1g[i] * w + v1g[i + 1] * frac
            v2 = v2g[i] * w + v2g[i + 1] * frac
            radicand = dq + (dq1 * u1 + dq2 * u2)
            if not radicand > 0.0:
                status = 1
                break
            amp = math.sqrt(2.0 * radicand)
            cross = dq1 * v1 + dq2 * v2
            amp_grad = cross / amp
            react = aq - (aq1 * u1 + aq2 * u2)
            drift = react + drift_sign * (amp_grad * amp_grad)
            noise = -amp_grad
            z = x - h_center
            hval = math.exp(-(z * z) / (2.0 * h_w2))
            lap = ((z * z) / h_w2 - 1.0) / h_w2 * math.exp(-(z * z) / (2.0 * h_w2))
            integral = integral + (0.5 * (amp * amp) * lap + react * hval) * weight * jac * dtheta
            dw = dws[p, k]
            weight = weight * (1.0 + drift * dtheta + noise * dw)
            jac = jac * math.exp(amp_grad * dw - 0.5 * (amp_grad * amp_grad) * dtheta)
            x = x + amp * dw
        if status != 0:
            break
        xf[p] = x
        wf[p] = weight
        jf[p] = jac
        intf[p] = integral
    return xf, wf, jf, intf, clamps, status


@njit(cache=True, nogil=True)
def flow_kernel(starts, u1g, u2g, v1g, v2g, xmin, dx, n,
                dq, dq1, dq2, aq, aq1, aq2, dtheta, dws):
    """Forward flow: every start within a path sees the same increments."""
    npaths = dws.shape[0]
    nsteps = dws.shape[1]
    nstarts = starts.shape[0]
    xf = np.empty((npaths, nstarts))
    jf = np.empty((npaths, nstarts))
    clamps = 0
    status = 0
    for p in range(npaths):
        for s in range(nstarts):
            x = starts[s]
            jac = 1.0
            for k in range(nsteps):
                i, frac, cl = _locate(x, xmin, dx, n)
                clamps += cl
                w = 1.0 - frac
                u1 = u1g[i] * w + u1g[i + 1] * frac
                u2 = u2g[i] * w + u2g[i + 1] * frac
                v1 = v1g[i] * w + v1g[i + 1] * frac
                v2 = v2g[i] * w + v2g[i + 1] * frac
                radicand = dq + (dq1 * u1 + dq2 * u2)
                if not radicand > 0.0:
                    status = 1
                    break
                amp = math.sqrt(2.0 * radicand)
                cross = dq1 * v1 + dq2 * v2
                amp_grad = cross / amp
                dw = dws[p, k]
                jac = jac * math.exp(amp_grad * dw - 0.5 * (amp_grad * amp_grad) * dtheta)
                x = x + amp * dw
            if status != 0:
                break
            xf[p, s] = x
            jf[p, s] = jac
        if status != 0:
            break
    return xf, jf, clamps, status
