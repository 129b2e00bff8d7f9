"""Jit-compiled inner loops for quadric geodesic integration.

Optional: importing this module requires numba.  Callers fall back to the
generic integrator when the import fails; results agree to integrator
accuracy either way.
"""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def _accel(c, x, v):
    m = c.shape[0]
    rr = 0.0
    for i in range(m):
        rr += c[i] * x[i] * c[i] * x[i]
    rr = math.sqrt(rr)
    sv_v = 0.0
    nuw = 0.0
    for i in range(m):
        nuw += (c[i] * x[i] / rr) * (c[i] * v[i])
    for i in range(m):
        sv = (c[i] * v[i] - (c[i] * x[i] / rr) * nuw) / rr
        sv_v += sv * v[i]
    out = np.empty(m)
    for i in range(m):
        out[i] = -sv_v * (c[i] * x[i] / rr)
    return out


@numba.njit(cache=True)
def _retract(c, x, v):
    m = c.shape[0]
    f = 0.0
    for i in range(m):
        f += c[i] * x[i] * x[i]
    f = math.sqrt(f)
    for i in range(m):
        x[i] /= f
    rr = 0.0
    for i in range(m):
        rr += c[i] * x[i] * c[i] * x[i]
    rr = math.sqrt(rr)
    vn = 0.0
    for i in range(m):
        vn += v[i] * (c[i] * x[i] / rr)
    for i in range(m):
        v[i] -= vn * (c[i] * x[i] / rr)


@numba.njit(cache=True)
def quadric_exp_endpoint(c, x0, v0, length, h_target):
    """Endpoint (x, v) of the unit-speed quadric geodesic; RK4 with the
    same even-interval grid and per-step retraction as the generic path."""
    n = 2 * max(1, int(math.ceil(length / (2.0 * h_target))))
    h = length / n
    x = x0.copy()
    v = v0.copy()
    for _ in range(n):
        k1x = v
        k1v = _accel(c, x, v)
        x2 = x + 0.5 * h * k1x
        v2 = v + 0.5 * h * k1v
        k2x = v2
        k2v = _accel(c, x2, v2)
        x3 = x + 0.5 * h * k2x
        v3 = v + 0.5 * h * k2v
        k3x = v3
        k3v = _accel(c, x3, v3)
        x4 = x + h * k3x
        v4 = v + h * k3v
        k4x = v4
        k4v = _accel(c, x4, v4)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        _retract(c, x, v)
    return x, v


@numba.njit(cache=True)
def _gauss_curvature_3d(c, x, v):
    # sectional curvature of the plane (v, E) with E the in-surface normal,
    # from the surface shape operator; ambient dimension 3 only
    g0 = c[0] * x[0]
    g1 = c[1] * x[1]
    g2 = c[2] * x[2]
    rr = math.sqrt(g0 * g0 + g1 * g1 + g2 * g2)
    n0, n1, n2 = g0 / rr, g1 / rr, g2 / rr
    e0 = n1 * v[2] - n2 * v[1]
    e1 = n2 * v[0] - n0 * v[2]
    e2 = n0 * v[1] - n1 * v[0]
    en = math.sqrt(e0 * e0 + e1 * e1 + e2 * e2)
    e0, e1, e2 = e0 / en, e1 / en, e2 / en
    w0, w1, w2 = c[0] * v[0], c[1] * v[1], c[2] * v[2]
    nw = n0 * w0 + n1 * w1 + n2 * w2
    sv0, sv1, sv2 = (w0 - n0 * nw) / rr, (w1 - n1 * nw) / rr, (w2 - n2 * nw) / rr
    u0, u1, u2 = c[0] * e0, c[1] * e1, c[2] * e2
    nu_ = n0 * u0 + n1 * u1 + n2 * u2
    se0, se1, se2 = (u0 - n0 * nu_) / rr, (u1 - n1 * nu_) / rr, (u2 - n2 * nu_) / rr
    svv = sv0 * v[0] + sv1 * v[1] + sv2 * v[2]
    see = se0 * e0 + se1 * e1 + se2 * e2
    sev = se0 * v[0] + se1 * v[1] + se2 * v[2]
    return svv * see - sev * sev


@numba.njit(cache=True)
def quadric_radial_flow(c, x0, v0, length, h_target):
    """Endpoint of the scalar conjugate-type flow j'' + K j = 0 along a
    quadric surface geodesic in ambient dimension 3 (j(0)=0, j'(0)=1)."""
    n = 2 * max(1, int(math.ceil(length / (2.0 * h_target))))
    h = length / n
    x = x0.copy()
    v = v0.copy()
    t = 0.0
    tp = 1.0
    for _ in range(n):
        k1x = v
        k1v = _accel(c, x, v)
        r1 = _gauss_curvature_3d(c, x, v)
        k1t = tp
        k1p = -r1 * t
        x2 = x + 0.5 * h * k1x
        v2 = v + 0.5 * h * k1v
        r2 = _gauss_curvature_3d(c, x2, v2)
        k2t = tp + 0.5 * h * k1p
        k2p = -r2 * (t + 0.5 * h * k1t)
        k2x = v2
        k2v = _accel(c, x2, v2)
        x3 = x + 0.5 * h * k2x
        v3 = v + 0.5 * h * k2v
        r3 = _gauss_curvature_3d(c, x3, v3)
        k3t = tp + 0.5 * h * k2p
        k3p = -r3 * (t + 0.5 * h * k2t)
        k3x = v3
        k3v = _accel(c, x3, v3)
        x4 = x + h * k3x
        v4 = v + h * k3v
        r4 = _gauss_curvature_3d(c, x4, v4)
        k4t = tp + h * k3p
        k4p = -r4 * (t + h * k3t)
        k4x = v4
        k4v = _accel(c, x4, v4)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        t = t + (h / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        tp = tp + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        _retract(c, x, v)
    return x, v, t, tp
