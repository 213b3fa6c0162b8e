"""Numba kernels for tree kinematics and dynamics.

All spatial quantities use world-aligned Plucker coordinates about the world
origin: motion vectors are [omega; v_origin], force vectors [moment_origin; f].
In a shared frame, composite inertias add without transforms, which keeps the
composite-rigid-body pass a plain accumulation.
"""

import numpy as np
from numba import njit

REVOLUTE = 0


@njit(cache=True, fastmath=False)
def _rodrigues(u, angle, out):
    c = np.cos(angle)
    s = np.sin(angle)
    t = 1.0 - c
    ux, uy, uz = u[0], u[1], u[2]
    out[0, 0] = c + ux * ux * t
    out[0, 1] = ux * uy * t - uz * s
    out[0, 2] = ux * uz * t + uy * s
    out[1, 0] = uy * ux * t + uz * s
    out[1, 1] = c + uy * uy * t
    out[1, 2] = uy * uz * t - ux * s
    out[2, 0] = uz * ux * t - uy * s
    out[2, 1] = uz * uy * t + ux * s
    out[2, 2] = c + uz * uz * t


@njit(cache=True, fastmath=False)
def _cross3(a, b, out):
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


@njit(cache=True, fastmath=False)
def fk_kernel(parent, jtype, axis, loc_rot, loc_pos, q):
    """World rotation and origin of every body frame."""
    n = q.shape[0]
    R = np.empty((n, 3, 3))
    p = np.empty((n, 3))
    Rj = np.empty((3, 3))
    for i in range(n):
        pi = parent[i]
        if pi < 0:
            Rf = loc_rot[i]
            pf = loc_pos[i]
        else:
            Rf = R[pi] @ loc_rot[i]
            pf = p[pi] + R[pi] @ loc_pos[i]
        if jtype[i] == REVOLUTE:
            _rodrigues(axis[i], q[i], Rj)
            R[i] = Rf @ Rj
            p[i] = pf
        else:
            R[i] = Rf
            p[i] = pf + Rf @ (axis[i] * q[i])
    return R, p


@njit(cache=True, fastmath=False)
def spatial_kernel(R, p, jtype, axis, mass, com, inertia):
    """Joint motion subspaces S and body spatial inertias about the origin."""
    n = p.shape[0]
    S = np.zeros((n, 6))
    I6 = np.empty((n, 6, 6))
    cw = np.empty((n, 3))
    u = np.empty(3)
    oxu = np.empty(3)
    Iw = np.empty((3, 3))
    for i in range(n):
        u[:] = R[i] @ axis[i]
        if jtype[i] == REVOLUTE:
            S[i, 0] = u[0]
            S[i, 1] = u[1]
            S[i, 2] = u[2]
            _cross3(p[i], u, oxu)
            S[i, 3] = oxu[0]
            S[i, 4] = oxu[1]
            S[i, 5] = oxu[2]
        else:
            S[i, 3] = u[0]
            S[i, 4] = u[1]
            S[i, 5] = u[2]

        c = p[i] + R[i] @ com[i]
        cw[i] = c
        m = mass[i]
        RI = R[i] @ inertia[i]
        for r in range(3):
            for cc in range(3):
                acc = 0.0
                for k in range(3):
                    acc += RI[r, k] * R[i, cc, k]
                Iw[r, cc] = acc
        cx, cy, cz = c[0], c[1], c[2]
        # I6 = [[Iw + m*ct*ct^T, m*ct], [m*ct^T, m*1]] with ct = skew(c)
        I6[i, 0, 0] = Iw[0, 0] + m * (cy * cy + cz * cz)
        I6[i, 0, 1] = Iw[0, 1] - m * cx * cy
        I6[i, 0, 2] = Iw[0, 2] - m * cx * cz
        I6[i, 1, 0] = Iw[1, 0] - m * cy * cx
        I6[i, 1, 1] = Iw[1, 1] + m * (cx * cx + cz * cz)
        I6[i, 1, 2] = Iw[1, 2] - m * cy * cz
        I6[i, 2, 0] = Iw[2, 0] - m * cz * cx
        I6[i, 2, 1] = Iw[2, 1] - m * cz * cy
        I6[i, 2, 2] = Iw[2, 2] + m * (cx * cx + cy * cy)
        # m * skew(c)
        I6[i, 0, 3] = 0.0
        I6[i, 0, 4] = -m * cz
        I6[i, 0, 5] = m * cy
        I6[i, 1, 3] = m * cz
        I6[i, 1, 4] = 0.0
        I6[i, 1, 5] = -m * cx
        I6[i, 2, 3] = -m * cy
        I6[i, 2, 4] = m * cx
        I6[i, 2, 5] = 0.0
        for r in range(3):
            for cc in range(3):
                I6[i, 3 + r, cc] = I6[i, cc, 3 + r]
                I6[i, 3 + r, 3 + cc] = m if r == cc else 0.0
    return S, I6, cw


@njit(cache=True, fastmath=False)
def _cross_motion(v, m, out):
    # [w; vo] x [mw; mv] = [w x mw; w x mv + vo x mw]
    out[0] = v[1] * m[2] - v[2] * m[1]
    out[1] = v[2] * m[0] - v[0] * m[2]
    out[2] = v[0] * m[1] - v[1] * m[0]
    out[3] = v[1] * m[5] - v[2] * m[4] + v[4] * m[2] - v[5] * m[1]
    out[4] = v[2] * m[3] - v[0] * m[5] + v[5] * m[0] - v[3] * m[2]
    out[5] = v[0] * m[4] - v[1] * m[3] + v[3] * m[1] - v[4] * m[0]


@njit(cache=True, fastmath=False)
def _cross_force(v, f, out):
    # [w; vo] x* [n; fl] = [w x n + vo x fl; w x fl]
    out[0] = v[1] * f[2] - v[2] * f[1] + v[4] * f[5] - v[5] * f[4]
    out[1] = v[2] * f[0] - v[0] * f[2] + v[5] * f[3] - v[3] * f[5]
    out[2] = v[0] * f[1] - v[1] * f[0] + v[3] * f[4] - v[4] * f[3]
    out[3] = v[1] * f[5] - v[2] * f[4]
    out[4] = v[2] * f[3] - v[0] * f[5]
    out[5] = v[0] * f[4] - v[1] * f[3]


@njit(cache=True, fastmath=False)
def body_velocities(parent, S, qd):
    """Spatial velocity of every body (world-origin coordinates)."""
    n = qd.shape[0]
    v6 = np.zeros((n, 6))
    for i in range(n):
        pi = parent[i]
        if pi >= 0:
            v6[i] = v6[pi]
        v6[i] += S[i] * qd[i]
    return v6


@njit(cache=True, fastmath=False)
def rne_kernel(parent, S, I6, qd, qdd, a0, f_ext):
    """Recursive Newton-Euler: joint forces for a prescribed acceleration.

    a0 is the virtual base acceleration ([0; -g] folds gravity in); f_ext
    holds applied spatial forces per body, which reduce the returned tau.
    """
    n = qd.shape[0]
    v6 = np.zeros((n, 6))
    a6 = np.empty((n, 6))
    f = np.empty((n, 6))
    tau = np.empty(n)
    tmp = np.empty(6)
    for i in range(n):
        pi = parent[i]
        if pi >= 0:
            v6[i] = v6[pi]
            a6[i] = a6[pi]
        else:
            a6[i] = a0
        sq = S[i] * qd[i]
        v6[i] += sq
        a6[i] += S[i] * qdd[i]
        _cross_motion(v6[i], sq, tmp)
        a6[i] += tmp
        f[i] = I6[i] @ a6[i]
        _cross_force(v6[i], I6[i] @ v6[i], tmp)
        f[i] += tmp
        f[i] -= f_ext[i]
    for i in range(n - 1, -1, -1):
        tau[i] = S[i] @ f[i]
        pi = parent[i]
        if pi >= 0:
            f[pi] += f[i]
    return tau


@njit(cache=True, fastmath=False)
def crb_kernel(parent, S, I6):
    """Composite-rigid-body pass: F[i] = (subtree inertia at i) @ S[i]."""
    n = S.shape[0]
    IC = I6.copy()
    F = np.empty((n, 6))
    for i in range(n - 1, -1, -1):
        F[i] = IC[i] @ S[i]
        pi = parent[i]
        if pi >= 0:
            IC[pi] += IC[i]
    return F


@njit(cache=True, fastmath=False)
def project_forces_kernel(parent, S, f_ext):
    """Generalized force tau = J^T f for spatial forces attached to bodies."""
    n = S.shape[0]
    f = f_ext.copy()
    tau = np.empty(n)
    for i in range(n - 1, -1, -1):
        tau[i] = S[i] @ f[i]
        pi = parent[i]
        if pi >= 0:
            f[pi] += f[i]
    return tau
