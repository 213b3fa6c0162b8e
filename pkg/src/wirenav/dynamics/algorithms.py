"""Public operations on kinematic trees.

Every function takes the tree plus plain numpy arrays and returns numpy
arrays; nothing here mutates the tree. The heavy per-body recursions live in
kernels.py; this layer validates shapes, assembles spatial quantities, and
solves the joint-space equation of motion M(q) vdot + c(q, v) = tau + J^T f.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .tree import ChainState, KinematicTree, TreeError


def _spatial(tree: KinematicTree, q: np.ndarray):
    R, p = kernels.fk_kernel(
        tree.parent, tree.jtype, tree.axis, tree.loc_rot, tree.loc_pos, q
    )
    S, I6, cw = kernels.spatial_kernel(
        R, p, tree.jtype, tree.axis, tree.mass, tree.com, tree.inertia
    )
    return R, p, S, I6, cw


def _gravity_accel(gravity) -> np.ndarray:
    g = np.asarray(gravity, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(g)):
        raise TreeError("gravity must be finite")
    a0 = np.zeros(6)
    a0[3:] = -g
    return a0


def _ext_to_spatial(tree: KinematicTree, external) -> np.ndarray:
    """Stack (body, point, force) triples into per-body spatial forces."""
    f6 = np.zeros((tree.n, 6))
    for body, point, force in external:
        body = int(body)
        if not 0 <= body < tree.n:
            raise TreeError(f"external force on unknown body {body}")
        pt = np.asarray(point, dtype=np.float64).reshape(3)
        f = np.asarray(force, dtype=np.float64).reshape(3)
        f6[body, :3] += np.cross(pt, f)
        f6[body, 3:] += f
    return f6


def forward_kinematics(tree: KinematicTree, q: np.ndarray):
    """World pose of every body frame: (rotations (n,3,3), origins (n,3))."""
    q = tree.check_q(q)
    R, p = kernels.fk_kernel(
        tree.parent, tree.jtype, tree.axis, tree.loc_rot, tree.loc_pos, q
    )
    return R, p


def body_point(tree: KinematicTree, q: np.ndarray, body: int, local_point) -> np.ndarray:
    """World position of a point given in a body's local frame."""
    R, p = forward_kinematics(tree, q)
    lp = np.asarray(local_point, dtype=np.float64).reshape(3)
    return p[body] + R[body] @ lp


def joint_torques(tree: KinematicTree, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Passive spring-damper torque at each joint (enters tau additively)."""
    q = tree.check_q(q)
    v = tree.check_v(v)
    return -tree.stiffness * (q - tree.rest) - tree.damping * v


def rne_bias(tree: KinematicTree, q: np.ndarray, v: np.ndarray, gravity=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Coriolis, centrifugal, and gravity term c(q, v)."""
    q = tree.check_q(q)
    v = tree.check_v(v)
    _, _, S, I6, _ = _spatial(tree, q)
    zeros = np.zeros(tree.n)
    f_ext = np.zeros((tree.n, 6))
    return kernels.rne_kernel(tree.parent, S, I6, v, zeros, _gravity_accel(gravity), f_ext)


def inverse_dynamics(
    tree: KinematicTree,
    q: np.ndarray,
    v: np.ndarray,
    a: np.ndarray,
    gravity=(0.0, 0.0, 0.0),
    external=(),
) -> np.ndarray:
    """Joint forces that realize acceleration a: tau = M a + c - J^T f."""
    q = tree.check_q(q)
    v = tree.check_v(v)
    a = tree.check_v(np.asarray(a, dtype=np.float64))
    _, _, S, I6, _ = _spatial(tree, q)
    f_ext = _ext_to_spatial(tree, external)
    return kernels.rne_kernel(tree.parent, S, I6, v, a, _gravity_accel(gravity), f_ext)


def crb_mass_matrix(tree: KinematicTree, q: np.ndarray) -> np.ndarray:
    """Joint-space inertia matrix M(q), symmetric positive definite."""
    q = tree.check_q(q)
    _, _, S, I6, _ = _spatial(tree, q)
    F = kernels.crb_kernel(tree.parent, S, I6)
    G = (S @ F.T) * tree.ancestor_mask
    M = G + G.T - np.diag(np.diag(G))
    return M


def forward_dynamics(
    tree: KinematicTree,
    q: np.ndarray,
    v: np.ndarray,
    tau: np.ndarray,
    gravity=(0.0, 0.0, 0.0),
    external=(),
) -> np.ndarray:
    """Joint acceleration from applied joint forces and external point forces."""
    q = tree.check_q(q)
    v = tree.check_v(v)
    tau = tree.check_v(np.asarray(tau, dtype=np.float64))
    _, _, S, I6, _ = _spatial(tree, q)
    zeros = np.zeros(tree.n)
    f_ext = _ext_to_spatial(tree, external)
    c = kernels.rne_kernel(
        tree.parent, S, I6, v, zeros, _gravity_accel(gravity), f_ext
    )
    F = kernels.crb_kernel(tree.parent, S, I6)
    G = (S @ F.T) * tree.ancestor_mask
    M = G + G.T - np.diag(np.diag(G))
    try:
        return np.linalg.solve(M, tau - c)
    except np.linalg.LinAlgError as exc:
        raise TreeError(
            f"singular joint-space inertia (n={tree.n}, cond unavailable): {exc}"
        ) from exc


def point_jacobian(tree: KinematicTree, q: np.ndarray, body: int, point) -> np.ndarray:
    """3 x n Jacobian of a world point attached to `body`.

    Columns for joints off the root-to-body path are zero. `point` is given
    in world coordinates at configuration q.
    """
    q = tree.check_q(q)
    if not 0 <= body < tree.n:
        raise TreeError(f"unknown body {body}")
    pt = np.asarray(point, dtype=np.float64).reshape(3)
    R, p = kernels.fk_kernel(
        tree.parent, tree.jtype, tree.axis, tree.loc_rot, tree.loc_pos, q
    )
    J = np.zeros((3, tree.n))
    j = body
    while j >= 0:
        u = R[j] @ tree.axis[j]
        if tree.jtype[j] == 0:
            J[:, j] = np.cross(u, pt - p[j])
        else:
            J[:, j] = u
        j = tree.parent[j]
    return J


def integrate_semi_implicit(
    tree: KinematicTree, state: ChainState, a: np.ndarray, dt: float
) -> ChainState:
    """Semi-implicit Euler step with joint-limit clamping.

    Velocity updates first and positions integrate with the new velocity;
    joints that leave their limits are clamped with velocity zeroed.
    """
    if dt <= 0.0 or not np.isfinite(dt):
        raise TreeError(f"dt must be positive and finite, got {dt}")
    a = tree.check_v(np.asarray(a, dtype=np.float64))
    v_new = state.v + a * dt
    q_new = state.q + v_new * dt
    lo, hi = tree.limit_lo, tree.limit_hi
    below = q_new < lo
    above = q_new > hi
    q_new = np.clip(q_new, lo, hi)
    v_new = np.where(below | above, 0.0, v_new)
    return ChainState(q=q_new, v=v_new)


def mechanical_energy(
    tree: KinematicTree, state: ChainState, gravity=(0.0, 0.0, 0.0)
) -> float:
    """Kinetic + gravitational + joint-spring potential energy."""
    q = tree.check_q(state.q)
    v = tree.check_v(state.v)
    _, _, S, I6, cw = _spatial(tree, q)
    v6 = kernels.body_velocities(tree.parent, S, v)
    kinetic = 0.5 * float(np.einsum("ni,nij,nj->", v6, I6, v6))
    g = np.asarray(gravity, dtype=np.float64).reshape(3)
    potential = -float(np.sum(tree.mass * (cw @ g)))
    spring = 0.5 * float(np.sum(tree.stiffness * (q - tree.rest) ** 2))
    return kinetic + potential + spring
