"""Oracle tests for the articulated-chain dynamics.

Each algorithm is checked against an independent formulation: trigonometric
forward kinematics for planar chains, a finite-difference Lagrangian for the
bias forces, inverse-dynamics columns for the mass matrix, and the textbook
closed-form equations for a double pendulum.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wirenav.dynamics import (
    BodyNode,
    ChainState,
    JointModel,
    KinematicTree,
    body_point,
    crb_mass_matrix,
    forward_dynamics,
    forward_kinematics,
    integrate_semi_implicit,
    inverse_dynamics,
    joint_torques,
    mechanical_energy,
    point_jacobian,
    rne_bias,
)
from wirenav.dynamics.tree import TreeError

Z = np.array([0.0, 0.0, 1.0])
GRAV = np.array([0.0, -9.81, 0.0])


def planar_arm(n_links=3, length=0.2, mass=0.7):
    """Chain of revolute-z joints with links along +x."""
    bodies = []
    for i in range(n_links):
        bodies.append(
            BodyNode(
                parent=i - 1,
                joint=JointModel(kind="revolute", axis=Z),
                local_pos=np.zeros(3) if i == 0 else np.array([length, 0.0, 0.0]),
                mass=mass,
                com=np.array([length / 2, 0.0, 0.0]),
                inertia=np.diag([1e-6, mass * length**2 / 12, mass * length**2 / 12 + 1e-6]),
            )
        )
    return KinematicTree(bodies)


def random_rotation(rng):
    A = rng.normal(size=(3, 3))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_tree(rng, n, chain=False, springy=False):
    bodies = []
    for i in range(n):
        parent = i - 1 if (chain or i == 0) else int(rng.integers(0, i))
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        kind = "revolute" if rng.random() < 0.7 else "prismatic"
        W = rng.normal(size=(3, 3)) * 0.05
        inertia = W @ W.T + np.eye(3) * 0.02
        joint = JointModel(
            kind=kind,
            axis=axis,
            stiffness=float(rng.uniform(0.0, 2.0)) if springy else 0.0,
            damping=0.0,
            rest_position=float(rng.normal(scale=0.2)) if springy else 0.0,
        )
        bodies.append(
            BodyNode(
                parent=parent,
                joint=joint,
                local_rot=random_rotation(rng),
                local_pos=rng.normal(scale=0.25, size=3),
                mass=float(rng.uniform(0.2, 2.0)),
                com=rng.normal(scale=0.08, size=3),
                inertia=inertia,
            )
        )
    return KinematicTree(bodies)


def random_state(rng, tree, vel_scale=1.0):
    q = rng.normal(scale=0.6, size=tree.n)
    v = rng.normal(scale=vel_scale, size=tree.n)
    return q, v


# ---------------------------------------------------------------- kinematics


def test_fk_matches_planar_trigonometry():
    tree = planar_arm(n_links=3, length=0.2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = rng.uniform(-np.pi, np.pi, size=3)
        cum = np.cumsum(q)
        x = 0.2 * np.sum(np.cos(cum))
        y = 0.2 * np.sum(np.sin(cum))
        tip = body_point(tree, q, 2, np.array([0.2, 0.0, 0.0]))
        np.testing.assert_allclose(tip, [x, y, 0.0], atol=1e-12)


def test_fk_zero_configuration_stacks_local_transforms():
    rng = np.random.default_rng(3)
    tree = random_tree(rng, 6, chain=True)
    R, p = forward_kinematics(tree, np.zeros(6))
    Racc = np.eye(3)
    pacc = np.zeros(3)
    for i in range(6):
        pacc = pacc + Racc @ tree.loc_pos[i]
        Racc = Racc @ tree.loc_rot[i]
        np.testing.assert_allclose(R[i], Racc, atol=1e-12)
        np.testing.assert_allclose(p[i], pacc, atol=1e-12)


def test_fk_prismatic_translates_along_rotated_axis():
    bodies = [
        BodyNode(parent=-1, joint=JointModel(kind="revolute", axis=Z)),
        BodyNode(
            parent=0,
            joint=JointModel(kind="prismatic", axis=np.array([1.0, 0.0, 0.0])),
            local_pos=np.array([0.5, 0.0, 0.0]),
        ),
    ]
    tree = KinematicTree(bodies)
    q = np.array([np.pi / 2, 0.3])
    _, p = forward_kinematics(tree, q)
    # joint 0 rotates the whole chain 90 degrees, slide then moves along +y
    np.testing.assert_allclose(p[1], [0.0, 0.8, 0.0], atol=1e-12)


def test_point_jacobian_matches_central_differences():
    rng = np.random.default_rng(7)
    for trial in range(6):
        tree = random_tree(rng, 7)
        q, _ = random_state(rng, tree)
        body = int(rng.integers(0, 7))
        local = rng.normal(scale=0.1, size=3)
        world_pt = body_point(tree, q, body, local)
        J = point_jacobian(tree, q, body, world_pt)
        h = 1e-6
        for j in range(tree.n):
            dq = np.zeros(tree.n)
            dq[j] = h
            fwd = body_point(tree, q + dq, body, local)
            bwd = body_point(tree, q - dq, body, local)
            np.testing.assert_allclose(J[:, j], (fwd - bwd) / (2 * h), atol=1e-6)


# ------------------------------------------------------------------ dynamics


def test_mass_matrix_matches_inverse_dynamics_columns():
    rng = np.random.default_rng(11)
    for trial in range(8):
        tree = random_tree(rng, 9)
        q, _ = random_state(rng, tree)
        M = crb_mass_matrix(tree, q)
        zero = np.zeros(tree.n)
        c0 = inverse_dynamics(tree, q, zero, zero)
        for j in range(tree.n):
            e = np.zeros(tree.n)
            e[j] = 1.0
            col = inverse_dynamics(tree, q, zero, e) - c0
            np.testing.assert_allclose(M[:, j], col, atol=1e-10)


def test_mass_matrix_symmetric_positive_definite():
    rng = np.random.default_rng(13)
    for trial in range(8):
        tree = random_tree(rng, 10)
        q, _ = random_state(rng, tree)
        M = crb_mass_matrix(tree, q)
        np.testing.assert_allclose(M, M.T, atol=1e-12)
        assert np.linalg.eigvalsh(M).min() > 0


def test_forward_inverse_round_trip():
    rng = np.random.default_rng(17)
    for trial in range(8):
        tree = random_tree(rng, 9)
        q, v = random_state(rng, tree)
        tau = rng.normal(size=tree.n)
        a = forward_dynamics(tree, q, v, tau, gravity=GRAV)
        tau_back = inverse_dynamics(tree, q, v, a, gravity=GRAV)
        np.testing.assert_allclose(tau_back, tau, atol=1e-8)


def test_bias_matches_finite_difference_lagrangian():
    # c(q, v) must equal Mdot v - dT/dq + dU/dq with T = v' M(q) v / 2.
    rng = np.random.default_rng(19)
    h = 1e-5
    for trial in range(4):
        tree = random_tree(rng, 5)
        q, v = random_state(rng, tree, vel_scale=0.8)
        c = rne_bias(tree, q, v, gravity=GRAV)

        n = tree.n
        dM = np.empty((n, n, n))
        dU = np.empty(n)
        for k in range(n):
            dq = np.zeros(n)
            dq[k] = h
            Mp = crb_mass_matrix(tree, q + dq)
            Mm = crb_mass_matrix(tree, q - dq)
            dM[k] = (Mp - Mm) / (2 * h)
            Up = mechanical_energy(tree, ChainState(q + dq, np.zeros(n)), GRAV)
            Um = mechanical_energy(tree, ChainState(q - dq, np.zeros(n)), GRAV)
            dU[k] = (Up - Um) / (2 * h)
        Mdot = np.einsum("kij,k->ij", dM, v)
        dT = 0.5 * np.array([v @ dM[k] @ v for k in range(n)])
        np.testing.assert_allclose(c, Mdot @ v - dT + dU, atol=1e-6)


def test_double_pendulum_closed_form():
    m1, m2 = 1.3, 0.7
    l1 = 0.25
    c1, c2 = 0.11, 0.16
    I1, I2 = 4e-3, 2.5e-3
    small = 1e-7
    bodies = [
        BodyNode(
            parent=-1,
            joint=JointModel(kind="revolute", axis=Z),
            mass=m1,
            com=np.array([c1, 0.0, 0.0]),
            inertia=np.diag([small, small, I1]),
        ),
        BodyNode(
            parent=0,
            joint=JointModel(kind="revolute", axis=Z),
            local_pos=np.array([l1, 0.0, 0.0]),
            mass=m2,
            com=np.array([c2, 0.0, 0.0]),
            inertia=np.diag([small, small, I2]),
        ),
    ]
    tree = KinematicTree(bodies)
    g = 9.81

    A = I1 + m1 * c1**2 + m2 * l1**2
    B = I2 + m2 * c2**2
    D = m2 * l1 * c2

    rng = np.random.default_rng(23)
    for trial in range(25):
        q = rng.uniform(-np.pi, np.pi, size=2)
        v = rng.normal(scale=2.0, size=2)
        tau = rng.normal(size=2)
        s2, co2 = np.sin(q[1]), np.cos(q[1])
        M = np.array([[A + B + 2 * D * co2, B + D * co2], [B + D * co2, B]])
        bias = np.array(
            [
                -D * s2 * (2 * v[0] * v[1] + v[1] ** 2)
                + g * (m1 * c1 * np.cos(q[0]) + m2 * (l1 * np.cos(q[0]) + c2 * np.cos(q[0] + q[1]))),
                D * s2 * v[0] ** 2 + g * m2 * c2 * np.cos(q[0] + q[1]),
            ]
        )
        a_ref = np.linalg.solve(M, tau - bias)
        a = forward_dynamics(tree, q, v, tau, gravity=GRAV)
        np.testing.assert_allclose(a, a_ref, atol=1e-8)


def test_external_point_force_enters_through_jacobian():
    rng = np.random.default_rng(29)
    tree = random_tree(rng, 8)
    q, v = random_state(rng, tree)
    body = 5
    local = np.array([0.08, -0.02, 0.05])
    pt = body_point(tree, q, body, local)
    f = np.array([0.4, -1.1, 0.7])

    a_free = forward_dynamics(tree, q, v, np.zeros(tree.n), gravity=GRAV)
    a_push = forward_dynamics(
        tree, q, v, np.zeros(tree.n), gravity=GRAV, external=[(body, pt, f)]
    )
    M = crb_mass_matrix(tree, q)
    J = point_jacobian(tree, q, body, pt)
    np.testing.assert_allclose(M @ (a_push - a_free), J.T @ f, atol=1e-9)

    # power balance: generalized force J^T f delivers the same power as f
    # acting on the point velocity J v
    np.testing.assert_allclose((J.T @ f) @ v, f @ (J @ v), atol=1e-9)

    # inverse dynamics sees the same force with opposite sign
    tau_with = inverse_dynamics(tree, q, v, a_free, gravity=GRAV, external=[(body, pt, f)])
    tau_without = inverse_dynamics(tree, q, v, a_free, gravity=GRAV)
    np.testing.assert_allclose(tau_without - tau_with, J.T @ f, atol=1e-9)


def test_static_hold_torque_of_horizontal_pendulum():
    m, c = 0.9, 0.14
    tree = KinematicTree(
        [
            BodyNode(
                parent=-1,
                joint=JointModel(kind="revolute", axis=Z),
                mass=m,
                com=np.array([c, 0.0, 0.0]),
                inertia=np.eye(3) * 1e-4,
            )
        ]
    )
    tau = inverse_dynamics(tree, np.zeros(1), np.zeros(1), np.zeros(1), gravity=GRAV)
    np.testing.assert_allclose(tau, [m * 9.81 * c], atol=1e-12)


def test_joint_spring_torque_pulls_toward_rest():
    tree = KinematicTree(
        [
            BodyNode(
                parent=-1,
                joint=JointModel(kind="revolute", axis=Z, stiffness=2.0, damping=0.5, rest_position=0.1),
            )
        ]
    )
    tau = joint_torques(tree, np.array([0.3]), np.array([1.0]))
    np.testing.assert_allclose(tau, [-2.0 * 0.2 - 0.5 * 1.0], atol=1e-12)


# --------------------------------------------------------------- integration


def test_semi_implicit_updates_position_with_new_velocity():
    tree = planar_arm(1)
    state = ChainState(q=np.array([0.2]), v=np.array([0.5]))
    nxt = integrate_semi_implicit(tree, state, np.array([2.0]), 0.01)
    v_new = 0.5 + 2.0 * 0.01
    np.testing.assert_allclose(nxt.v, [v_new], atol=1e-15)
    np.testing.assert_allclose(nxt.q, [0.2 + v_new * 0.01], atol=1e-15)


def test_joint_limit_clamps_position_and_zeroes_velocity():
    bodies = [
        BodyNode(
            parent=-1,
            joint=JointModel(kind="prismatic", axis=np.array([1.0, 0.0, 0.0]), limits=(-0.1, 0.1)),
        )
    ]
    tree = KinematicTree(bodies)
    state = ChainState(q=np.array([0.099]), v=np.array([1.0]))
    nxt = integrate_semi_implicit(tree, state, np.zeros(1), 0.01)
    np.testing.assert_allclose(nxt.q, [0.1])
    np.testing.assert_allclose(nxt.v, [0.0])


def energy_test_chain():
    """Undamped springy 3-link chain for the long-run conservation check.

    Link rotational inertia is chosen to dominate the configuration-dependent
    coupling terms of M(q); with slender links the integrator's energy error
    grows secularly (first order in dt) instead of staying bounded.
    """
    bodies = []
    for i in range(3):
        bodies.append(
            BodyNode(
                parent=i - 1,
                joint=JointModel(kind="revolute", axis=Z, stiffness=0.2, damping=0.0),
                local_pos=np.zeros(3) if i == 0 else np.array([0.2, 0.0, 0.0]),
                mass=0.5,
                com=np.array([0.1, 0.0, 0.0]),
                inertia=np.diag([1e-5, 0.1, 0.1]),
            )
        )
    return KinematicTree(bodies)


def test_gravity_free_chain_conserves_energy_within_one_percent():
    # Undamped springy chain, no gravity or applied torque: kinetic + spring
    # energy must hold to 1% over 10^4 steps at dt = 2 ms.
    tree = energy_test_chain()
    state = ChainState(q=np.array([0.3, -0.5, 0.4]), v=np.array([0.2, 0.0, -0.3]))
    e0 = mechanical_energy(tree, state)
    dt = 2e-3
    worst = 0.0
    for step in range(10_000):
        tau = joint_torques(tree, state.q, state.v)
        a = forward_dynamics(tree, state.q, state.v, tau)
        state = integrate_semi_implicit(tree, state, a, dt)
        if step % 100 == 99:
            worst = max(worst, abs(mechanical_energy(tree, state) - e0))
    assert worst / abs(e0) < 0.01, f"energy drifted {worst / abs(e0):.3%}"


def test_spring_oscillator_energy_bounded_over_long_run():
    # Single undamped prismatic spring DOF at dt = period/100 for 10^5 steps:
    # energy error stays bounded and does not grow between halves of the run.
    k, m = 4.0, 0.25
    omega = np.sqrt(k / m)
    dt = (2 * np.pi / omega) / 100.0
    tree = KinematicTree(
        [
            BodyNode(
                parent=-1,
                joint=JointModel(kind="prismatic", axis=np.array([1.0, 0.0, 0.0]), stiffness=k),
                mass=m,
                inertia=np.eye(3) * 1e-4,
            )
        ]
    )
    state = ChainState(q=np.array([0.1]), v=np.zeros(1))
    e0 = mechanical_energy(tree, state)
    errs = np.empty(100_000)
    for step in range(100_000):
        tau = joint_torques(tree, state.q, state.v)
        a = forward_dynamics(tree, state.q, state.v, tau)
        state = integrate_semi_implicit(tree, state, a, dt)
        errs[step] = abs(mechanical_energy(tree, state) - e0)
    rel = errs / abs(e0)
    assert rel.max() < 0.1, f"energy error {rel.max():.3f} too large"
    first, second = rel[:50_000].max(), rel[50_000:].max()
    assert second <= first * 1.05, "energy error grew over the run"


# ------------------------------------------------------------- construction


def test_tree_rejects_bad_inputs():
    with pytest.raises(TreeError):
        JointModel(kind="revolute", axis=np.array([1.0, 1.0, 0.0]))  # not unit
    with pytest.raises(TreeError):
        JointModel(kind="revolute", axis=Z, stiffness=-1.0)
    with pytest.raises(TreeError):
        JointModel(kind="revolute", axis=Z, limits=(1.0, -1.0))
    with pytest.raises(TreeError):
        BodyNode(parent=-1, joint=JointModel(kind="revolute", axis=Z), mass=0.0)
    with pytest.raises(TreeError):
        BodyNode(
            parent=-1,
            joint=JointModel(kind="revolute", axis=Z),
            inertia=np.diag([1.0, 1.0, -0.1]),
        )
    with pytest.raises(TreeError):
        # child listed before its parent
        KinematicTree(
            [
                BodyNode(parent=1, joint=JointModel(kind="revolute", axis=Z)),
                BodyNode(parent=-1, joint=JointModel(kind="revolute", axis=Z)),
            ]
        )
    tree = planar_arm(2)
    with pytest.raises(TreeError):
        tree.check_q(np.zeros(3))
    with pytest.raises(TreeError):
        tree.check_q(np.array([0.0, np.nan]))
    with pytest.raises(TreeError):
        point_jacobian(tree, np.zeros(2), 5, np.zeros(3))


# ---------------------------------------------------------------- properties


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_round_trip_property_random_trees(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 12))
    tree = random_tree(rng, n, springy=True)
    q, v = random_state(rng, tree)
    tau = rng.normal(size=n)
    a = forward_dynamics(tree, q, v, tau, gravity=GRAV)
    np.testing.assert_allclose(
        inverse_dynamics(tree, q, v, a, gravity=GRAV), tau, atol=1e-7
    )
    M = crb_mass_matrix(tree, q)
    np.testing.assert_allclose(M, M.T, atol=1e-11)
    assert np.linalg.eigvalsh(M).min() > 0
    # at rest with no gravity there is nothing to bias
    np.testing.assert_allclose(rne_bias(tree, q, np.zeros(n)), 0.0, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_kinetic_energy_equals_joint_space_form(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 10))
    tree = random_tree(rng, n)
    q, v = random_state(rng, tree)
    e = mechanical_energy(tree, ChainState(q, v)) - mechanical_energy(
        tree, ChainState(q, np.zeros(n))
    )
    M = crb_mass_matrix(tree, q)
    np.testing.assert_allclose(e, 0.5 * v @ M @ v, atol=1e-10)
