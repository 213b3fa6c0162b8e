"""Scene assembly and the control-step integrator.

A Simulation owns a guidewire tree placed at the insertion pose of a
vessel hull set, plus the PD drive that chases the two action-driven
targets (slide, roll). One control step advances a fixed number of
physics substeps; each substep runs forward kinematics once and reuses
it for contact detection, contact forces, bias forces, the mass matrix,
and the velocity solve. Joint springs, joint dampers, and the fluid
drag enter that solve implicitly, so the stiff bending modes of a long
fine chain cannot destabilize the update at practical substep sizes;
everything else (contacts, servo, coriolis) is explicit.

The drive targets ramp linearly across the substeps of a control step
and the servo feeds the ramp rate forward, so a constant action tracks
with near-zero lag instead of trailing by kd/kp.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..collision import (
    Contact,
    ContactParams,
    HullSet,
    detect_contacts_raw,
    load_hull_set,
)
from ..collision.narrowphase import _tangent_frames_batch
from ..dynamics import ChainState, KinematicTree
from ..dynamics import kernels as _k
from .config import ConfigError, SceneConfig
from .wire import GuidewireSpec, build_guidewire, capsule_bodies

# servo natural frequency, rad/s; fast enough to settle inside a few
# control steps, soft enough that its force transients stay under the
# drive saturation most of the time
_SERVO_OMEGA = 110.0


class SimulationFault(RuntimeError):
    """Physics blew up; carries the last finite state for post-mortems."""

    def __init__(self, message: str, state: ChainState, step_count: int):
        super().__init__(message)
        self.state = state
        self.step_count = step_count


@dataclass(eq=False)
class Simulation:
    """Mutable simulation state. Single-threaded, exclusively owned.

    Identity equality/hash: renderers key per-scene caches by instance."""

    tree: KinematicTree
    state: ChainState
    hullset: Optional[HullSet]
    config: SceneConfig
    drive_targets: np.ndarray = field(default_factory=lambda: np.zeros(2))
    step_count: int = 0
    last_contacts: list = field(default_factory=list)
    last_action_clamped: bool = False

    def __post_init__(self):
        spec = self.config.guidewire
        self._caps_bodies = capsule_bodies(spec)
        self._caps_radius = np.full(self._caps_bodies.shape[0], spec.radius)
        self._seg_axis = np.array([spec.segment_length, 0.0, 0.0])
        self._dt_sub = self.config.control_dt / self.config.substeps
        self._a0 = np.zeros(6)
        self._a0[3:] = -np.asarray(self.config.gravity, dtype=np.float64)

        # critically damped PD gains against the mass the joint actually moves
        m_slide = float(np.sum(self.tree.mass))
        kp_s = m_slide * _SERVO_OMEGA**2
        i_roll = float(self.tree.inertia[1][0, 0])
        kp_r = i_roll * _SERVO_OMEGA**2
        self._kp = np.array([kp_s, kp_r])
        self._kd = 2.0 * np.sqrt(self._kp * np.array([m_slide, i_roll]))
        self._drive_limit = np.array(
            [self.config.drive_force_max, self.config.drive_torque_max]
        )
        # feedforward rate carried across steps so velocity demands ramp
        # instead of jumping when the action changes
        self._ff_rate = np.zeros(2)

        # constant pieces of the implicit substep system matrix
        self._diag = np.arange(self.tree.n)
        self._impl_diag = (
            self._dt_sub * self.tree.damping
            + self._dt_sub**2 * self.tree.stiffness
        )

        # introducer channel: lateral spring/damper toward the feed axis,
        # blended in over the last centimeter before the insertion plane.
        # Spring force is explicit; its velocity coupling joins the implicit
        # solve like the contact normals, so no step-size cap applies.
        self._sheath_k = self.config.sheath_stiffness
        self._sheath_c = 2.0 * math.sqrt(self._sheath_k * spec.segment_mass)
        self._sheath_dir = self.config.insertion_rot @ np.array([1.0, 0.0, 0.0])
        # two lateral unit directions spanning the channel cross-section
        self._sheath_lat = _tangent_frames_batch(self._sheath_dir[None])[0, :2]
        self._sheath_ramp = 0.01

        self._initial_q = self.state.q.copy()
        self._initial_v = self.state.v.copy()

    @property
    def n_dof(self) -> int:
        return self.tree.n

    def reset(self):
        """Return to the as-built state with zeroed drives and counters."""
        self.state = ChainState(q=self._initial_q.copy(), v=self._initial_v.copy())
        self.drive_targets = self.state.q[:2].copy()
        self._ff_rate = np.zeros(2)
        self.step_count = 0
        self.last_contacts = []
        self.last_action_clamped = False

    def _fk(self, q: np.ndarray):
        t = self.tree
        return _k.fk_kernel(t.parent, t.jtype, t.axis, t.loc_rot, t.loc_pos, q)

    def _capsule_endpoints(self, R: np.ndarray, p: np.ndarray):
        idx = self._caps_bodies
        P0 = p[idx]
        P1 = P0 + R[idx] @ self._seg_axis
        return P0, P1

    def tip_position(self, q: np.ndarray | None = None) -> np.ndarray:
        """Center of the distal cap of the last segment."""
        R, p = self._fk(self.state.q if q is None else q)
        return p[-1] + R[-1] @ self._seg_axis

    def wire_capsules(self):
        """(P0, P1, radii) arrays of the wire segments, for rendering."""
        R, p = self._fk(self.state.q)
        P0, P1 = self._capsule_endpoints(R, p)
        return P0, P1, self._caps_radius

    def vessel_capsules(self):
        """(P0, P1, radii) arrays of the lumen polylines, for rendering."""
        chains = self.config.lumen_chains
        if not chains:
            empty = np.zeros((0, 3))
            return empty, empty.copy(), np.zeros(0)
        P0, P1, rad = [], [], []
        for pts, radius in chains:
            pts = np.asarray(pts)
            P0.append(pts[:-1])
            P1.append(pts[1:])
            rad.append(np.full(pts.shape[0] - 1, float(radius)))
        return np.vstack(P0), np.vstack(P1), np.concatenate(rad)

    def scene_bounds(self):
        """World AABB that should stay in view: hulls if present, else wire."""
        if self.hullset is not None:
            return (
                self.hullset.aabbs[:, 0].min(axis=0),
                self.hullset.aabbs[:, 1].max(axis=0),
            )
        P0, P1, radii = self.wire_capsules()
        pad = radii.max() if radii.size else 0.0
        lo = np.minimum(P0.min(axis=0), P1.min(axis=0)) - pad
        hi = np.maximum(P0.max(axis=0), P1.max(axis=0)) + pad
        return lo, hi

    def total_energy(self) -> float:
        """Tree mechanical energy plus the energy stored in the drive servo
        springs; the passivity invariant is stated against this sum."""
        from ..dynamics import mechanical_energy

        base = mechanical_energy(self.tree, self.state, self.config.gravity)
        err = self.drive_targets - self.state.q[:2]
        return base + 0.5 * float(self._kp @ err**2)


def build_scene(
    config: SceneConfig, hullset: Optional[HullSet] = None, settle_steps: int = 0
) -> Simulation:
    """Assemble a Simulation from a config, loading hulls when needed.

    Passing hullset skips the file load (phantoms generated in memory).
    Every target must sit inside the hull AABB, inflated by the contact
    margin, or the build fails naming the offender. settle_steps > 0 runs
    that many zero-action control steps and freezes the result as the
    initial state, so episodes begin from static equilibrium instead of
    the as-built pose.
    """
    if hullset is None and config.hullset_path is not None:
        if not os.path.exists(config.hullset_path):
            raise ConfigError(f"hullset file not found: {config.hullset_path!r}")
        with open(config.hullset_path, "r", encoding="utf-8") as fh:
            hullset = load_hull_set(fh.read())

    if hullset is not None:
        lo = hullset.aabbs[:, 0].min(axis=0) - config.contact.margin
        hi = hullset.aabbs[:, 1].max(axis=0) + config.contact.margin
        for name, pos in config.targets.items():
            if np.any(pos < lo) or np.any(pos > hi):
                raise ConfigError(
                    f"target {name!r} at {pos.tolist()} lies outside the hull "
                    f"AABB {lo.tolist()}..{hi.tolist()}"
                )

    spec = config.guidewire
    rot = config.insertion_rot
    # at q=0 the tip sits exactly at the insertion origin; advancing the
    # slide feeds wire through it
    base_pos = config.insertion_origin - rot @ np.array(
        [spec.total_length, 0.0, 0.0]
    )
    tree = build_guidewire(spec, base_rot=rot, base_pos=base_pos)
    state = tree.rest_state()
    if config.insertion_depth > 0.0:
        # start with wire already fed in, the precurved run held straight
        # as an introducer would deliver it; it relaxes against the walls
        # over the settle steps
        q = state.q.copy()
        q[0] = config.insertion_depth
        q[tree.rest != 0.0] = 0.0
        state = ChainState(q=q, v=np.zeros_like(state.v))
    sim = Simulation(
        tree=tree,
        state=state,
        hullset=hullset,
        config=config,
        drive_targets=state.q[:2].copy(),
    )
    if settle_steps:
        zero = np.zeros(2)
        for _ in range(settle_steps):
            sim_step(sim, zero)
        sim.state = ChainState(q=sim.state.q.copy(), v=np.zeros(sim.tree.n))
        sim._initial_q = sim.state.q.copy()
        sim._initial_v = sim.state.v.copy()
        sim.reset()
    return sim


def apply_action(sim: Simulation, action) -> tuple[np.ndarray, bool]:
    """Advance the drive targets by a clamped 2-vector action.

    Returns (drive_targets, clamped) where clamped reports whether any
    component fell outside [-1, 1] and was clipped.
    """
    a = np.asarray(action, dtype=np.float64).reshape(-1)
    if a.shape[0] != 2:
        raise ValueError(f"action must have 2 components, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("action must be finite")
    clamped = bool(np.any(a < -1.0) or np.any(a > 1.0))
    sim.last_action_clamped = clamped
    a = np.clip(a, -1.0, 1.0)
    sim.drive_targets = sim.drive_targets + np.array(
        [a[0] * sim.config.v_max, a[1] * sim.config.omega_max]
    )
    # don't let the slide target wind up beyond the physical rails
    sim.drive_targets[0] = float(
        np.clip(sim.drive_targets[0], sim.tree.limit_lo[0], sim.tree.limit_hi[0])
    )
    return sim.drive_targets, clamped


def sim_step(sim: Simulation, action):
    """One control step: apply the action, run the physics substeps.

    Returns (sim, contacts, tip_position) where contacts is the contact
    set of the final substep with forces filled in. Deterministic given
    (sim state, action). Raises SimulationFault if the state leaves the
    finite range, carrying the last valid state.
    """
    tree = sim.tree
    params = sim.config.contact
    prev_targets = sim.drive_targets.copy()
    new_targets, _ = apply_action(sim, action)
    rate_cmd = (new_targets - prev_targets) / sim.config.control_dt
    rate_prev = sim._ff_rate

    n = tree.n
    sub = sim.config.substeps
    dt = sim._dt_sub
    alpha = sim.config.fluid_damping
    q = sim.state.q.copy()
    v = sim.state.v.copy()
    diag = sim._diag
    f_ext = np.zeros((n, 6))
    raw = None

    for i in range(sub):
        frac = (i + 1.0) / sub
        target = prev_targets + (new_targets - prev_targets) * frac
        # velocity feedforward ramps from last step's rate to the commanded
        # rate so an action change never demands a velocity discontinuity
        rate = rate_prev + (rate_cmd - rate_prev) * frac

        R, p = _k.fk_kernel(tree.parent, tree.jtype, tree.axis, tree.loc_rot,
                            tree.loc_pos, q)
        S, I6, _ = _k.spatial_kernel(R, p, tree.jtype, tree.axis, tree.mass,
                                     tree.com, tree.inertia)

        f_ext[:] = 0.0
        raw = None
        v6 = None
        cols = []
        col_w = []
        if sim.hullset is not None or sim._sheath_k > 0.0:
            P0, P1 = sim._capsule_endpoints(R, p)
        if sim.hullset is not None:
            ci, hi, depth, pos, nrm = detect_contacts_raw(
                P0, P1, sim._caps_radius, sim.hullset, params
            )
            if ci.size:
                v6 = _k.body_velocities(tree.parent, S, v)
                b = sim._caps_bodies[ci]
                v_pt = v6[b, 3:] + _cross_rows(v6[b, :3], pos)
                f = _contact_forces_batch(depth, nrm, v_pt, params)
                raw = (b, hi, depth, pos, nrm, f)
                pen = depth > 0.0
                if pen.any():
                    # normal spring (explicit value) plus friction from the
                    # full law; the velocity-dependent normal part is folded
                    # into the implicit solve below, because k_d or k_n
                    # through a segment-length lever onto a light tip joint
                    # overwhelms an explicit update
                    b_p = b[pen]
                    n_p = nrm[pen]
                    x_p = pos[pen]
                    f_imp = params.k_n * depth[pen, None] * n_p + _friction_batch(
                        depth[pen], n_p, v_pt[pen], params
                    )
                    _accum_wrench(f_ext, b_p, x_p, f_imp)
                    cols.append(_point_jacobian(S, tree, b_p, x_p, n_p))
                    col_w.append(
                        np.full(b_p.size, dt * (params.k_d + dt * params.k_n))
                    )
        if sim._sheath_k > 0.0:
            mid = 0.5 * (P0 + P1)
            rel = mid - sim.config.insertion_origin
            axial = rel @ sim._sheath_dir
            weight = np.clip(-axial / sim._sheath_ramp, 0.0, 1.0)
            hold = np.nonzero(weight > 0.0)[0]
            if hold.size:
                b = sim._caps_bodies[hold]
                pts = mid[hold]
                lat = rel[hold] - axial[hold, None] * sim._sheath_dir
                f = -(weight[hold] * sim._sheath_k)[:, None] * lat
                _accum_wrench(f_ext, b, pts, f)
                w_s = dt * weight[hold] * (sim._sheath_c + dt * sim._sheath_k)
                for d in sim._sheath_lat:
                    cols.append(
                        _point_jacobian(S, tree, b, pts, np.broadcast_to(d, pts.shape))
                    )
                    col_w.append(w_s)

        tau = -tree.stiffness * (q - tree.rest)
        drive = sim._kp * (target - q[:2]) + sim._kd * (rate - v[:2])
        tau[:2] += np.clip(drive, -sim._drive_limit, sim._drive_limit)

        bias = _k.rne_kernel(tree.parent, S, I6, v, np.zeros(n), sim._a0, f_ext)
        F = _k.crb_kernel(tree.parent, S, I6)
        G = (S @ F.T) * tree.ancestor_mask
        M = G + G.T
        M[diag, diag] -= G[diag, diag]
        # joint springs/dampers and the drag act implicitly: the chain's
        # bending zigzag modes run near 8e3 rad/s against near-zero modal
        # mass, far beyond what an explicit update survives at this dt.
        # (M(1+a*dt) + dt*C + dt^2*K) v' = M v + dt*(tau - bias) stays SPD
        # and unconditionally stable for those diagonal terms.
        rhs = M @ v
        rhs += dt * (tau - bias)
        M *= 1.0 + alpha * dt
        M[diag, diag] += sim._impl_diag
        if cols:
            G_all = np.hstack(cols)
            w_all = np.concatenate(col_w)
            M += (G_all * w_all) @ G_all.T
        try:
            v_new = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise SimulationFault(
                f"singular system matrix at step {sim.step_count} substep {i}: {exc}",
                ChainState(q=q, v=v),
                sim.step_count,
            ) from exc

        q_new = q + v_new * dt
        below = q_new < tree.limit_lo
        above = q_new > tree.limit_hi
        q_new = np.clip(q_new, tree.limit_lo, tree.limit_hi)
        v_new = np.where(below | above, 0.0, v_new)

        if not (np.isfinite(q_new).all() and np.isfinite(v_new).all()):
            raise SimulationFault(
                f"non-finite state at step {sim.step_count} substep {i}",
                ChainState(q=q, v=v),
                sim.step_count,
            )
        q, v = q_new, v_new

    contacts = []
    if raw is not None:
        bodies, hulls, depth, pos, nrm, f = raw
        frames = _tangent_frames_batch(nrm)
        f_loc = np.einsum("kij,kj->ki", frames, f)
        for k in range(bodies.size):
            contacts.append(
                Contact(
                    position=pos[k].copy(),
                    normal=nrm[k].copy(),
                    depth=float(depth[k]),
                    frame=frames[k],
                    body=int(bodies[k]),
                    hull=int(hulls[k]),
                    force_local=f_loc[k],
                )
            )

    sim.state = ChainState(q=q, v=v)
    sim._ff_rate = rate_cmd.copy()
    sim.step_count += 1
    sim.last_contacts = contacts
    R, p = sim._fk(q)
    tip = p[-1] + R[-1] @ sim._seg_axis
    return sim, contacts, tip


def _cross_rows(a, b):
    """Row-wise cross product without np.cross's axis gymnastics."""
    out = np.empty_like(a)
    out[:, 0] = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    out[:, 1] = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return out


def _point_jacobian(S, tree, bodies, points, dirs):
    """Generalized directions for point velocities: column c maps joint
    rates to d(dirs[c] . v_point[c])/dv for the point points[c] on body
    bodies[c]. These columns carry velocity-coupled forces into the
    implicit solve."""
    G = S[:, 3:] @ dirs.T + S[:, :3] @ _cross_rows(points, dirs).T
    G *= tree.ancestor_mask[:, bodies]
    return G


def _accum_wrench(f_ext, bodies, points, forces):
    """Accumulate point forces into per-body (torque, force) rows.

    bincount beats np.add.at by an order of magnitude at these sizes.
    """
    n = f_ext.shape[0]
    trq = _cross_rows(points, forces)
    for d in range(3):
        f_ext[:, d] += np.bincount(bodies, weights=trq[:, d], minlength=n)
        f_ext[:, 3 + d] += np.bincount(bodies, weights=forces[:, d], minlength=n)


def _contact_forces_batch(depth, nrm, v_pt, params):
    """World-frame contact forces for rows of (depth, normal, velocity).

    Same law as collision.contact_force: penalty normal force with damping,
    friction clamped to the cone, identically zero at zero depth.
    """
    v_n = np.einsum("ij,ij->i", v_pt, nrm)
    f_z = np.maximum(0.0, params.k_n * depth - params.k_d * v_n)
    f_z[depth <= 0.0] = 0.0
    return f_z[:, None] * nrm + _tangential_batch(f_z, nrm, v_pt, v_n, params)


def _friction_batch(depth, nrm, v_pt, params):
    """Just the friction part of the contact law, cone-clamped."""
    v_n = np.einsum("ij,ij->i", v_pt, nrm)
    f_z = np.maximum(0.0, params.k_n * depth - params.k_d * v_n)
    f_z[depth <= 0.0] = 0.0
    return _tangential_batch(f_z, nrm, v_pt, v_n, params)


def _tangential_batch(f_z, nrm, v_pt, v_n, params):
    v_t = v_pt - v_n[:, None] * nrm
    vt = np.sqrt(np.einsum("ij,ij->i", v_t, v_t))
    mag = np.minimum(params.k_n * vt, params.mu * f_z)
    scale = np.where(vt > 1e-12, mag / np.maximum(vt, 1e-300), 0.0)
    return -scale[:, None] * v_t
