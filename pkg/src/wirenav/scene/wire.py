"""Serpentine guidewire as a kinematic tree.

The wire is a chain of short rigid capsule segments. Two actuated base
joints model the follower robot: a prismatic slide along the insertion
axis and a revolute roll about it. Every subsequent segment hangs off a
pitch/yaw universal pair of passive spring-loaded revolutes, so bending
costs elastic energy while the backbone stays inextensible. The distal
tip_segments joints get a softer spring and a yaw-plane precurve so the
relaxed tip is angled; rolling the base steers that curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dynamics import BodyNode, JointModel, KinematicTree, TreeError

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])

# Rotational inertia of the drive chuck gripping the wire, about the roll
# axis. A straight 0.45 mm wire has ~1e-10 kg*m^2 of roll inertia, which
# would demand absurd servo gains; the physical drive's rollers and motor
# dominate and keep the roll loop well conditioned.
CHUCK_ROLL_INERTIA = 2e-6


@dataclass(frozen=True)
class GuidewireSpec:
    """Geometry and elasticity of one guidewire build.

    Lengths in meters, stiffness in N*m/rad, damping in N*m*s/rad,
    density in kg/m^3. tip_precurve is the rest angle of each tip yaw
    joint, so the relaxed tip bends tip_segments * tip_precurve in total.
    """

    n_segments: int = 84
    segment_length: float = 6e-3
    radius: float = 0.45e-3
    # EI of a 0.45 mm nitinol core is ~2.4e-3 N*m^2, i.e. k = EI/L = 0.4
    # per 6 mm joint; we run at a quarter of that so the fastest bending
    # mode stays inside the integrator's stable band, while the chain's
    # short-wavelength buckling load 4k/L ~ 66 N still exceeds anything
    # the force-capped drive can push axially.
    body_stiffness: float = 0.1
    tip_stiffness: float = 0.01
    tip_segments: int = 8
    tip_precurve: float = math.radians(45.0) / 8.0
    damping: float = 4.9e-5
    density: float = 5.2e5

    def __post_init__(self):
        if int(self.n_segments) != self.n_segments or self.n_segments < 2:
            raise TreeError(f"n_segments must be an integer >= 2, got {self.n_segments}")
        if int(self.tip_segments) != self.tip_segments or self.tip_segments < 0:
            raise TreeError(f"tip_segments must be an integer >= 0, got {self.tip_segments}")
        if self.tip_segments >= self.n_segments:
            raise TreeError(
                f"tip_segments ({self.tip_segments}) must be < n_segments ({self.n_segments})"
            )
        if not self.tip_stiffness < self.body_stiffness:
            raise TreeError(
                f"tip_stiffness ({self.tip_stiffness}) must be < body_stiffness "
                f"({self.body_stiffness})"
            )
        for name in ("segment_length", "radius", "body_stiffness", "tip_stiffness",
                     "damping", "density"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0.0):
                raise TreeError(f"{name} must be a positive finite number, got {value}")
        if not np.isfinite(self.tip_precurve):
            raise TreeError(f"tip_precurve must be finite, got {self.tip_precurve}")

    @property
    def n_dof(self) -> int:
        return 2 + 2 * (self.n_segments - 1)

    @property
    def total_length(self) -> float:
        return self.n_segments * self.segment_length

    @property
    def segment_mass(self) -> float:
        return self.density * math.pi * self.radius**2 * self.segment_length

    @property
    def wire_mass(self) -> float:
        return self.n_segments * self.segment_mass


def _segment_inertia(spec: GuidewireSpec) -> np.ndarray:
    """Solid cylinder along +x about its own center of mass."""
    m, r, length = spec.segment_mass, spec.radius, spec.segment_length
    ixx = 0.5 * m * r * r
    iyy = m * (3.0 * r * r + length * length) / 12.0
    return np.diag([ixx, iyy, iyy])


def build_guidewire(
    spec: GuidewireSpec,
    base_rot: np.ndarray | None = None,
    base_pos: np.ndarray | None = None,
) -> KinematicTree:
    """Build the follower-robot + wire tree.

    Body 0 is the prismatic slide along local +x, body 1 the roll about
    the same axis; both actuated externally (zero spring). Bodies 2..:
    alternating pitch (+y) / yaw (+z) passive revolutes, one pair per
    inter-segment joint. Segment capsules live on body 1 and on every
    yaw body, running from the joint origin to +x*segment_length.

    base_rot/base_pos place the slide axis in the world; at q=0 the
    wire lies straight along the rotated +x with its proximal end at
    base_pos.
    """
    length = spec.segment_length
    seg_mass = spec.segment_mass
    seg_com = np.array([length / 2.0, 0.0, 0.0])
    seg_inertia = _segment_inertia(spec)

    # light drive sled; the axial load the wire sees is what accelerates
    # the wire itself, so keeping the carriage light keeps drive forces
    # close to that physical minimum
    carriage_mass = 5e-3
    chuck_inertia = np.diag([CHUCK_ROLL_INERTIA, CHUCK_ROLL_INERTIA, CHUCK_ROLL_INERTIA])

    slide_limit = (-0.02, 0.9 * spec.total_length)

    bodies = [
        BodyNode(
            parent=-1,
            joint=JointModel("prismatic", _X, limits=slide_limit),
            local_rot=np.eye(3) if base_rot is None else base_rot,
            local_pos=np.zeros(3) if base_pos is None else base_pos,
            mass=carriage_mass,
            com=np.zeros(3),
            inertia=np.diag([1e-6, 1e-6, 1e-6]),
        ),
        BodyNode(
            parent=0,
            joint=JointModel("revolute", _X),
            mass=seg_mass,
            com=seg_com,
            inertia=seg_inertia + chuck_inertia,
        ),
    ]

    n_tip = spec.tip_segments
    for seg in range(1, spec.n_segments):
        is_tip = seg >= spec.n_segments - n_tip
        k = spec.tip_stiffness if is_tip else spec.body_stiffness
        precurve = spec.tip_precurve if is_tip else 0.0
        parent = len(bodies) - 1
        # pitch body: massless hinge carrier at the distal end of the
        # previous segment (needs nonzero mass for the tree validator;
        # values small enough not to register against segment inertia)
        bodies.append(
            BodyNode(
                parent=parent,
                joint=JointModel("revolute", _Y, stiffness=k, damping=spec.damping),
                local_pos=np.array([length, 0.0, 0.0]),
                mass=1e-7,
                com=np.zeros(3),
                inertia=np.diag([1e-13, 1e-13, 1e-13]),
            )
        )
        bodies.append(
            BodyNode(
                parent=parent + 1,
                joint=JointModel(
                    "revolute",
                    _Z,
                    stiffness=k,
                    damping=spec.damping,
                    rest_position=precurve,
                ),
                mass=seg_mass,
                com=seg_com,
                inertia=seg_inertia,
            )
        )

    tree = KinematicTree(bodies)
    assert tree.n == spec.n_dof
    return tree


def capsule_bodies(spec: GuidewireSpec) -> np.ndarray:
    """Indices of the bodies that carry a wire capsule, proximal first."""
    return np.array([1] + [3 + 2 * k for k in range(spec.n_segments - 1)], dtype=np.int64)
