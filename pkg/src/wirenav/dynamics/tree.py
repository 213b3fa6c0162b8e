"""Articulated-tree description: 1-DOF joints, rigid bodies, flat state vectors.

A tree is an ordered list of bodies, each attached to its parent by a single
revolute or prismatic joint.  Body i's world frame is

    T_i = T_parent(i) * local_transform_i * D_i(q_i)

where D_i is a rotation about (revolute) or a translation along (prismatic)
the joint axis, expressed in the frame reached after local_transform_i.
When local_transform carries no rotation that frame shares the parent's
orientation, so axes read as parent-frame vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REVOLUTE = 0
PRISMATIC = 1

_KINDS = {"revolute": REVOLUTE, "prismatic": PRISMATIC}


class TreeError(ValueError):
    """Raised when a joint, body, or tree violates a structural invariant."""


@dataclass(frozen=True)
class JointModel:
    """One degree of freedom plus its passive spring/damper parameters."""

    kind: str
    axis: np.ndarray
    stiffness: float = 0.0  # N*m/rad or N/m
    damping: float = 0.0  # N*m*s/rad or N*s/m
    rest_position: float = 0.0  # rad or m
    limits: tuple[float, float] = (-1e9, 1e9)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise TreeError(f"unknown joint kind {self.kind!r}")
        axis = np.asarray(self.axis, dtype=np.float64).reshape(3)
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1.0) > 1e-12:
            raise TreeError(f"joint axis must be unit length, |axis|={norm!r}")
        object.__setattr__(self, "axis", axis)
        if self.stiffness < 0.0:
            raise TreeError("joint stiffness must be >= 0")
        if self.damping < 0.0:
            raise TreeError("joint damping must be >= 0")
        lo, hi = self.limits
        if not lo <= hi:
            raise TreeError(f"joint limits reversed: {self.limits}")

    @property
    def kind_code(self) -> int:
        return _KINDS[self.kind]


@dataclass(frozen=True)
class BodyNode:
    """Rigid body attached to its parent by one joint.

    local_rot/local_pos place the joint frame in the parent frame; mass
    properties are expressed in the body frame (after joint displacement).
    """

    parent: int
    joint: JointModel
    local_rot: np.ndarray = field(default_factory=lambda: np.eye(3))
    local_pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mass: float = 1.0
    com: np.ndarray = field(default_factory=lambda: np.zeros(3))
    inertia: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        R = np.asarray(self.local_rot, dtype=np.float64).reshape(3, 3)
        if np.linalg.norm(R @ R.T - np.eye(3)) > 1e-9:
            raise TreeError("local_rot is not a rotation matrix")
        object.__setattr__(self, "local_rot", R)
        object.__setattr__(
            self, "local_pos", np.asarray(self.local_pos, dtype=np.float64).reshape(3)
        )
        object.__setattr__(
            self, "com", np.asarray(self.com, dtype=np.float64).reshape(3)
        )
        I = np.asarray(self.inertia, dtype=np.float64).reshape(3, 3)
        if np.linalg.norm(I - I.T) > 1e-12 * max(1.0, np.linalg.norm(I)):
            raise TreeError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(I) <= 0.0):
            raise TreeError("inertia must be positive definite")
        object.__setattr__(self, "inertia", I)
        if self.mass <= 0.0:
            raise TreeError("mass must be > 0")


class KinematicTree:
    """Immutable articulated tree with flat per-body arrays for the kernels.

    Bodies must be topologically ordered (parent index < own index, root
    parent = -1).  n equals the number of bodies: one joint per body.
    """

    def __init__(self, bodies: list[BodyNode]):
        if not bodies:
            raise TreeError("tree needs at least one body")
        n = len(bodies)
        for i, b in enumerate(bodies):
            if not -1 <= b.parent < i:
                raise TreeError(
                    f"body {i} parent {b.parent} breaks topological order"
                )
        self.bodies = tuple(bodies)
        self.n = n

        self.parent = np.array([b.parent for b in bodies], dtype=np.int64)
        self.jtype = np.array([b.joint.kind_code for b in bodies], dtype=np.int64)
        self.axis = np.stack([b.joint.axis for b in bodies])
        self.loc_rot = np.stack([b.local_rot for b in bodies])
        self.loc_pos = np.stack([b.local_pos for b in bodies])
        self.mass = np.array([b.mass for b in bodies])
        self.com = np.stack([b.com for b in bodies])
        self.inertia = np.stack([b.inertia for b in bodies])
        self.stiffness = np.array([b.joint.stiffness for b in bodies])
        self.damping = np.array([b.joint.damping for b in bodies])
        self.rest = np.array([b.joint.rest_position for b in bodies])
        self.limit_lo = np.array([b.joint.limits[0] for b in bodies])
        self.limit_hi = np.array([b.joint.limits[1] for b in bodies])

        # ancestor_mask[i, j] == True iff joint i is on the path root->body j
        # (self included); used to assemble the CRB mass matrix.
        mask = np.zeros((n, n), dtype=bool)
        for j in range(n):
            k = j
            while k >= 0:
                mask[k, j] = True
                k = int(self.parent[k])
        self.ancestor_mask = mask

    def check_q(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.n:
            raise TreeError(f"expected {self.n} joint values, got {q.shape[0]}")
        if not np.all(np.isfinite(q)):
            raise TreeError("non-finite joint position")
        return q

    def check_v(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        if v.shape[0] != self.n:
            raise TreeError(f"expected {self.n} joint rates, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise TreeError("non-finite joint velocity")
        return v

    def rest_state(self) -> "ChainState":
        q = np.clip(self.rest.copy(), self.limit_lo, self.limit_hi)
        return ChainState(q=q, v=np.zeros(self.n))


@dataclass
class ChainState:
    """Generalized positions and velocities, one scalar per joint."""

    q: np.ndarray
    v: np.ndarray

    def copy(self) -> "ChainState":
        return ChainState(q=self.q.copy(), v=self.v.copy())
