from .tree import JointModel, BodyNode, KinematicTree, ChainState, TreeError
from .algorithms import (
    forward_kinematics,
    body_point,
    joint_torques,
    rne_bias,
    crb_mass_matrix,
    inverse_dynamics,
    forward_dynamics,
    point_jacobian,
    integrate_semi_implicit,
    mechanical_energy,
)

__all__ = [
    "JointModel",
    "BodyNode",
    "KinematicTree",
    "ChainState",
    "TreeError",
    "forward_kinematics",
    "body_point",
    "joint_torques",
    "rne_bias",
    "crb_mass_matrix",
    "inverse_dynamics",
    "forward_dynamics",
    "point_jacobian",
    "integrate_semi_implicit",
    "mechanical_energy",
]
