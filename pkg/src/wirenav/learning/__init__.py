"""Numpy learning stack: networks, policies, and the three trainers."""

from .bc import BCConfig, BCPolicy, bc_loss_and_grad, bc_train, gaussian_entropy
from .enn import ENNFeatures
from .fpn import FPNConfig, fpn_loss_and_grad, fpn_mse, fpn_net, fpn_train
from .io import (
    CheckpointError,
    load_checkpoint,
    load_curve,
    loads_checkpoint,
    dumps_checkpoint,
    save_checkpoint,
    save_curve,
    spec_hash,
)
from .nets import (
    Conv,
    Flatten,
    Linear,
    NetError,
    Network,
    Relu,
    Tanh,
    bc_net,
    cnn_trunk,
    joint_mlp,
)
from .optim import Adam
from .pointreach import PointReachConfig, PointReachEnv
from .policy import LOG_STD_MAX, LOG_STD_MIN, GaussianPolicy, PolicySample
from .sac import (
    LearningError,
    ReplayBuffer,
    SACConfig,
    SACResult,
    actor_head_grads,
    mlp,
    sac_train,
)

__all__ = [
    "Adam", "BCConfig", "BCPolicy", "CheckpointError", "Conv", "ENNFeatures",
    "FPNConfig", "Flatten", "GaussianPolicy", "LOG_STD_MAX", "LOG_STD_MIN",
    "LearningError", "Linear", "NetError", "Network", "PointReachConfig",
    "PointReachEnv", "PolicySample", "Relu", "ReplayBuffer", "SACConfig",
    "SACResult", "Tanh", "actor_head_grads", "bc_loss_and_grad", "bc_net",
    "bc_train", "cnn_trunk", "dumps_checkpoint", "fpn_loss_and_grad",
    "fpn_mse", "fpn_net", "fpn_train", "gaussian_entropy", "joint_mlp",
    "load_checkpoint", "load_curve", "loads_checkpoint", "mlp",
    "sac_train", "save_checkpoint", "save_curve", "spec_hash",
]
