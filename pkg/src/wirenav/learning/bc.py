"""Behavior cloning on recorded expert episodes.

The cloned policy is a Gaussian with a network-predicted mean and a global
state-independent log standard deviation (one scalar per action dimension).
Training minimizes negative log-likelihood of the expert actions, minus an
entropy bonus (beta) that keeps the Gaussian from collapsing, plus an L2
penalty (weight_decay) over all parameters:

    L = -E[log pi(a|s)] - beta * H(pi) + weight_decay * ||theta||^2

For a diagonal Gaussian H = sum_d (log sigma_d + 0.5 * log(2 pi e)), so the
entropy bonus acts on the log_std vector alone.
"""

from dataclasses import dataclass, field

import numpy as np

from .nets import Network, bc_net
from .optim import Adam

_LOG_2PI = float(np.log(2.0 * np.pi))
_ENTROPY_CONST = 0.5 * float(np.log(2.0 * np.pi * np.e))


@dataclass(frozen=True)
class BCConfig:
    batch_size: int = 32
    lr: float = 1e-3
    entropy_coef: float = 1e-3
    weight_decay: float = 1e-5
    epochs: int = 800
    seed: int = 0


@dataclass
class BCPolicy:
    """Mean network plus a global log_std vector; flat parameters."""

    net: Network
    action_dim: int = 2

    def __post_init__(self):
        if self.net.output_shape != (self.action_dim,):
            raise ValueError(
                f"mean network must output ({self.action_dim},), "
                f"got {self.net.output_shape}"
            )
        self.param_count = self.net.param_count + self.action_dim

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        params = np.zeros(self.param_count)
        params[: self.net.param_count] = self.net.init_params(rng)
        return params  # log_std starts at 0, i.e. sigma = 1

    def split(self, params):
        return params[: self.net.param_count], params[self.net.param_count :]

    def mean(self, params, obs) -> np.ndarray:
        net_p, _ = self.split(params)
        return self.net.forward(net_p, obs)

    def act(self, params, obs, rng=None, mode: str = "mean") -> np.ndarray:
        """Actions clipped to the [-1, 1] command box."""
        mu = self.mean(params, obs)
        if mode == "sample":
            if rng is None:
                raise ValueError("sampling requires an rng")
            _, log_std = self.split(params)
            mu = mu + np.exp(log_std) * rng.standard_normal(mu.shape)
        elif mode != "mean":
            raise ValueError(f"unknown act mode {mode!r}")
        return np.clip(mu, -1.0, 1.0)

    def nll(self, params, obs, actions):
        """Per-sample negative log-likelihood, and the cache for backward."""
        net_p, log_std = self.split(params)
        cache = []
        mu = self.net.forward(net_p, obs, cache=cache)
        z = (actions - mu) / np.exp(log_std)
        nll = np.sum(0.5 * (_LOG_2PI + z * z) + log_std, axis=1)
        return nll, (cache, mu, z, log_std)


def gaussian_entropy(log_std: np.ndarray) -> float:
    """Differential entropy of a diagonal Gaussian."""
    return float(np.sum(log_std + _ENTROPY_CONST))


def bc_loss_and_grad(policy: BCPolicy, params, obs, actions, config: BCConfig):
    """Mean loss over the batch and its flat parameter gradient."""
    n = obs.shape[0]
    nll, (cache, mu, z, log_std) = policy.nll(params, obs, actions)
    net_p, _ = policy.split(params)
    entropy = gaussian_entropy(log_std)
    loss = float(np.mean(nll)) - config.entropy_coef * entropy \
        + config.weight_decay * float(params @ params)

    grad = np.zeros(policy.param_count)
    # d mean-NLL / d mu = -z / sigma, averaged over the batch
    gmu = -z / np.exp(log_std) / n
    gnet, _ = policy.net.backward(net_p, cache, gmu)
    grad[: policy.net.param_count] = gnet
    # d mean-NLL / d log_std = 1 - z^2 per sample; entropy adds -beta each
    grad[policy.net.param_count :] = (
        np.mean(1.0 - z * z, axis=0) - config.entropy_coef
    )
    grad += 2.0 * config.weight_decay * params
    return loss, grad


def bc_train(images, actions, config: BCConfig = BCConfig(), net: Network = None,
             callback=None):
    """Clone expert actions from images; returns (policy, params, curve).

    images: (N, H, W) or (N, C, H, W) float array in [0, 1].
    actions: (N, 2) expert commands. The curve lists (epoch, mean loss).
    """
    images = np.asarray(images, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    if images.ndim == 3:
        images = images[:, None]
    if images.shape[0] != actions.shape[0]:
        raise ValueError("images and actions disagree on sample count")
    if images.shape[0] == 0:
        raise ValueError("empty dataset")

    policy = BCPolicy(net if net is not None else bc_net(images.shape[1:]))
    rng = np.random.default_rng(config.seed)
    params = policy.init_params(rng)
    opt = Adam(policy.param_count, lr=config.lr)
    n = images.shape[0]
    curve = []

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        losses = []
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            loss, grad = bc_loss_and_grad(policy, params, images[idx], actions[idx], config)
            if not np.isfinite(loss):
                raise RuntimeError(f"non-finite BC loss at epoch {epoch}")
            opt.step(params, grad)
            losses.append(loss)
        curve.append((epoch, float(np.mean(losses))))
        if callback is not None and callback(epoch, curve[-1][1]) is False:
            break
    return policy, params, curve
