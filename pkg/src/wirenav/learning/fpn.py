"""Force-and-feature prediction from images alone.

A conv trunk with a two-layer head regresses, from the grayscale render,
both the full state encoding Z and the scalar contact force magnitude. The
training loss is the summed squared error of both targets,

    L = sum_d (Z_d - Zhat_d)^2 + (f - fhat)^2

averaged over the batch. The net's last output column is the force; the
rest is the feature reconstruction.
"""

from dataclasses import dataclass

import numpy as np

from .nets import Conv, Flatten, Linear, Network, Relu
from .optim import Adam


@dataclass(frozen=True)
class FPNConfig:
    batch_size: int = 32
    lr: float = 1e-3
    epochs: int = 200
    seed: int = 0


def fpn_net(input_shape=(1, 80, 80), z_dim: int = 640) -> Network:
    """Conv trunk + MLP head emitting z_dim features and one force value."""
    return Network(
        [
            Conv(32, 8, 4), Relu(),
            Conv(64, 4, 2), Relu(),
            Conv(64, 3, 1), Relu(),
            Flatten(), Linear(256), Relu(), Linear(z_dim + 1),
        ],
        input_shape,
    )


def fpn_loss_and_grad(net: Network, params, images, z_targets, f_targets):
    """Mean joint loss over the batch and its flat parameter gradient."""
    n = images.shape[0]
    cache = []
    out = net.forward(params, images, cache=cache)
    resid = out - np.concatenate([z_targets, f_targets[:, None]], axis=1)
    loss = float(np.sum(resid * resid) / n)
    grad, _ = net.backward(params, cache, 2.0 * resid / n)
    z_mse = float(np.mean(np.sum(resid[:, :-1] ** 2, axis=1)))
    f_mse = float(np.mean(resid[:, -1] ** 2))
    return loss, grad, z_mse, f_mse


def fpn_train(images, z_targets, f_targets, config: FPNConfig = FPNConfig(),
              net: Network = None, callback=None):
    """Fit the predictor; returns (net, params, curve).

    images: (N, H, W) or (N, C, H, W) in [0, 1]; z_targets: (N, z_dim)
    encoder outputs used as labels; f_targets: (N,) force magnitudes.
    Curve rows are (epoch, loss, z_mse, f_mse).
    """
    images = np.asarray(images, dtype=np.float64)
    z_targets = np.asarray(z_targets, dtype=np.float64)
    f_targets = np.asarray(f_targets, dtype=np.float64).ravel()
    if images.ndim == 3:
        images = images[:, None]
    n = images.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    if z_targets.shape[0] != n or f_targets.shape[0] != n:
        raise ValueError("images, z_targets, f_targets disagree on sample count")

    if net is None:
        net = fpn_net(images.shape[1:], z_targets.shape[1])
    if net.output_shape != (z_targets.shape[1] + 1,):
        raise ValueError(
            f"net outputs {net.output_shape[0]}, need {z_targets.shape[1] + 1}"
        )
    rng = np.random.default_rng(config.seed)
    params = net.init_params(rng)
    opt = Adam(net.param_count, lr=config.lr)
    curve = []

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        tot = np.zeros(3)
        batches = 0
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            loss, grad, z_mse, f_mse = fpn_loss_and_grad(
                net, params, images[idx], z_targets[idx], f_targets[idx]
            )
            if not np.isfinite(loss):
                raise RuntimeError(f"non-finite FPN loss at epoch {epoch}")
            opt.step(params, grad)
            tot += (loss, z_mse, f_mse)
            batches += 1
        curve.append((epoch, *(tot / batches)))
        if callback is not None and callback(epoch, curve[-1][1]) is False:
            break
    return net, params, curve


def fpn_mse(net: Network, params, images, z_targets, f_targets):
    """Held-out evaluation: (joint mse, z mse, f mse), batch means."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 3:
        images = images[:, None]
    out = net.forward(params, images)
    resid = out - np.concatenate(
        [np.asarray(z_targets, dtype=np.float64),
         np.asarray(f_targets, dtype=np.float64).reshape(-1, 1)], axis=1
    )
    z_mse = float(np.mean(np.sum(resid[:, :-1] ** 2, axis=1)))
    f_mse = float(np.mean(resid[:, -1] ** 2))
    return z_mse + f_mse, z_mse, f_mse
