"""Sequential f64 networks with reverse-mode gradients, numpy only.

A Network binds an ordered layer list to a concrete input shape, lays all
parameters out in one flat vector (per-layer views on top), and exposes
forward with an explicit activation cache plus backward producing the flat
parameter gradient. Convolutions run as im2col + one GEMM per layer, which
keeps everything inside BLAS; col2im scatters gradients back with one
strided add per kernel offset.
"""

import math
from dataclasses import dataclass

import numpy as np


class NetError(ValueError):
    """Shape chain inconsistencies and input mismatches."""


@dataclass(frozen=True)
class Conv:
    out_ch: int
    kernel: int
    stride: int


@dataclass(frozen=True)
class Relu:
    pass


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Linear:
    out: int


@dataclass(frozen=True)
class Tanh:
    pass


def _im2col(x: np.ndarray, k: int, s: int) -> np.ndarray:
    """(N, C, H, W) -> (N, C*k*k, L) patch matrix, L = Ho*Wo."""
    n, c, _, _ = x.shape
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    win = win[:, :, ::s, ::s]  # (N, C, Ho, Wo, k, k)
    ho, wo = win.shape[2], win.shape[3]
    cols = win.transpose(0, 1, 4, 5, 2, 3).reshape(n, c * k * k, ho * wo)
    return np.ascontiguousarray(cols), ho, wo


def _col2im(gcols: np.ndarray, x_shape, k: int, s: int, ho: int, wo: int) -> np.ndarray:
    """Adjoint of _im2col: scatter-add patch gradients back to the image."""
    n, c, h, w = x_shape
    g = gcols.reshape(n, c, k, k, ho, wo)
    gx = np.zeros((n, c, h, w))
    for ki in range(k):
        for kj in range(k):
            gx[:, :, ki : ki + s * ho : s, kj : kj + s * wo : s] += g[:, :, ki, kj]
    return gx


class Network:
    """Layers bound to an input shape; parameters live in one flat vector."""

    def __init__(self, layers, input_shape):
        self.layers = tuple(layers)
        self.input_shape = tuple(int(d) for d in input_shape)
        self.shapes = [self.input_shape]  # per-layer output shapes, input first
        self.slices = []                  # (W slice, b slice) or None per layer
        offset = 0
        shape = self.input_shape
        for layer in self.layers:
            if isinstance(layer, Conv):
                if len(shape) != 3:
                    raise NetError(f"conv needs (C, H, W) input, got {shape}")
                c, h, w = shape
                if h < layer.kernel or w < layer.kernel:
                    raise NetError(f"kernel {layer.kernel} larger than input {shape}")
                ho = (h - layer.kernel) // layer.stride + 1
                wo = (w - layer.kernel) // layer.stride + 1
                nw = layer.out_ch * c * layer.kernel * layer.kernel
                self.slices.append(
                    (slice(offset, offset + nw), slice(offset + nw, offset + nw + layer.out_ch))
                )
                offset += nw + layer.out_ch
                shape = (layer.out_ch, ho, wo)
            elif isinstance(layer, Linear):
                if len(shape) != 1:
                    raise NetError(f"linear needs flat input, got {shape}")
                nw = layer.out * shape[0]
                self.slices.append(
                    (slice(offset, offset + nw), slice(offset + nw, offset + nw + layer.out))
                )
                offset += nw + layer.out
                shape = (layer.out,)
            elif isinstance(layer, Flatten):
                self.slices.append(None)
                shape = (int(np.prod(shape)),)
            elif isinstance(layer, (Relu, Tanh)):
                self.slices.append(None)
            else:
                raise NetError(f"unknown layer {layer!r}")
            self.shapes.append(shape)
        self.output_shape = shape
        self.param_count = offset

    def layer_param_counts(self):
        """Parameter count per layer, zeros for parameter-free layers."""
        out = []
        for sl in self.slices:
            if sl is None:
                out.append(0)
            else:
                w, b = sl
                out.append((w.stop - w.start) + (b.stop - b.start))
        return out

    def views(self, params: np.ndarray, i: int):
        """(W, b) views of layer i's parameters, shaped for use."""
        sl = self.slices[i]
        if sl is None:
            return None
        layer = self.layers[i]
        w, b = params[sl[0]], params[sl[1]]
        if isinstance(layer, Conv):
            c = self.shapes[i][0]
            return w.reshape(layer.out_ch, c * layer.kernel * layer.kernel), b
        return w.reshape(layer.out, self.shapes[i][0]), b

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        """He initialization for the weight matrices, zero biases."""
        params = np.zeros(self.param_count)
        for i, layer in enumerate(self.layers):
            if self.slices[i] is None:
                continue
            wsl, _ = self.slices[i]
            if isinstance(layer, Conv):
                fan_in = self.shapes[i][0] * layer.kernel**2
            else:
                fan_in = self.shapes[i][0]
            params[wsl] = rng.normal(
                scale=math.sqrt(2.0 / fan_in), size=wsl.stop - wsl.start
            )
        return params

    def forward(self, params, x, cache=None, check=False):
        """Run the network on a batch; x shape (N, *input_shape).

        cache, when a list, receives the per-layer inputs needed by
        backward. check validates finiteness after every layer.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1:] != self.input_shape:
            raise NetError(f"input shape {x.shape[1:]} != spec {self.input_shape}")
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Conv):
                cols, ho, wo = _im2col(x, layer.kernel, layer.stride)
                w, b = self.views(params, i)
                y = np.matmul(w, cols) + b[None, :, None]
                if cache is not None:
                    cache.append((cols, x.shape, ho, wo))
                x = y.reshape(x.shape[0], layer.out_ch, ho, wo)
            elif isinstance(layer, Linear):
                w, b = self.views(params, i)
                if cache is not None:
                    cache.append(x)
                x = x @ w.T + b
            elif isinstance(layer, Flatten):
                if cache is not None:
                    cache.append(x.shape)
                x = x.reshape(x.shape[0], -1)
            elif isinstance(layer, Relu):
                if cache is not None:
                    cache.append(x > 0.0)
                x = np.maximum(x, 0.0)
            elif isinstance(layer, Tanh):
                x = np.tanh(x)
                if cache is not None:
                    cache.append(x)
            if check and not np.all(np.isfinite(x)):
                raise NetError(f"non-finite activation after layer {i} ({layer!r})")
        return x

    def backward(self, params, cache, gout):
        """Flat parameter gradient and input gradient from output gradient."""
        if len(cache) != len(self.layers):
            raise NetError("cache does not match the layer list; rerun forward")
        gparams = np.zeros(self.param_count)
        g = np.asarray(gout, dtype=np.float64)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            saved = cache[i]
            if isinstance(layer, Conv):
                cols, x_shape, ho, wo = saved
                n = g.shape[0]
                gy = g.reshape(n, layer.out_ch, ho * wo)
                w, _ = self.views(params, i)
                wsl, bsl = self.slices[i]
                gparams[wsl] = np.matmul(gy, cols.transpose(0, 2, 1)).sum(axis=0).ravel()
                gparams[bsl] = gy.sum(axis=(0, 2))
                gcols = np.matmul(w.T, gy)
                g = _col2im(gcols, x_shape, layer.kernel, layer.stride, ho, wo)
            elif isinstance(layer, Linear):
                x = saved
                w, _ = self.views(params, i)
                wsl, bsl = self.slices[i]
                gparams[wsl] = (g.T @ x).ravel()
                gparams[bsl] = g.sum(axis=0)
                g = g @ w
            elif isinstance(layer, Flatten):
                g = g.reshape(saved)
            elif isinstance(layer, Relu):
                g = g * saved
            elif isinstance(layer, Tanh):
                y = saved
                g = g * (1.0 - y * y)
        return gparams, g

    def signature(self) -> str:
        """Stable text form of the architecture, used in checkpoint headers."""
        parts = ["x".join(str(d) for d in self.input_shape)]
        for layer in self.layers:
            if isinstance(layer, Conv):
                parts.append(f"conv{layer.out_ch}k{layer.kernel}s{layer.stride}")
            elif isinstance(layer, Linear):
                parts.append(f"lin{layer.out}")
            else:
                parts.append(type(layer).__name__.lower())
        return "-".join(parts)


def cnn_trunk(input_shape=(1, 80, 80), width: int = 256) -> Network:
    """Three-conv image trunk ending in a width-dim feature vector."""
    return Network(
        [
            Conv(32, 8, 4), Relu(),
            Conv(64, 4, 2), Relu(),
            Conv(64, 3, 1), Relu(),
            Flatten(), Linear(width), Relu(),
        ],
        input_shape,
    )


def joint_mlp(input_dim: int = 336) -> Network:
    """Proprioception trunk: 336 -> 256 -> 128, ReLU throughout."""
    return Network(
        [Linear(256), Relu(), Linear(128), Relu()],
        (input_dim,),
    )


def bc_net(input_shape=(1, 80, 80)) -> Network:
    """Image-to-action mean network used by behavior cloning."""
    return Network(
        [
            Conv(32, 8, 4), Relu(),
            Conv(64, 4, 2), Relu(),
            Conv(64, 3, 1), Relu(),
            Flatten(), Linear(512), Relu(), Linear(2),
        ],
        input_shape,
    )
