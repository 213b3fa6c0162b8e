"""Tanh-squashed diagonal Gaussian policy over 2-D actions.

The policy is a feature trunk (any Network with 1-D output) plus two linear
heads for the mean and the log standard deviation. Actions are sampled by
reparameterization, a = tanh(mu + sigma * eps), and log-probabilities carry
the tanh change-of-variables correction. log_std is hard-clamped to
[LOG_STD_MIN, LOG_STD_MAX] with zero gradient outside the window.
"""

from dataclasses import dataclass

import numpy as np

from .nets import Network

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_TANH_EPS = 1e-6
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class PolicySample:
    """One reparameterized draw plus everything backward needs."""

    actions: np.ndarray   # (N, A) squashed
    log_prob: np.ndarray  # (N,)
    mu: np.ndarray
    log_std: np.ndarray   # clamped
    eps: np.ndarray
    features: np.ndarray
    trunk_cache: list
    std_mask: np.ndarray  # 1 where the clamp is inactive


class GaussianPolicy:
    """Trunk + mean/log_std linear heads over a flat parameter vector."""

    def __init__(self, trunk: Network, action_dim: int = 2):
        if len(trunk.output_shape) != 1:
            raise ValueError("policy trunk must produce a flat feature vector")
        self.trunk = trunk
        self.action_dim = int(action_dim)
        self.feat_dim = trunk.output_shape[0]
        head = self.feat_dim * self.action_dim + self.action_dim
        base = trunk.param_count
        self._mean_w = slice(base, base + self.feat_dim * self.action_dim)
        self._mean_b = slice(self._mean_w.stop, self._mean_w.stop + self.action_dim)
        self._std_w = slice(self._mean_b.stop, self._mean_b.stop + self.feat_dim * self.action_dim)
        self._std_b = slice(self._std_w.stop, self._std_w.stop + self.action_dim)
        self.param_count = base + 2 * head

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        params = np.zeros(self.param_count)
        params[: self.trunk.param_count] = self.trunk.init_params(rng)
        # small heads keep initial actions near zero and std near one
        params[self._mean_w] = rng.normal(scale=1e-2, size=self.feat_dim * self.action_dim)
        params[self._std_w] = rng.normal(scale=1e-2, size=self.feat_dim * self.action_dim)
        return params

    def _heads(self, params, feats):
        mw = params[self._mean_w].reshape(self.action_dim, self.feat_dim)
        sw = params[self._std_w].reshape(self.action_dim, self.feat_dim)
        mu = feats @ mw.T + params[self._mean_b]
        log_std_raw = feats @ sw.T + params[self._std_b]
        return mu, log_std_raw

    def dist(self, params, obs, cache=None):
        """Mean and clamped log_std for a batch of observations."""
        feats = self.trunk.forward(params[: self.trunk.param_count], obs, cache=cache)
        mu, raw = self._heads(params, feats)
        return mu, np.clip(raw, LOG_STD_MIN, LOG_STD_MAX), feats

    def act(self, params, obs, rng=None, mode: str = "sample") -> np.ndarray:
        """Squashed actions; mode 'mean' is deterministic, 'sample' draws."""
        mu, log_std, _ = self.dist(params, obs)
        if mode == "mean":
            return np.tanh(mu)
        if mode != "sample":
            raise ValueError(f"unknown act mode {mode!r}")
        if rng is None:
            raise ValueError("sampling requires an rng")
        u = mu + np.exp(log_std) * rng.standard_normal(mu.shape)
        return np.tanh(u)

    def sample(self, params, obs, rng) -> PolicySample:
        """Reparameterized draw with log-probabilities and a backward cache."""
        trunk_cache = []
        feats = self.trunk.forward(params[: self.trunk.param_count], obs, cache=trunk_cache)
        mu, raw = self._heads(params, feats)
        log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
        std_mask = ((raw > LOG_STD_MIN) & (raw < LOG_STD_MAX)).astype(np.float64)
        eps = rng.standard_normal(mu.shape)
        u = mu + np.exp(log_std) * eps
        actions = np.tanh(u)
        log_prob = self.log_prob_from_eps(eps, log_std, actions)
        return PolicySample(actions, log_prob, mu, log_std, eps, feats, trunk_cache, std_mask)

    @staticmethod
    def log_prob_from_eps(eps, log_std, actions):
        """log pi(a|s) given the pre-squash noise that produced a."""
        gauss = -0.5 * (_LOG_2PI + eps * eps) - log_std
        corr = np.log(1.0 - actions * actions + _TANH_EPS)
        return np.sum(gauss - corr, axis=-1)

    def log_prob(self, params, obs, actions) -> np.ndarray:
        """log pi(a|s) for given squashed actions (atanh recovers the noise)."""
        mu, log_std, _ = self.dist(params, obs)
        a = np.clip(actions, -1.0 + _TANH_EPS, 1.0 - _TANH_EPS)
        u = np.arctanh(a)
        eps = (u - mu) / np.exp(log_std)
        return self.log_prob_from_eps(eps, log_std, a)

    def backward(self, params, sample: PolicySample, gmu, glog_std):
        """Flat parameter gradient from gradients at the two head outputs."""
        glog_std = glog_std * sample.std_mask  # clamp blocks gradient
        grad = np.zeros(self.param_count)
        mw = params[self._mean_w].reshape(self.action_dim, self.feat_dim)
        sw = params[self._std_w].reshape(self.action_dim, self.feat_dim)
        grad[self._mean_w] = (gmu.T @ sample.features).ravel()
        grad[self._mean_b] = gmu.sum(axis=0)
        grad[self._std_w] = (glog_std.T @ sample.features).ravel()
        grad[self._std_b] = glog_std.sum(axis=0)
        gfeat = gmu @ mw + glog_std @ sw
        gtrunk, _ = self.trunk.backward(
            params[: self.trunk.param_count], sample.trunk_cache, gfeat
        )
        grad[: self.trunk.param_count] = gtrunk
        return grad
