"""Soft actor-critic over flat-vector networks.

Twin Q critics with soft-updated targets, a tanh-Gaussian actor trained by
the reparameterization trick, and an automatically tuned entropy temperature
(log alpha ascends toward a fixed target entropy). One environment step per
train_freq steps triggers gradient_steps updates, each on a fresh uniform
batch from the replay buffer. Any non-finite loss aborts training with the
last parameter snapshot attached to the raised error.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .nets import Linear, Network, Relu
from .optim import Adam
from .policy import GaussianPolicy, PolicySample


class LearningError(RuntimeError):
    """Training failure; carries diagnostics and the last usable checkpoint."""

    def __init__(self, message, diagnostics=None, checkpoint=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
        self.checkpoint = checkpoint


@dataclass(frozen=True)
class SACConfig:
    lr: float = 3e-4
    buffer_size: int = 1_000_000
    batch_size: int = 256
    tau: float = 0.005
    gamma: float = 0.99
    train_freq: int = 1
    gradient_steps: int = 1
    target_update_interval: int = 1
    target_entropy: float = -2.0
    init_alpha: float = 1.0
    learning_starts: int = 100
    total_steps: int = 30_000
    hidden: tuple = (256, 256)
    seed: int = 0

    def __post_init__(self):
        if self.buffer_size < self.batch_size:
            raise ValueError("buffer smaller than one batch")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions with uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int = 2):
        self.capacity = int(capacity)
        self.obs = np.zeros((self.capacity, obs_dim))
        self.next_obs = np.zeros((self.capacity, obs_dim))
        self.actions = np.zeros((self.capacity, action_dim))
        self.rewards = np.zeros(self.capacity)
        self.dones = np.zeros(self.capacity)  # 1 only on true termination
        self.size = 0
        self._head = 0

    def add(self, obs, action, reward, next_obs, done):
        i = self._head
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self._head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int):
        idx = rng.integers(0, self.size, size=batch_size)
        return (self.obs[idx], self.actions[idx], self.rewards[idx],
                self.next_obs[idx], self.dones[idx])


def mlp(dims_in: int, hidden, dims_out: int) -> Network:
    layers = []
    for h in hidden:
        layers += [Linear(h), Relu()]
    layers.append(Linear(dims_out))
    return Network(layers, (dims_in,))


def actor_head_grads(sample: PolicySample, glogp: np.ndarray, gactions: np.ndarray):
    """Gradients at (mu, log_std) from gradients at (log pi, actions).

    Uses the fixed-noise reparameterization a = tanh(mu + sigma * eps):
    the log-density term differentiates to 2a(1-a^2)/(1-a^2+eps_c) through
    the squash correction, and log_std additionally sees the direct -1 from
    the entropy of the base Gaussian plus the path through a.
    """
    a = sample.actions
    one_m = 1.0 - a * a
    sq = 2.0 * a * one_m / (one_m + 1e-6)
    sig_eps = np.exp(sample.log_std) * sample.eps
    gmu = glogp[:, None] * sq + gactions * one_m
    glog_std = glogp[:, None] * (sq * sig_eps - 1.0) + gactions * one_m * sig_eps
    return gmu, glog_std


@dataclass
class SACResult:
    policy: GaussianPolicy
    policy_params: np.ndarray
    q1: Network
    q1_params: np.ndarray
    q2: Network
    q2_params: np.ndarray
    log_alpha: float
    curve: list = field(default_factory=list)  # (episode, env_step, return, success)
    env_steps: int = 0


def _check_finite(name, value, trainer):
    if not np.all(np.isfinite(value)):
        raise LearningError(
            f"non-finite {name} at env step {trainer['step']}",
            diagnostics={
                "loss": name,
                "env_step": trainer["step"],
                "alpha": trainer["alpha"],
                "value": np.asarray(value, dtype=float).tolist(),
            },
            checkpoint=trainer["snapshot"],
        )


def sac_train(env_factory, config: SACConfig = SACConfig(), obs_encoder=None,
              callback=None):
    """Train SAC on the environment produced by env_factory().

    obs_encoder maps an observation object to a flat f64 vector; the default
    flattens the observation as an array. callback, when given, is invoked
    after every finished episode with (episode_index, env_step, ep_return,
    success) and may return False to stop early.
    """
    cfg = config
    enc = obs_encoder or (lambda o: np.asarray(o, dtype=np.float64).ravel())
    env = env_factory()
    rng = np.random.default_rng(cfg.seed)

    obs = enc(env.reset(seed=cfg.seed))
    obs_dim = obs.size
    act_dim = 2

    policy = GaussianPolicy(_policy_trunk(obs_dim, cfg.hidden), act_dim)
    q1 = mlp(obs_dim + act_dim, cfg.hidden, 1)
    q2 = mlp(obs_dim + act_dim, cfg.hidden, 1)

    p_pol = policy.init_params(rng)
    p_q1 = q1.init_params(rng)
    p_q2 = q2.init_params(rng)
    p_q1t = p_q1.copy()
    p_q2t = p_q2.copy()
    log_alpha = math.log(cfg.init_alpha)

    opt_pol = Adam(policy.param_count, lr=cfg.lr)
    opt_q1 = Adam(q1.param_count, lr=cfg.lr)
    opt_q2 = Adam(q2.param_count, lr=cfg.lr)
    opt_alpha = Adam(1, lr=cfg.lr)
    log_alpha_vec = np.array([log_alpha])

    buffer = ReplayBuffer(cfg.buffer_size, obs_dim, act_dim)
    result = SACResult(policy, p_pol, q1, p_q1, q2, p_q2, log_alpha)

    trainer = {"step": 0, "alpha": cfg.init_alpha, "snapshot": None}
    episode = 0
    ep_return = 0.0
    ep_success = False

    for step in range(1, cfg.total_steps + 1):
        trainer["step"] = step
        if step <= cfg.learning_starts:
            action = rng.uniform(-1.0, 1.0, size=act_dim)
        else:
            action = policy.act(p_pol, obs[None], rng=rng, mode="sample")[0]
        res = env.step(action)
        next_obs = enc(res.obs)
        done = res.terminated  # truncation is not a terminal value signal
        buffer.add(obs, action, res.reward, next_obs, done)
        ep_return += res.reward
        ep_success = ep_success or res.terminated
        obs = next_obs

        if res.terminated or res.truncated:
            result.curve.append((episode, step, ep_return, ep_success))
            if callback is not None and callback(episode, step, ep_return, ep_success) is False:
                result.env_steps = step
                result.log_alpha = float(log_alpha_vec[0])
                return result
            episode += 1
            ep_return = 0.0
            ep_success = False
            obs = enc(env.reset())

        if step <= cfg.learning_starts or step % cfg.train_freq != 0:
            continue

        for _ in range(cfg.gradient_steps):
            b_obs, b_act, b_rew, b_next, b_done = buffer.sample(rng, cfg.batch_size)
            alpha = math.exp(log_alpha_vec[0])
            trainer["alpha"] = alpha
            trainer["snapshot"] = {
                "policy": p_pol.copy(), "q1": p_q1.copy(), "q2": p_q2.copy(),
                "log_alpha": float(log_alpha_vec[0]),
            }

            # critic targets from the frozen networks
            nxt = policy.sample(p_pol, b_next, rng)
            nq_in = np.concatenate([b_next, nxt.actions], axis=1)
            tq = np.minimum(
                q1.forward(p_q1t, nq_in)[:, 0], q2.forward(p_q2t, nq_in)[:, 0]
            )
            y = b_rew + cfg.gamma * (1.0 - b_done) * (tq - alpha * nxt.log_prob)

            q_in = np.concatenate([b_obs, b_act], axis=1)
            c1, c2 = [], []
            qv1 = q1.forward(p_q1, q_in, cache=c1)[:, 0]
            qv2 = q2.forward(p_q2, q_in, cache=c2)[:, 0]
            closs = float(np.mean((qv1 - y) ** 2) + np.mean((qv2 - y) ** 2))
            _check_finite("critic loss", closs, trainer)
            n = cfg.batch_size
            g1, _ = q1.backward(p_q1, c1, (2.0 / n) * (qv1 - y)[:, None])
            g2, _ = q2.backward(p_q2, c2, (2.0 / n) * (qv2 - y)[:, None])
            opt_q1.step(p_q1, g1)
            opt_q2.step(p_q2, g2)

            # actor: minimize alpha*logp - min(Q1, Q2) at fresh actions
            cur = policy.sample(p_pol, b_obs, rng)
            a_in = np.concatenate([b_obs, cur.actions], axis=1)
            ac1, ac2 = [], []
            aq1 = q1.forward(p_q1, a_in, cache=ac1)[:, 0]
            aq2 = q2.forward(p_q2, a_in, cache=ac2)[:, 0]
            aloss = float(np.mean(alpha * cur.log_prob - np.minimum(aq1, aq2)))
            _check_finite("actor loss", aloss, trainer)
            pick1 = (aq1 <= aq2).astype(np.float64)
            _, gin1 = q1.backward(p_q1, ac1, (-pick1 / n)[:, None])
            _, gin2 = q2.backward(p_q2, ac2, (-(1.0 - pick1) / n)[:, None])
            ga = gin1 + gin2
            gmu, gls = actor_head_grads(cur, np.full(n, alpha / n), ga[:, obs_dim:])
            gpol = policy.backward(p_pol, cur, gmu, gls)
            opt_pol.step(p_pol, gpol)

            # temperature: minimize -log_alpha * (logp + target_entropy)
            galpha = -float(np.mean(cur.log_prob + cfg.target_entropy))
            _check_finite("alpha loss", galpha, trainer)
            opt_alpha.step(log_alpha_vec, np.array([galpha]))

            if step % cfg.target_update_interval == 0:
                p_q1t += cfg.tau * (p_q1 - p_q1t)
                p_q2t += cfg.tau * (p_q2 - p_q2t)

    result.policy_params = p_pol
    result.q1_params, result.q2_params = p_q1, p_q2
    result.log_alpha = float(log_alpha_vec[0])
    result.env_steps = cfg.total_steps
    return result


def _policy_trunk(obs_dim: int, hidden) -> Network:
    layers = []
    for h in hidden:
        layers += [Linear(h), Relu()]
    return Network(layers, (obs_dim,))
