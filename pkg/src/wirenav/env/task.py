"""Goal-reaching episodes on top of the wire simulation.

An environment owns one Simulation exclusively. reset() places the wire at
the insertion pose with a small seeded slide perturbation; step() applies a
2-vector action, renders the observation, and scores the new tip position:
the success reward inside the goal sphere, negative Euclidean distance (in
meters) outside it. Episodes terminate on goal entry and truncate at the
step limit; when both happen on the same transition the goal wins.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..collision import HullSet
from ..dynamics import ChainState
from ..metrics import force_magnitude
from ..render import camera_fit_bounds, render_grayscale, render_mask
from ..scene import SceneConfig, Simulation, build_scene, sim_step


class EnvError(RuntimeError):
    """Contract violations: unknown target, stepping a finished episode."""


@dataclass(frozen=True)
class EnvConfig:
    """Episode parameters; delta is the goal-sphere radius in meters."""

    delta: float = 0.004
    success_reward: float = 10.0
    max_steps: int = 300
    target_name: Optional[str] = None  # None: first target in the scene
    image_size: tuple = (80, 80)
    seed: int = 0
    settle_steps: int = 30      # relaxation steps baked into the start state
    reset_jitter: float = 1e-3  # uniform +- slide perturbation at reset, m

    def __post_init__(self):
        if not self.delta > 0.0:
            raise EnvError(f"delta must be positive, got {self.delta}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise EnvError(f"max_steps must be an integer >= 1, got {self.max_steps}")
        w, h = self.image_size
        object.__setattr__(self, "image_size", (int(w), int(h)))
        if self.reset_jitter < 0.0:
            raise EnvError("reset_jitter must be >= 0")


@dataclass(frozen=True)
class Observation:
    """Rendered view plus proprioception; mask is the wire pixel set of image."""

    image: np.ndarray  # (h, w) float in [0, 1]
    mask: np.ndarray   # (h, w) uint8 in {0, 1}
    qpos: np.ndarray
    qvel: np.ndarray


@dataclass(frozen=True)
class StepResult:
    obs: Observation
    reward: float
    terminated: bool  # goal reached
    truncated: bool   # time limit
    info: dict = field(default_factory=dict)


def compute_reward(tip, goal, config: EnvConfig) -> float:
    """Success reward inside the goal sphere, else negative distance (m).

    The boundary is inclusive: distance exactly delta still scores the
    success reward.
    """
    tip = np.asarray(tip, dtype=np.float64).reshape(3)
    goal = np.asarray(goal, dtype=np.float64).reshape(3)
    if not (np.all(np.isfinite(tip)) and np.all(np.isfinite(goal))):
        raise EnvError("tip and goal must be finite")
    d = float(np.linalg.norm(tip - goal))
    return config.success_reward if d <= config.delta else -d


class NavigationEnv:
    """One owned Simulation driven through an episodic reset/step contract.

    Single-threaded like the Simulation it owns; run N environments on N
    threads for batch rollouts, never one environment on two.
    """

    def __init__(
        self,
        scene_config: SceneConfig,
        env_config: EnvConfig = EnvConfig(),
        hullset: Optional[HullSet] = None,
    ):
        self.config = env_config
        self.scene_config = scene_config
        self.sim: Simulation = build_scene(
            scene_config, hullset=hullset, settle_steps=env_config.settle_steps
        )
        if env_config.target_name is not None:
            self._check_target(env_config.target_name)
        self.target_name = env_config.target_name or next(iter(scene_config.targets))
        self.camera = camera_fit_bounds(
            *self.sim.scene_bounds(),
            resolution=env_config.image_size,
            wire_min_px_radius=0.75,
        )
        # unseeded resets draw from this stream; explicit seeds bypass it
        self._stream = np.random.default_rng(env_config.seed)
        self._active = False
        self.step_count = 0

    def _check_target(self, name: str):
        if name not in self.scene_config.targets:
            known = ", ".join(self.scene_config.targets)
            raise EnvError(f"unknown target {name!r} (scene has: {known})")

    @property
    def goal(self) -> np.ndarray:
        return self.scene_config.targets[self.target_name]

    @property
    def active(self) -> bool:
        return self._active

    def _observe(self) -> Observation:
        return Observation(
            image=render_grayscale(self.sim, self.camera),
            mask=render_mask(self.sim, self.camera),
            qpos=self.sim.state.q.copy(),
            qvel=self.sim.state.v.copy(),
        )

    def reset(self, seed: Optional[int] = None, target_name: Optional[str] = None) -> Observation:
        """Start a new episode; same seed means the same start state."""
        if target_name is not None:
            self._check_target(target_name)
            self.target_name = target_name
        rng = (
            np.random.default_rng(seed)
            if seed is not None
            else np.random.default_rng(self._stream.integers(2**63))
        )
        self.sim.reset()
        q = self.sim.state.q.copy()
        q[0] += rng.uniform(-self.config.reset_jitter, self.config.reset_jitter)
        self.sim.state = ChainState(q=q, v=np.zeros_like(q))
        self.sim.drive_targets = q[:2].copy()
        self.step_count = 0
        self._active = True
        return self._observe()

    def step(self, action) -> StepResult:
        """Apply one action; scores and terminates on the resulting state."""
        if not self._active:
            raise EnvError("step() on a finished episode; call reset() first")
        self.sim, contacts, tip = sim_step(self.sim, action)
        self.step_count += 1

        distance = float(np.linalg.norm(tip - self.goal))
        reward = compute_reward(tip, self.goal, self.config)
        terminated = distance <= self.config.delta
        truncated = self.step_count >= self.config.max_steps and not terminated
        if terminated or truncated:
            self._active = False

        net_force = np.zeros(3)
        for c in contacts:
            net_force += c.world_force()
        info = {
            "tip_position": tip.copy(),
            "goal": self.goal.copy(),
            "distance": distance,
            "contact_force_magnitude": float(force_magnitude(net_force)),
            "contacts": contacts,
            "action_clamped": self.sim.last_action_clamped,
        }
        return StepResult(
            obs=self._observe(),
            reward=reward,
            terminated=terminated,
            truncated=truncated,
            info=info,
        )
