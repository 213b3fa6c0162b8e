"""Minimal 2-D point-reach environment for exercising training loops.

Same episodic contract as the navigation environment: actions are (2,)
vectors clipped to [-1, 1], reward is the success bonus at the goal and
negative distance otherwise, terminated on reaching the goal, truncated on
the step cap. Observations are the goal-relative position, a flat (2,)
array, so policies stay tiny and training runs in seconds.
"""

from dataclasses import dataclass

import numpy as np

from ..env.task import EnvError, StepResult


@dataclass(frozen=True)
class PointReachConfig:
    delta: float = 0.05
    success_reward: float = 10.0
    max_steps: int = 60
    step_size: float = 0.08
    start_box: float = 0.8
    seed: int = 0


class PointReachEnv:
    """Point robot on the plane; reach the origin within delta."""

    def __init__(self, config: PointReachConfig = PointReachConfig()):
        self.config = config
        self._stream = np.random.default_rng(config.seed)
        self._pos = np.zeros(2)
        self._steps = 0
        self._active = False

    @property
    def active(self) -> bool:
        return self._active

    def reset(self, seed=None) -> np.ndarray:
        rng = (np.random.default_rng(seed) if seed is not None
               else np.random.default_rng(self._stream.integers(2**63)))
        box = self.config.start_box
        self._pos = rng.uniform(-box, box, size=2)
        self._steps = 0
        self._active = True
        return self._pos.copy()

    def step(self, action) -> StepResult:
        if not self._active:
            raise EnvError("episode is finished; call reset() first")
        a = np.clip(np.asarray(action, dtype=np.float64).ravel(), -1.0, 1.0)
        if a.size != 2:
            raise EnvError(f"action must have 2 components, got {a.size}")
        self._pos = self._pos + self.config.step_size * a
        self._steps += 1
        d = float(np.linalg.norm(self._pos))
        terminated = d <= self.config.delta
        truncated = (not terminated) and self._steps >= self.config.max_steps
        reward = self.config.success_reward if terminated else -d
        if terminated or truncated:
            self._active = False
        info = {"distance": d, "steps": self._steps}
        return StepResult(self._pos.copy(), reward, terminated, truncated, info)
