"""Episodic navigation task over a simulation: reset/step, reward, termination."""

from .task import (
    EnvConfig,
    EnvError,
    NavigationEnv,
    Observation,
    StepResult,
    compute_reward,
)

__all__ = [
    "EnvConfig",
    "EnvError",
    "NavigationEnv",
    "Observation",
    "StepResult",
    "compute_reward",
]
