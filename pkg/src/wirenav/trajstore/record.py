"""Run one episode and capture it as a container."""

import hashlib

import numpy as np

from ..env import NavigationEnv
from ..scene import dump_scene_config
from ..scene.sim import SimulationFault
from .container import EpisodeContainer, TrajectoryError, _ENV_KEYS


def scene_fingerprint(scene_config) -> str:
    """Stable hex digest of the scene document text."""
    text = dump_scene_config(scene_config)
    return hashlib.sha256(text.encode("ascii")).hexdigest()[:16]


def _env_header(env: NavigationEnv) -> dict:
    cfg = env.config
    out = {k: getattr(cfg, k) for k in _ENV_KEYS if k != "target_name"}
    out["target_name"] = env.target_name
    return out


def record_episode(env: NavigationEnv, policy, seed: int = 0) -> EpisodeContainer:
    """Reset the environment and roll one episode to termination.

    policy is either a callable obs -> action or an iterable of actions;
    an exhausted action stream ends the episode early. A physics fault
    rejects the partial recording rather than writing a corrupt file.
    """
    if callable(policy):
        def next_action(obs):
            return policy(obs)
    else:
        stream = iter(policy)

        def next_action(obs):
            return next(stream, None)

    obs = env.reset(seed=seed)
    images, masks, qpos, qvel = [], [], [], []
    actions, forces, rewards, tips = [], [], [], []
    succeeded = False
    try:
        while env.active:
            action = next_action(obs)
            if action is None:
                break
            result = env.step(action)
            obs = result.obs
            succeeded = result.terminated
            # quantize exactly once; the container keeps u8 from here on
            images.append(np.round(obs.image * 255.0).astype(np.uint8))
            masks.append(obs.mask)
            qpos.append(obs.qpos)
            qvel.append(obs.qvel)
            actions.append(np.asarray(action, dtype=np.float64).reshape(2))
            net = np.zeros(3)
            for c in result.info["contacts"]:
                net += c.world_force()
            forces.append(net)
            rewards.append(result.reward)
            tips.append(result.info["tip_position"])
    except SimulationFault as exc:
        raise TrajectoryError(
            f"physics fault after {len(rewards)} steps; partial episode rejected"
        ) from exc
    if not rewards:
        raise TrajectoryError("episode recorded no steps")

    return EpisodeContainer(
        images=np.stack(images),
        masks=np.stack(masks),
        qpos=np.stack(qpos),
        qvel=np.stack(qvel),
        actions=np.stack(actions),
        forces=np.stack(forces),
        rewards=np.array(rewards),
        tips=np.stack(tips),
        success=succeeded,
        target=env.target_name,
        seed=seed,
        scene_hash=scene_fingerprint(env.scene_config),
        env=_env_header(env),
    )
