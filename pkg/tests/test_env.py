"""Episodic environment contract: reward law, termination, determinism,
observation integrity.

Free-space scenes keep the physics trivial so the tests isolate episode
mechanics; one test drives the shipped phantom scene to check contact
reporting end to end.
"""

import math
import os

import numpy as np
import pytest

from wirenav.collision import ContactParams
from wirenav.env import EnvConfig, EnvError, NavigationEnv, compute_reward
from wirenav.scene import GuidewireSpec, SceneConfig, load_scene_config

SCENE_PATH = os.path.join(os.path.dirname(__file__), os.pardir, "scenes", "default.scene")

ZERO = (0.0, 0.0)
FEED = (1.0, 0.0)


def free_cfg(targets=None, **wire_kw):
    return SceneConfig(
        hullset_path=None,
        guidewire=GuidewireSpec(**wire_kw),
        insertion_origin=np.zeros(3),
        insertion_yaw=math.pi / 2,
        targets=targets or {"goal": np.array([0.0, 0.12, 0.0])},
        contact=ContactParams(),
    )


def make_env(targets=None, wire=None, **env_kw):
    cfg = free_cfg(targets=targets, **(wire or {}))
    return NavigationEnv(cfg, EnvConfig(**env_kw))


# ------------------------------------------------------------------ reward


def test_reward_law_examples():
    cfg = EnvConfig()
    goal = np.zeros(3)
    assert compute_reward((0.003, 0, 0), goal, cfg) == 10.0
    assert compute_reward((0.05, 0, 0), goal, cfg) == pytest.approx(-0.05)
    # boundary is inclusive
    assert compute_reward((0.004, 0, 0), goal, cfg) == 10.0
    assert compute_reward((0.0040001, 0, 0), goal, cfg) < 0.0
    with pytest.raises(EnvError):
        compute_reward((np.nan, 0, 0), goal, cfg)


def test_reward_sequence_is_negative_distance_until_goal():
    env = make_env(wire=dict(tip_precurve=0.0))
    env.reset(seed=4)
    for _ in range(20):
        r = env.step(FEED)
        if r.terminated:
            assert r.reward == 10.0
            break
        assert r.reward == pytest.approx(-r.info["distance"])
        assert -0.6 <= r.reward < 0.0  # bounded by the scene diameter


# ------------------------------------------------------------- termination


def test_goal_at_tip_terminates_immediately():
    probe = make_env()
    probe.reset(seed=0)
    tip = probe.sim.tip_position()
    env = make_env(targets={"here": tip + np.array([0.0, 1e-4, 0.0])})
    env.reset(seed=0)
    result = env.step(ZERO)
    assert result.terminated
    assert not result.truncated
    assert result.reward == 10.0
    assert not env.active
    with pytest.raises(EnvError):
        env.step(ZERO)


def test_time_limit_truncates():
    env = make_env(max_steps=5)
    env.reset(seed=1)
    for i in range(5):
        result = env.step(ZERO)
    assert result.truncated and not result.terminated
    assert env.step_count == 5
    with pytest.raises(EnvError):
        env.step(ZERO)


def test_goal_on_final_step_terminated_wins():
    probe = make_env()
    probe.reset(seed=0)
    tip = probe.sim.tip_position()
    env = make_env(targets={"here": tip}, max_steps=1)
    env.reset(seed=0)
    result = env.step(ZERO)
    assert result.terminated
    assert not result.truncated


def test_episode_never_exceeds_max_steps():
    env = make_env(max_steps=8)
    rng = np.random.default_rng(3)
    env.reset(seed=3)
    steps = 0
    while env.active:
        env.step(rng.uniform(-1, 1, size=2))
        steps += 1
    assert steps <= 8


# ------------------------------------------------------------ observations


def test_observation_shapes_and_ranges():
    env = make_env()
    obs = env.reset(seed=7)
    assert obs.image.shape == (80, 80)
    assert obs.mask.shape == (80, 80)
    assert obs.qpos.shape == (168,)
    assert obs.qvel.shape == (168,)
    assert obs.image.min() >= 0.0 and obs.image.max() <= 1.0
    assert set(np.unique(obs.mask)) <= {0, 1}


def test_mask_is_wire_pixels_of_image():
    env = make_env()
    obs = env.reset(seed=2)
    rng = np.random.default_rng(2)
    for _ in range(5):
        result = env.step(rng.uniform(-1, 1, size=2))
        obs = result.obs
        assert np.array_equal(obs.mask.astype(bool), obs.image == 1.0)
        assert obs.mask.any()  # the wire is always in view


def test_observation_integrity_under_random_actions():
    env = make_env(max_steps=30)
    rng = np.random.default_rng(5)
    env.reset(seed=5)
    while env.active:
        result = env.step(rng.uniform(-1.5, 1.5, size=2))
        obs = result.obs
        assert obs.image.shape == (80, 80) and obs.mask.shape == (80, 80)
        assert obs.image.min() >= 0.0 and obs.image.max() <= 1.0
        assert set(np.unique(obs.mask)) <= {0, 1}
        assert np.all(np.isfinite(obs.qpos)) and np.all(np.isfinite(obs.qvel))
        assert result.reward == 10.0 or result.reward < 0.0


# ------------------------------------------------------------- determinism


def test_same_seed_same_reset():
    env = make_env()
    a = env.reset(seed=42)
    b = env.reset(seed=42)
    assert np.array_equal(a.qpos, b.qpos)
    assert np.array_equal(a.qvel, b.qvel)
    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.mask, b.mask)


def test_different_seeds_differ():
    env = make_env()
    a = env.reset(seed=1)
    b = env.reset(seed=2)
    assert not np.array_equal(a.qpos, b.qpos)


def test_full_episode_determinism():
    actions = np.random.default_rng(8).uniform(-1, 1, size=(15, 2))
    traces = []
    for _ in range(2):
        env = make_env(max_steps=20)
        env.reset(seed=11)
        rewards, qs = [], []
        for a in actions:
            result = env.step(a)
            rewards.append(result.reward)
            qs.append(result.obs.qpos)
        traces.append((np.array(rewards), np.array(qs)))
    assert np.array_equal(traces[0][0], traces[1][0])
    assert np.array_equal(traces[0][1], traces[1][1])


# ------------------------------------------------------------------ errors


def test_unknown_target_rejected():
    cfg = free_cfg()
    with pytest.raises(EnvError, match="nowhere"):
        NavigationEnv(cfg, EnvConfig(target_name="nowhere"))
    env = make_env()
    with pytest.raises(EnvError, match="nowhere"):
        env.reset(seed=0, target_name="nowhere")


def test_config_invariants():
    with pytest.raises(EnvError):
        EnvConfig(delta=0.0)
    with pytest.raises(EnvError):
        EnvConfig(max_steps=0)


# -------------------------------------------------------------------- info


def test_info_fields_and_clamp_flag():
    env = make_env()
    env.reset(seed=6)
    result = env.step((0.5, 0.0))
    info = result.info
    assert info["tip_position"].shape == (3,)
    assert info["goal"].shape == (3,)
    assert info["distance"] == pytest.approx(
        np.linalg.norm(info["tip_position"] - info["goal"])
    )
    assert info["contact_force_magnitude"] == 0.0  # free space
    assert info["contacts"] == []
    assert not info["action_clamped"]
    result = env.step((2.0, 0.0))
    assert result.info["action_clamped"]


def test_contact_force_reported_in_phantom():
    env = NavigationEnv(load_scene_config(SCENE_PATH), EnvConfig(target_name="bca"))
    env.reset(seed=0)
    peak = 0.0
    saw_contacts = False
    for _ in range(40):
        result = env.step(FEED)
        peak = max(peak, result.info["contact_force_magnitude"])
        saw_contacts = saw_contacts or len(result.info["contacts"]) > 0
        if result.terminated or result.truncated:
            break
    assert saw_contacts
    assert peak > 0.0
    assert np.isfinite(peak)
