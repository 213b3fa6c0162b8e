"""Supervised datasets assembled from recorded episodes.

Builders are pure: containers in, stacked arrays out, ordered by episode
then by step. Images come back as float in [0, 1] (the u8 quantization
already happened at recording time).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .container import EpisodeContainer, TrajectoryError


def _check_pool(containers) -> list:
    pool = list(containers)
    if not pool:
        raise TrajectoryError("no containers given")
    head = pool[0].env
    for c in pool[1:]:
        if c.env != head:
            raise TrajectoryError(
                f"mixed environment configs in pool: {c.env} vs {head}"
            )
    return pool


@dataclass(frozen=True)
class BCDataset:
    """Transition pairs for behavior cloning; image_only drops proprioception."""

    images: np.ndarray           # (N, h, w) float64 in [0, 1]
    actions: np.ndarray          # (N, 2)
    masks: Optional[np.ndarray] = None
    qpos: Optional[np.ndarray] = None
    qvel: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.images.shape[0]


def build_bc_dataset(containers, image_only: bool = False) -> BCDataset:
    """One (observation, action) pair per recorded transition."""
    pool = _check_pool(containers)
    images = np.concatenate([c.images for c in pool]) / 255.0
    actions = np.concatenate([c.actions for c in pool])
    if image_only:
        return BCDataset(images=images, actions=actions)
    return BCDataset(
        images=images,
        actions=actions,
        masks=np.concatenate([c.masks for c in pool]).astype(np.float64),
        qpos=np.concatenate([c.qpos for c in pool]),
        qvel=np.concatenate([c.qvel for c in pool]),
    )


def build_fpn_dataset(containers, enn) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(images, feature targets, force magnitudes) for force prediction.

    enn labels the feature targets: any callable(images, masks, qpos, qvel)
    returning (N, z_dim) — a parameter-bound encoder or a plain function.
    """
    pool = _check_pool(containers)
    for c in pool:
        if c.forces.shape[1] != 3:
            raise TrajectoryError("container missing the force channel")
    images = np.concatenate([c.images for c in pool]) / 255.0
    masks = np.concatenate([c.masks for c in pool]).astype(np.float64)
    qpos = np.concatenate([c.qpos for c in pool])
    qvel = np.concatenate([c.qvel for c in pool])
    z = np.asarray(enn(images, masks, qpos, qvel), dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != images.shape[0]:
        raise TrajectoryError(
            f"feature labeler returned {z.shape}, wanted ({images.shape[0]}, z_dim)"
        )
    f = np.linalg.norm(np.concatenate([c.forces for c in pool]), axis=1)
    return images, z, f
