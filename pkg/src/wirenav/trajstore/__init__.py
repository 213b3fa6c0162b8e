"""Episode recording: binary container format and supervised dataset builders."""

from .container import (
    EpisodeContainer,
    TrajectoryError,
    dumps_container,
    load_container,
    loads_container,
    save_container,
)
from .datasets import BCDataset, build_bc_dataset, build_fpn_dataset
from .record import record_episode, scene_fingerprint

__all__ = [
    "EpisodeContainer",
    "TrajectoryError",
    "dumps_container",
    "loads_container",
    "save_container",
    "load_container",
    "record_episode",
    "scene_fingerprint",
    "BCDataset",
    "build_bc_dataset",
    "build_fpn_dataset",
]
