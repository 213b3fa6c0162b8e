"""Scene assembly: guidewire build, vessel phantom, simulation stepping."""

from .config import ConfigError, SceneConfig, dump_scene_config, load_scene_config, save_scene_config
from .phantom import PhantomError, PhantomModel, PhantomParams, generate_phantom
from .sim import Simulation, SimulationFault, apply_action, build_scene, sim_step
from .wire import GuidewireSpec, build_guidewire, capsule_bodies

__all__ = [
    "ConfigError",
    "SceneConfig",
    "dump_scene_config",
    "load_scene_config",
    "save_scene_config",
    "PhantomError",
    "PhantomModel",
    "PhantomParams",
    "generate_phantom",
    "Simulation",
    "SimulationFault",
    "apply_action",
    "build_scene",
    "sim_step",
    "GuidewireSpec",
    "build_guidewire",
    "capsule_bodies",
]
