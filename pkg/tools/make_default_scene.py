"""Regenerate the shipped default scene (aortic arch phantom + config).

Writes scenes/aortic_phantom.hulls and scenes/default.scene. Output is
deterministic, so rerunning after a phantom-generator change shows the
asset diff directly.
"""

import math
import os

import numpy as np

from wirenav.collision import ContactParams, dump_hull_set
from wirenav.scene import (
    GuidewireSpec,
    PhantomParams,
    SceneConfig,
    generate_phantom,
    save_scene_config,
)

OUT_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "scenes")


def main():
    wire = GuidewireSpec()
    phantom = generate_phantom(PhantomParams(), wire_radius=wire.radius)

    os.makedirs(OUT_DIR, exist_ok=True)
    hulls_path = os.path.join(OUT_DIR, "aortic_phantom.hulls")
    with open(hulls_path, "w", encoding="ascii") as fh:
        fh.write(dump_hull_set(phantom.hulls))

    yaw = math.atan2(phantom.insertion_dir[1], phantom.insertion_dir[0])
    config = SceneConfig(
        hullset_path=hulls_path,
        guidewire=wire,
        insertion_origin=np.asarray(phantom.insertion_origin),
        insertion_yaw=yaw,
        targets={k: np.asarray(v) for k, v in phantom.targets.items()},
        contact=ContactParams(),
        insertion_depth=0.040,
        lumen_chains=phantom.lumen_chains,
    )
    scene_path = os.path.join(OUT_DIR, "default.scene")
    save_scene_config(config, scene_path, hullset_path="aortic_phantom.hulls")

    print(f"wrote {hulls_path} ({len(phantom.hulls)} hulls)")
    print(f"wrote {scene_path} (targets: {', '.join(phantom.targets)})")


if __name__ == "__main__":
    main()
