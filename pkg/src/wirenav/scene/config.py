"""Scene configuration document: INI sections with explicit unit suffixes.

Keys ending in _mm or _deg are converted to meters/radians on load and
the suffix is stripped from the field name, so `segment_length_mm = 6`
and `segment_length = 0.006` both populate segment_length. Target
coordinates carry a trailing unit word instead ("x, y, z mm") because
their keys are the target names. Lumen polylines for the renderer are
stored one point per line using INI value continuation.
"""

from __future__ import annotations

import configparser
import io
import math
import os
from dataclasses import dataclass, field, fields

import numpy as np

from ..collision import ContactParams
from .wire import GuidewireSpec


class ConfigError(ValueError):
    """Raised when a scene document is malformed or violates an invariant."""


def _rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class SceneConfig:
    """Everything needed to build a Simulation, in SI units."""

    hullset_path: str | None
    guidewire: GuidewireSpec
    insertion_origin: np.ndarray
    insertion_yaw: float  # rotation of the slide axis about +z, rad
    targets: dict[str, np.ndarray]
    contact: ContactParams = field(default_factory=ContactParams)
    v_max: float = 5e-3  # slide advance per control step at a_t = 1
    omega_max: float = math.radians(15.0)  # roll per control step at a_r = 1
    control_dt: float = 0.01
    substeps: int = 10
    gravity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    # drive saturation: keeps axial push well below the sheath-guided
    # buckling load and below what could press the tip through a wall,
    # the way a slipping roller drive would
    drive_force_max: float = 6.0  # N
    drive_torque_max: float = 0.05  # N*m
    # ambient viscous drag, 1/s; dissipates slow whole-wire modes that
    # joint-level damping barely touches
    fluid_damping: float = 1.0
    # wire already fed past the insertion plane in the initial state, m;
    # the precurved tip run is built straightened when > 0
    insertion_depth: float = 0.0
    # introducer channel: lateral penalty stiffness (N/m per segment) that
    # keeps not-yet-inserted wire on the feed axis so pushing transmits
    # force instead of buckling the unsupported proximal column
    sheath_stiffness: float = 2000.0
    lumen_chains: list = field(default_factory=list)

    def __post_init__(self):
        origin = np.asarray(self.insertion_origin, dtype=np.float64).reshape(3)
        object.__setattr__(self, "insertion_origin", origin)
        if not self.targets:
            raise ConfigError("scene needs at least one target")
        targets = {}
        for name, pos in self.targets.items():
            targets[name] = np.asarray(pos, dtype=np.float64).reshape(3)
        object.__setattr__(self, "targets", targets)
        if not (self.v_max > 0.0 and self.omega_max > 0.0):
            raise ConfigError("action scales must be positive")
        if not self.control_dt > 0.0:
            raise ConfigError("control_dt must be positive")
        if not (int(self.substeps) == self.substeps and self.substeps >= 1):
            raise ConfigError("substeps must be a positive integer")
        if not (self.drive_force_max > 0.0 and self.drive_torque_max > 0.0):
            raise ConfigError("drive saturation limits must be positive")
        if self.fluid_damping < 0.0:
            raise ConfigError("fluid_damping must be >= 0")
        if self.insertion_depth < 0.0:
            raise ConfigError("insertion_depth must be >= 0")
        max_depth = 0.9 * self.guidewire.total_length
        if self.insertion_depth > max_depth:
            raise ConfigError(
                f"insertion_depth {self.insertion_depth} exceeds the usable "
                f"wire length {max_depth:.4g}"
            )
        if self.sheath_stiffness < 0.0:
            raise ConfigError("sheath_stiffness must be >= 0")

    @property
    def insertion_rot(self) -> np.ndarray:
        return _rot_z(self.insertion_yaw)


_MM = 1e-3


def _convert_key(key: str, raw: str):
    """Strip a _mm/_deg suffix and scale the value accordingly."""
    if key.endswith("_mm"):
        return key[:-3], float(raw) * _MM
    if key.endswith("_deg"):
        return key[:-4], math.radians(float(raw))
    return key, raw


def _parse_vector(raw: str) -> np.ndarray:
    """Parse "x, y, z" with an optional trailing unit word (mm)."""
    text = raw.strip()
    scale = 1.0
    for unit, factor in (("mm", _MM), ("m", 1.0)):
        if text.endswith(unit) and not text[: -len(unit)].rstrip()[-1:].isalpha():
            text = text[: -len(unit)].rstrip().rstrip(",")
            scale = factor
            break
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ConfigError(f"expected 3 components, got {raw!r}")
    return np.array([float(p) for p in parts]) * scale


def _section(parser: configparser.ConfigParser, name: str) -> dict:
    if not parser.has_section(name):
        return {}
    out = {}
    for key, raw in parser.items(name):
        k, v = _convert_key(key, raw)
        out[k] = v
    return out


def _coerce(cls, values: dict, where: str):
    """Build a dataclass from string/converted values with real types."""
    kwargs = {}
    by_name = {f.name: f for f in fields(cls)}
    for key, value in values.items():
        if key not in by_name:
            raise ConfigError(f"unknown key {key!r} in [{where}]")
        if isinstance(value, str):
            f = by_name[key]
            if f.type in ("int", int):
                value = int(value)
            else:
                value = float(value)
        elif by_name[key].type in ("int", int):
            value = int(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def load_scene_config(source) -> SceneConfig:
    """Read a scene document from a path or file object.

    Relative hullset paths resolve against the document's directory.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    base_dir = ""
    if isinstance(source, (str, os.PathLike)):
        read = parser.read(source)
        if not read:
            raise ConfigError(f"cannot read scene file {source!r}")
        base_dir = os.path.dirname(os.path.abspath(source))
    else:
        parser.read_file(source)

    scene = _section(parser, "scene")
    hullset_path = scene.pop("hullset", None)
    if hullset_path and base_dir and not os.path.isabs(hullset_path):
        hullset_path = os.path.join(base_dir, hullset_path)
    try:
        origin = _parse_vector(str(scene.pop("insertion_origin", "0 0 0")))
    except ConfigError as exc:
        raise ConfigError(f"[scene] insertion_origin: {exc}") from exc
    yaw_val = scene.pop("insertion_yaw", 0.0)
    yaw = float(yaw_val)
    gravity = scene.pop("gravity", None)
    insertion_depth = float(scene.pop("insertion_depth", 0.0))
    if scene:
        raise ConfigError(f"unknown keys in [scene]: {sorted(scene)}")

    guidewire = _coerce(GuidewireSpec, _section(parser, "guidewire"), "guidewire")
    contact = _coerce(ContactParams, _section(parser, "contact"), "contact")

    action = _section(parser, "action")
    sim = _section(parser, "sim")

    targets = {}
    if parser.has_section("targets"):
        for name, raw in parser.items("targets"):
            try:
                targets[name] = _parse_vector(raw)
            except ConfigError as exc:
                raise ConfigError(f"[targets] {name}: {exc}") from exc

    lumen_chains = []
    if parser.has_section("lumen"):
        items = dict(parser.items("lumen"))
        index = 0
        while f"chain{index}_radius_mm" in items or f"chain{index}_radius" in items:
            if f"chain{index}_radius_mm" in items:
                radius = float(items.pop(f"chain{index}_radius_mm")) * _MM
            else:
                radius = float(items.pop(f"chain{index}_radius"))
            key_mm = f"chain{index}_points_mm"
            key_m = f"chain{index}_points"
            if key_mm in items:
                raw, scale = items.pop(key_mm), _MM
            elif key_m in items:
                raw, scale = items.pop(key_m), 1.0
            else:
                raise ConfigError(f"[lumen] chain{index} has radius but no points")
            rows = [line for line in raw.splitlines() if line.strip()]
            pts = np.array(
                [[float(x) for x in row.replace(",", " ").split()] for row in rows]
            )
            if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
                raise ConfigError(f"[lumen] chain{index}: need >= 2 points of 3 coords")
            lumen_chains.append((pts * scale, radius))
            index += 1
        if items:
            raise ConfigError(f"unknown keys in [lumen]: {sorted(items)}")

    def fnum(d, key, default):
        return float(d.pop(key, default))

    kwargs = dict(
        hullset_path=hullset_path,
        guidewire=guidewire,
        insertion_origin=origin,
        insertion_yaw=yaw,
        targets=targets,
        contact=contact,
        v_max=fnum(action, "v_max", 5e-3),
        omega_max=fnum(action, "omega_max", math.radians(15.0)),
        control_dt=fnum(sim, "control_dt", 0.01),
        substeps=int(float(sim.pop("substeps", 10))),
        drive_force_max=fnum(sim, "drive_force_max", 6.0),
        drive_torque_max=fnum(sim, "drive_torque_max", 0.05),
        fluid_damping=fnum(sim, "fluid_damping", 1.0),
        insertion_depth=insertion_depth,
        sheath_stiffness=fnum(sim, "sheath_stiffness", 2000.0),
        lumen_chains=lumen_chains,
    )
    if gravity is not None:
        kwargs["gravity"] = tuple(_parse_vector(str(gravity)))
    if action:
        raise ConfigError(f"unknown keys in [action]: {sorted(action)}")
    if sim:
        raise ConfigError(f"unknown keys in [sim]: {sorted(sim)}")
    try:
        return SceneConfig(**kwargs)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def dump_scene_config(config: SceneConfig, hullset_path: str | None = None) -> str:
    """Serialize a SceneConfig to document text.

    hullset_path overrides the stored path (useful for writing a document
    next to its hull file with a relative reference).
    """
    g = config.guidewire
    out = io.StringIO()
    w = out.write
    w("[scene]\n")
    path = hullset_path if hullset_path is not None else config.hullset_path
    if path:
        w(f"hullset = {path}\n")
    ox, oy, oz = (float(v) for v in config.insertion_origin)
    w(f"insertion_origin = {ox * 1e3:.6g}, {oy * 1e3:.6g}, {oz * 1e3:.6g} mm\n")
    w(f"insertion_yaw_deg = {math.degrees(config.insertion_yaw):.6g}\n")
    w(f"insertion_depth_mm = {config.insertion_depth * 1e3:.6g}\n")
    gx, gy, gz = config.gravity
    w(f"gravity = {gx:.6g}, {gy:.6g}, {gz:.6g}\n\n")

    w("[guidewire]\n")
    w(f"n_segments = {g.n_segments}\n")
    w(f"segment_length_mm = {g.segment_length * 1e3:.6g}\n")
    w(f"radius_mm = {g.radius * 1e3:.6g}\n")
    w(f"body_stiffness = {g.body_stiffness:.6g}\n")
    w(f"tip_stiffness = {g.tip_stiffness:.6g}\n")
    w(f"tip_segments = {g.tip_segments}\n")
    w(f"tip_precurve_deg = {math.degrees(g.tip_precurve):.6g}\n")
    w(f"damping = {g.damping:.6g}\n")
    w(f"density = {g.density:.6g}\n\n")

    c = config.contact
    w("[contact]\n")
    w(f"k_n = {c.k_n:.6g}\n")
    w(f"k_d = {c.k_d:.6g}\n")
    w(f"mu = {c.mu:.6g}\n")
    w(f"margin_mm = {c.margin * 1e3:.6g}\n\n")

    w("[action]\n")
    w(f"v_max_mm = {config.v_max * 1e3:.6g}\n")
    w(f"omega_max_deg = {math.degrees(config.omega_max):.6g}\n\n")

    w("[sim]\n")
    w(f"control_dt = {config.control_dt:.6g}\n")
    w(f"substeps = {config.substeps}\n")
    w(f"drive_force_max = {config.drive_force_max:.6g}\n")
    w(f"drive_torque_max = {config.drive_torque_max:.6g}\n")
    w(f"fluid_damping = {config.fluid_damping:.6g}\n")
    w(f"sheath_stiffness = {config.sheath_stiffness:.6g}\n\n")

    w("[targets]\n")
    for name, pos in config.targets.items():
        x, y, z = (float(v) * 1e3 for v in pos)
        w(f"{name} = {x:.6g}, {y:.6g}, {z:.6g} mm\n")

    if config.lumen_chains:
        w("\n[lumen]\n")
        for i, (pts, radius) in enumerate(config.lumen_chains):
            w(f"chain{i}_radius_mm = {float(radius) * 1e3:.6g}\n")
            w(f"chain{i}_points_mm =\n")
            for row in np.asarray(pts):
                x, y, z = (float(v) * 1e3 for v in row)
                w(f"    {x:.6g}, {y:.6g}, {z:.6g}\n")
    return out.getvalue()


def save_scene_config(config: SceneConfig, path, hullset_path: str | None = None):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dump_scene_config(config, hullset_path))
