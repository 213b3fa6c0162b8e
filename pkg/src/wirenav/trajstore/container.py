"""Single-file episode container: ASCII header, little-endian payload, footer.

Layout (documented field-by-field in docs/trajectory_format.md):

  header   ASCII "key = value" lines opened by "WIRETRAJ 1" and closed by
           a bare "data" line; carries step count, DOF count, image size,
           outcome, seeds, and the environment parameters.
  payload  contiguous little-endian channels, in order: images (u8),
           masks (bitpacked u8, one padded row per frame), qpos, qvel,
           actions, forces, rewards, tips (all <f8).
  footer   13 bytes: <Q step count, <B success, <I CRC-32 of the payload.

Images are quantized to u8 exactly once, at recording time; the container
holds u8 from then on, so save/load cycles are byte-stable.
"""

import zlib
from dataclasses import dataclass, fields, replace

import numpy as np

MAGIC = "WIRETRAJ"
VERSION = 1

_FOOTER = np.dtype([("steps", "<u8"), ("success", "<u1"), ("crc", "<u4")])

# env parameters carried in the header, in serialization order
_ENV_KEYS = (
    "delta", "success_reward", "max_steps", "target_name",
    "image_size", "seed", "settle_steps", "reset_jitter",
)


class TrajectoryError(ValueError):
    """Raised on malformed containers, bad checksums, or ragged channels."""


@dataclass(frozen=True)
class EpisodeContainer:
    """One recorded episode; arrays share the step dimension T."""

    images: np.ndarray   # (T, h, w) u8, render quantized once
    masks: np.ndarray    # (T, h, w) u8 in {0, 1}
    qpos: np.ndarray     # (T, n_dof) f64
    qvel: np.ndarray     # (T, n_dof) f64
    actions: np.ndarray  # (T, 2) f64, as commanded
    forces: np.ndarray   # (T, 3) f64, net world contact force
    rewards: np.ndarray  # (T,) f64
    tips: np.ndarray     # (T, 3) f64
    success: bool
    target: str
    seed: int
    scene_hash: str
    env: dict  # environment parameters, keys = _ENV_KEYS

    def __post_init__(self):
        object.__setattr__(self, "images", np.ascontiguousarray(self.images, dtype=np.uint8))
        object.__setattr__(self, "masks", np.ascontiguousarray(self.masks, dtype=np.uint8))
        for name in ("qpos", "qvel", "actions", "forces", "rewards", "tips"):
            object.__setattr__(
                self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            )
        t = self.images.shape[0]
        if t == 0:
            raise TrajectoryError("container has no steps")
        if self.images.ndim != 3 or self.masks.shape != self.images.shape:
            raise TrajectoryError(
                f"images {self.images.shape} and masks {self.masks.shape} must be (T, h, w)"
            )
        for name, width in (
            ("qpos", None), ("qvel", None), ("actions", 2),
            ("forces", 3), ("rewards", 0), ("tips", 3),
        ):
            arr = getattr(self, name)
            if arr.shape[0] != t:
                raise TrajectoryError(f"{name} has {arr.shape[0]} steps, images have {t}")
            if width and (arr.ndim != 2 or arr.shape[1] != width):
                raise TrajectoryError(f"{name} must be (T, {width}), got {arr.shape}")
        if self.qpos.shape != self.qvel.shape or self.qpos.ndim != 2:
            raise TrajectoryError("qpos and qvel must be matching (T, n_dof) arrays")
        if self.masks.max(initial=0) > 1:
            raise TrajectoryError("masks must be binary")
        missing = [k for k in _ENV_KEYS if k not in self.env]
        if missing:
            raise TrajectoryError(f"env header missing keys: {missing}")

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def n_dof(self) -> int:
        return self.qpos.shape[1]


def _fmt(value) -> str:
    """Round-trippable scalar formatting for header values."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return "x".join(str(int(v)) for v in value)
    return str(value)


def dumps_container(c: EpisodeContainer) -> bytes:
    t, h, w = c.images.shape
    lines = [
        f"{MAGIC} {VERSION}",
        f"steps = {t}",
        f"n_dof = {c.n_dof}",
        f"image = {h}x{w}",
        f"success = {_fmt(c.success)}",
        f"seed = {c.seed}",
        f"target = {c.target}",
        f"scene_hash = {c.scene_hash}",
    ]
    for key in _ENV_KEYS:
        lines.append(f"env.{key} = {_fmt(c.env[key])}")
    lines.append("data")
    header = ("\n".join(lines) + "\n").encode("ascii")

    packed_masks = np.packbits(c.masks.reshape(t, h * w), axis=1)
    payload = b"".join(
        arr.tobytes()
        for arr in (
            c.images, packed_masks, c.qpos, c.qvel,
            c.actions, c.forces, c.rewards, c.tips,
        )
    )
    footer = np.array(
        [(t, int(c.success), zlib.crc32(payload))], dtype=_FOOTER
    ).tobytes()
    return header + payload + footer


def _parse_env_value(key: str, raw: str):
    if key in ("delta", "success_reward", "reset_jitter"):
        return float(raw)
    if key in ("max_steps", "seed", "settle_steps"):
        return int(raw)
    if key == "image_size":
        w, h = raw.split("x")
        return (int(w), int(h))
    return raw


def loads_container(blob: bytes) -> EpisodeContainer:
    end = 0
    meta = {}
    env = {}
    first = True
    while True:
        nl = blob.find(b"\n", end)
        if nl < 0:
            raise TrajectoryError("truncated header")
        line = blob[end:nl].decode("ascii")
        end = nl + 1
        if first:
            if line != f"{MAGIC} {VERSION}":
                raise TrajectoryError(f"unrecognized container signature {line!r}")
            first = False
            continue
        if line == "data":
            break
        key, _, value = line.partition(" = ")
        if not value:
            raise TrajectoryError(f"malformed header line {line!r}")
        if key.startswith("env."):
            k = key[4:]
            env[k] = _parse_env_value(k, value)
        else:
            meta[key] = value

    try:
        t = int(meta["steps"])
        n_dof = int(meta["n_dof"])
        h, w = (int(v) for v in meta["image"].split("x"))
        success = meta["success"] == "1"
        seed = int(meta["seed"])
        target = meta["target"]
        scene_hash = meta["scene_hash"]
    except KeyError as exc:
        raise TrajectoryError(f"header missing {exc.args[0]!r}") from None

    mask_row = (h * w + 7) // 8
    channels = (
        ("images", np.uint8, (t, h, w)),
        ("masks_packed", np.uint8, (t, mask_row)),
        ("qpos", "<f8", (t, n_dof)),
        ("qvel", "<f8", (t, n_dof)),
        ("actions", "<f8", (t, 2)),
        ("forces", "<f8", (t, 3)),
        ("rewards", "<f8", (t,)),
        ("tips", "<f8", (t, 3)),
    )
    need = sum(int(np.prod(shape)) * np.dtype(dt).itemsize for _, dt, shape in channels)
    payload = blob[end : end + need]
    if len(payload) != need or len(blob) < end + need + _FOOTER.itemsize:
        raise TrajectoryError("payload shorter than the header promises")
    footer = np.frombuffer(
        blob[end + need : end + need + _FOOTER.itemsize], dtype=_FOOTER
    )[0]
    if int(footer["steps"]) != t or bool(footer["success"]) != success:
        raise TrajectoryError("footer disagrees with header")
    if int(footer["crc"]) != zlib.crc32(payload):
        raise TrajectoryError("payload checksum mismatch")

    arrays = {}
    off = 0
    for name, dt, shape in channels:
        nbytes = int(np.prod(shape)) * np.dtype(dt).itemsize
        arrays[name] = np.frombuffer(payload[off : off + nbytes], dtype=dt).reshape(shape)
        off += nbytes
    masks = np.unpackbits(arrays.pop("masks_packed"), axis=1)[:, : h * w].reshape(t, h, w)
    return EpisodeContainer(
        masks=masks, success=success, target=target, seed=seed,
        scene_hash=scene_hash, env=env, **arrays,
    )


def save_container(c: EpisodeContainer, path):
    with open(path, "wb") as fh:
        fh.write(dumps_container(c))


def load_container(path) -> EpisodeContainer:
    with open(path, "rb") as fh:
        return loads_container(fh.read())
