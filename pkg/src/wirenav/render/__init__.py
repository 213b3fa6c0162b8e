from .camera import CameraModel, RenderError, camera_fit_bounds
from .raster import (
    BACKGROUND,
    VESSEL,
    WIRE,
    rasterize_capsules,
    render_grayscale,
    render_mask,
    render_rgb,
)
from .pgm import decode_pgm, encode_pgm, read_pgm, write_pgm

__all__ = [
    "CameraModel",
    "RenderError",
    "camera_fit_bounds",
    "BACKGROUND",
    "VESSEL",
    "WIRE",
    "rasterize_capsules",
    "render_grayscale",
    "render_mask",
    "render_rgb",
    "decode_pgm",
    "encode_pgm",
    "read_pgm",
    "write_pgm",
]
