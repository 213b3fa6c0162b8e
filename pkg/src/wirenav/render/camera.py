"""Orthographic top-down camera.

The camera looks along -z with +y up on screen; world x maps to image
columns, world y to rows (row 0 at the top). `extent` is the world width in
meters mapped onto the full image width, so pixels are square with
w / extent pixels per meter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class CameraModel:
    center: tuple = (0.0, 0.0, 0.0)
    extent: float = 0.2
    resolution: tuple = (80, 80)  # (w, h)
    up: tuple = (0.0, 1.0, 0.0)
    kind: str = "orthographic"
    wire_min_px_radius: float = 0.0  # floor on rasterized wire radius, px

    def __post_init__(self):
        if self.kind != "orthographic":
            raise RenderError(f"unsupported camera kind {self.kind!r}")
        if not self.extent > 0:
            raise RenderError("extent must be positive")
        w, h = self.resolution
        if w < 8 or h < 8:
            raise RenderError(f"resolution must be at least 8x8, got {self.resolution}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "resolution", (int(w), int(h)))

    @property
    def px_per_m(self) -> float:
        return self.resolution[0] / self.extent

    def project(self, points: np.ndarray) -> np.ndarray:
        """World (n,3) -> continuous pixel coordinates (n,2) as (col, row)."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        w, h = self.resolution
        s = self.px_per_m
        col = (pts[:, 0] - self.center[0]) * s + w / 2.0
        row = h / 2.0 - (pts[:, 1] - self.center[1]) * s
        return np.stack([col, row], axis=1)

    def key(self):
        return (self.center, self.extent, self.resolution, self.wire_min_px_radius)


def camera_fit_bounds(lo, hi, resolution=(80, 80), margin=0.1, wire_min_px_radius=0.0):
    """Camera centered on an xy bounding box, widened by `margin` (fraction).

    Extent covers the larger of the box's x span and the x span needed so the
    y span fits the image height.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    w, h = resolution
    span_x = float(hi[0] - lo[0])
    span_y = float(hi[1] - lo[1])
    extent = max(span_x, span_y * w / h) * (1.0 + margin)
    if extent <= 0:
        raise RenderError("degenerate bounds")
    center = ((lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, 0.0)
    return CameraModel(
        center=center,
        extent=extent,
        resolution=(int(w), int(h)),
        wire_min_px_radius=wire_min_px_radius,
    )
