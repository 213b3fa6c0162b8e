"""Stadium rasterizer and the three-tone scene compositor.

Capsules project to stadiums under the orthographic camera; a pixel lights
up when its center is within the projected radius of the projected axis
segment. That test is exact (no tessellation), so output is bit-identical
for identical inputs.

Scene objects are duck-typed: anything with vessel_capsules() and
wire_capsules(), both returning (P0 (n,3), P1 (n,3), radius (n,)) world-space
arrays, renders. The vessel is assumed static per scene object; its layer is
cached in a weak map keyed by the scene object.
"""

from __future__ import annotations

import weakref

import numpy as np
from numba import njit

from .camera import CameraModel

BACKGROUND = 0.0
VESSEL = 0.35
WIRE = 1.0

_vessel_layers = weakref.WeakKeyDictionary()


@njit(cache=True)
def _raster_kernel(P0, P1, R, h, w, out):
    for k in range(P0.shape[0]):
        x0, y0 = P0[k, 0], P0[k, 1]
        x1, y1 = P1[k, 0], P1[k, 1]
        r = R[k]
        if r <= 0.0:
            continue
        lo_j = int(np.floor(min(x0, x1) - r - 0.5))
        hi_j = int(np.ceil(max(x0, x1) + r + 0.5))
        lo_i = int(np.floor(min(y0, y1) - r - 0.5))
        hi_i = int(np.ceil(max(y0, y1) + r + 0.5))
        if lo_j < 0:
            lo_j = 0
        if hi_j > w - 1:
            hi_j = w - 1
        if lo_i < 0:
            lo_i = 0
        if hi_i > h - 1:
            hi_i = h - 1
        dx = x1 - x0
        dy = y1 - y0
        L2 = dx * dx + dy * dy
        r2 = r * r
        for i in range(lo_i, hi_i + 1):
            py = i + 0.5
            for j in range(lo_j, hi_j + 1):
                px = j + 0.5
                if L2 > 0.0:
                    t = ((px - x0) * dx + (py - y0) * dy) / L2
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                else:
                    t = 0.0
                ddx = px - (x0 + t * dx)
                ddy = py - (y0 + t * dy)
                if ddx * ddx + ddy * ddy <= r2:
                    out[i, j] = True


def rasterize_capsules(camera: CameraModel, p0, p1, radius, min_px_radius=0.0):
    """Boolean coverage mask of capsules under the camera."""
    w, h = camera.resolution
    out = np.zeros((h, w), dtype=np.bool_)
    p0 = np.asarray(p0, dtype=np.float64).reshape(-1, 3)
    if p0.shape[0] == 0:
        return out
    p1 = np.asarray(p1, dtype=np.float64).reshape(-1, 3)
    r_px = np.asarray(radius, dtype=np.float64).reshape(-1) * camera.px_per_m
    if min_px_radius > 0.0:
        r_px = np.maximum(r_px, min_px_radius)
    _raster_kernel(camera.project(p0), camera.project(p1), r_px, h, w, out)
    return out


def _vessel_layer(scene, camera: CameraModel):
    per_scene = _vessel_layers.setdefault(scene, {})
    key = camera.key()
    layer = per_scene.get(key)
    if layer is None:
        p0, p1, r = scene.vessel_capsules()
        layer = rasterize_capsules(camera, p0, p1, r)
        per_scene[key] = layer
    return layer


def _wire_layer(scene, camera: CameraModel):
    p0, p1, r = scene.wire_capsules()
    return rasterize_capsules(camera, p0, p1, r, min_px_radius=camera.wire_min_px_radius)


def render_grayscale(scene, camera: CameraModel) -> np.ndarray:
    """Three-tone float image: background 0.0, vessel 0.35, wire 1.0."""
    w, h = camera.resolution
    img = np.full((h, w), BACKGROUND)
    img[_vessel_layer(scene, camera)] = VESSEL
    img[_wire_layer(scene, camera)] = WIRE
    return img


def render_mask(scene, camera: CameraModel) -> np.ndarray:
    """Binary wire segmentation; equals render_grayscale(...) == 1.0."""
    return _wire_layer(scene, camera).astype(np.uint8)


def render_rgb(scene, camera: CameraModel) -> np.ndarray:
    """(h, w, 3) uint8 view of the same three-tone scene for UIs."""
    img = render_grayscale(scene, camera)
    chan = np.round(img * 255.0).astype(np.uint8)
    return np.repeat(chan[:, :, None], 3, axis=2)
