"""Procedural aortic-arch phantom: a swept-tube lumen built from convex staves.

The vessel network is a planar (z=0) centerline: a straight inflow trunk
rising from the insertion point, a semicircular arch, a short outflow
stub, and two branch vessels leaving the top of the arch. The wall is
approximated by rings of thin box-shaped staves whose inner faces are
tangent to the lumen circle, so the open channel is the inscribed polygon
of each ring. Staves that would block a branch mouth are dropped, which
is what creates the ostia. Branch ends and the outflow stub are capped;
the insertion end stays open so the wire can enter.

Everything is solved in meters in world coordinates with the insertion
point at the origin and the inflow direction +y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..collision import ConvexHull, HullSet

_Z = np.array([0.0, 0.0, 1.0])

# canonical triangulation of a box given vertices ordered as
# (-,-,-) (+,-,-) (+,+,-) (-,+,-) (-,-,+) (+,-,+) (+,+,+) (-,+,+)
_BOX_FACES = np.array(
    [
        [0, 2, 1], [0, 3, 2],
        [4, 5, 6], [4, 6, 7],
        [0, 1, 5], [0, 5, 4],
        [1, 2, 6], [1, 6, 5],
        [2, 3, 7], [2, 7, 6],
        [3, 0, 4], [3, 4, 7],
    ],
    dtype=np.int64,
)


class PhantomError(ValueError):
    """Raised when phantom parameters cannot produce a valid lumen."""


@dataclass(frozen=True)
class PhantomParams:
    """Geometry knobs, all lengths in meters and angles in radians.

    branch_angles are measured on the arch circle from the inflow side
    (0 = where the trunk meets the arch, pi = the outflow side), so the
    first angle is the branch the wire reaches first.
    """

    arch_radius: float = 0.030
    vessel_radius: float = 0.010
    branch_radius: float = 0.006
    branch_angles: tuple[float, ...] = (math.radians(65.0), math.radians(115.0))
    branch_names: tuple[str, ...] = ("bca", "lcca")
    branch_length: float = 0.045
    descending_length: float = 0.100
    ascending_length: float = 0.030
    ring_spacing: float = 0.008
    staves_per_ring: int = 12
    wall_thickness: float = 0.0025

    def __post_init__(self):
        for name in (
            "arch_radius", "vessel_radius", "branch_radius", "branch_length",
            "descending_length", "ascending_length", "ring_spacing", "wall_thickness",
        ):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0.0):
                raise PhantomError(f"{name} must be positive and finite, got {value}")
        if len(self.branch_angles) != len(self.branch_names):
            raise PhantomError("branch_angles and branch_names lengths differ")
        if len(self.branch_angles) == 0:
            raise PhantomError("need at least one branch for targets")
        if self.staves_per_ring < 6:
            raise PhantomError("staves_per_ring must be >= 6 to close the tube")
        if self.vessel_radius >= self.arch_radius:
            raise PhantomError(
                "vessel_radius must be < arch_radius or the arch lumen self-intersects"
            )
        if self.branch_radius >= self.vessel_radius:
            raise PhantomError("branch_radius must be < vessel_radius")
        for a in self.branch_angles:
            if not math.radians(20.0) <= a <= math.radians(160.0):
                raise PhantomError(
                    f"branch angle {a:.3f} rad leaves the top of the arch"
                )
        angles = sorted(self.branch_angles)
        for a, b in zip(angles, angles[1:]):
            gap = (b - a) * self.arch_radius
            if gap < 2.0 * self.branch_radius + self.wall_thickness:
                raise PhantomError(
                    f"branches {a:.3f} and {b:.3f} rad overlap on the arch"
                )
        if self.ring_spacing > 2.0 * self.vessel_radius:
            raise PhantomError("ring_spacing too coarse, tube would have holes")


@dataclass(frozen=True)
class PhantomModel:
    """Generated phantom: collision walls, targets, and render geometry.

    lumen_chains holds one (points, radius) polyline per vessel for the
    renderer; centerlines maps branch names to their (ostium-to-end)
    polylines for path planning and tests.
    """

    hulls: HullSet
    targets: dict[str, np.ndarray]
    lumen_chains: list[tuple[np.ndarray, float]]
    insertion_origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    insertion_dir: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    main_centerline: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    branch_centerlines: dict[str, np.ndarray] = field(default_factory=dict)

    def path_to(self, target_name: str, step: float = 1e-3) -> np.ndarray:
        """Centerline polyline from the insertion point to the named target,
        resampled at the given arclength step."""
        if target_name not in self.branch_centerlines:
            raise PhantomError(f"unknown target {target_name!r}")
        branch = self.branch_centerlines[target_name]
        ostium = branch[0]
        d = np.linalg.norm(self.main_centerline - ostium, axis=1)
        k = int(np.argmin(d))
        pts = np.vstack([self.main_centerline[: k + 1], branch])
        # drop the segment end at the target itself past the target point
        tgt = self.targets[target_name]
        keep = [pts[0]]
        for p in pts[1:]:
            keep.append(p)
            if np.linalg.norm(p - tgt) < step:
                break
        pts = np.array(keep)
        return _resample_polyline(pts, step)


def _resample_polyline(pts: np.ndarray, step: float) -> np.ndarray:
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(s[-1])
    n = max(2, int(math.ceil(total / step)) + 1)
    si = np.linspace(0.0, total, n)
    out = np.empty((n, 3))
    for axis in range(3):
        out[:, axis] = np.interp(si, s, pts[:, axis])
    return out


def _sample_path(points: np.ndarray, spacing: float):
    """Ring stations along a polyline: (position, unit tangent) pairs."""
    dense = _resample_polyline(points, spacing)
    tangents = np.gradient(dense, axis=0)
    tangents /= np.linalg.norm(tangents, axis=1, keepdims=True)
    return dense, tangents


def _stave_hull(center, tangent, radial_out, half_len, half_wid, inner_r, thick):
    """One wall stave: a box whose inner face is tangent to the lumen
    circle at distance inner_r from the centerline point."""
    side = np.cross(radial_out, tangent)
    f = center + radial_out * inner_r
    verts = np.empty((8, 3))
    i = 0
    for d_out in (0.0, thick):
        for d_side, d_len in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
            verts[i] = (
                f
                + radial_out * d_out
                + side * (d_side * half_wid)
                + tangent * (d_len * half_len)
            )
            i += 1
    return ConvexHull(verts, _BOX_FACES)


def _cap_hull(center, tangent_out, radius, thick):
    """Square plug closing a tube end, facing tangent_out."""
    u = np.cross(tangent_out, _Z)
    if np.linalg.norm(u) < 1e-9:
        u = np.array([1.0, 0.0, 0.0])
    u /= np.linalg.norm(u)
    v = np.cross(tangent_out, u)
    half = radius * 1.3
    verts = np.empty((8, 3))
    i = 0
    for d_out in (0.0, thick):
        for du, dv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
            verts[i] = center + tangent_out * d_out + u * (du * half) + v * (dv * half)
            i += 1
    return ConvexHull(verts, _BOX_FACES)


def _point_to_polyline(point: np.ndarray, pts: np.ndarray) -> float:
    a = pts[:-1]
    b = pts[1:]
    ab = b - a
    t = np.einsum("ij,ij->i", point - a, ab) / np.maximum(
        np.einsum("ij,ij->i", ab, ab), 1e-18
    )
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return float(np.linalg.norm(point - closest, axis=1).min())


def generate_phantom(
    params: PhantomParams | None = None, wire_radius: float | None = None
) -> PhantomModel:
    """Build the aortic-arch phantom described by params.

    wire_radius, when given, is checked against the narrowest vessel so a
    scene can refuse a wire that cannot physically fit the lumen.
    """
    p = params if params is not None else PhantomParams()
    if wire_radius is not None and p.branch_radius <= wire_radius:
        raise PhantomError(
            f"branch radius {p.branch_radius} must exceed wire radius {wire_radius}"
        )

    arch_center = np.array([-p.arch_radius, p.descending_length, 0.0])

    def arch_point(theta):
        return arch_center + p.arch_radius * np.array(
            [math.cos(theta), math.sin(theta), 0.0]
        )

    # main trunk centerline: inflow line, arch arc, outflow stub
    n_arc = max(8, int(math.ceil(math.pi * p.arch_radius / (p.ring_spacing * 0.5))))
    arc = np.array([arch_point(t) for t in np.linspace(0.0, math.pi, n_arc)])
    main_pts = np.vstack(
        [
            np.array([[0.0, 0.0, 0.0]]),
            arc,
            np.array([arc[-1] - np.array([0.0, p.ascending_length, 0.0])]),
        ]
    )

    branches = []
    for name, theta in zip(p.branch_names, p.branch_angles):
        ostium = arch_point(theta)
        direction = np.array([math.cos(theta), math.sin(theta), 0.0])
        end = ostium + direction * p.branch_length
        branches.append((name, ostium, direction, end))

    hulls: list[ConvexHull] = []
    half_len = 0.5 * p.ring_spacing * 1.7
    thick = p.wall_thickness

    def corridor_test(probe, lumen_r, corridors):
        """True when the probe point falls inside a junction corridor."""
        for ostium, direction, length, hole_r in corridors:
            s = float((probe - ostium) @ direction)
            if -lumen_r <= s <= length:
                lateral = np.linalg.norm((probe - ostium) - s * direction)
                if lateral <= hole_r:
                    return True
        return False

    def add_tube(points, lumen_r, skip_corridors, avoid_polyline, avoid_r):
        """Rings of staves along a polyline. skip_corridors punches holes
        where another vessel joins; avoid_polyline suppresses staves that
        would intrude into another lumen. Staves straddling a corridor rim
        are subdivided so the hole hugs the joining vessel to within a
        fraction of the wire diameter; the joining tube's own wall then
        overlaps the rim and the junction has no crack."""
        stations, tangents = _sample_path(points, p.ring_spacing)
        half_wid0 = lumen_r * math.tan(math.pi / p.staves_per_ring) * 1.25

        def emit(station, tangent, u, v, phi, half_len_s, half_wid_s, depth):
            radial = math.cos(phi) * u + math.sin(phi) * v
            face = station + radial * lumen_r
            side = np.cross(radial, tangent)
            probes = [
                face + tangent * (dl * half_len_s) + side * (dw * half_wid_s)
                for dl in (-1.0, 0.0, 1.0)
                for dw in (-1.0, 0.0, 1.0)
            ]
            inside = [corridor_test(pt, lumen_r, skip_corridors) for pt in probes]
            if not any(inside):
                if avoid_polyline is not None and _point_to_polyline(
                    face, avoid_polyline
                ) < avoid_r - 1e-9:
                    return
                hulls.append(
                    _stave_hull(station, tangent, radial, half_len_s,
                                half_wid_s, lumen_r, thick)
                )
                return
            if all(inside):
                return
            if depth >= 3:
                if not inside[4]:  # keep when the face center is clear
                    hulls.append(
                        _stave_hull(station, tangent, radial, half_len_s,
                                    half_wid_s, lumen_r, thick)
                    )
                return
            dphi = 0.5 * half_wid_s / lumen_r
            for dl in (-0.5, 0.5):
                for dp in (-dphi, dphi):
                    emit(
                        station + tangent * (dl * half_len_s),
                        tangent, u, v, phi + dp,
                        0.5 * half_len_s, 0.5 * half_wid_s, depth + 1,
                    )

        for station, tangent in zip(stations, tangents):
            u = np.cross(tangent, _Z)
            norm = np.linalg.norm(u)
            if norm < 1e-9:
                u = np.array([1.0, 0.0, 0.0])
            else:
                u /= norm
            v = np.cross(tangent, u)
            for k in range(p.staves_per_ring):
                phi = 2.0 * math.pi * (k + 0.5) / p.staves_per_ring
                emit(station, tangent, u, v, phi, half_len, half_wid0, 0)

    corridors = [
        (ostium, direction, p.branch_length, p.branch_radius)
        for _, ostium, direction, _ in branches
    ]
    add_tube(main_pts, p.vessel_radius, corridors, None, 0.0)
    for _, ostium, direction, end in branches:
        add_tube(
            np.vstack([ostium, end]),
            p.branch_radius,
            [],
            main_pts,
            p.vessel_radius,
        )
        hulls.append(_cap_hull(end, direction, p.branch_radius, thick))
    hulls.append(
        _cap_hull(main_pts[-1], np.array([0.0, -1.0, 0.0]), p.vessel_radius, thick)
    )

    targets = {}
    branch_centerlines = {}
    for name, ostium, direction, end in branches:
        setback = max(2.5 * p.branch_radius, 0.008)
        targets[name] = end - direction * setback
        branch_centerlines[name] = np.vstack([ostium, end - direction * setback * 0.5])

    lumen_chains = [(main_pts, p.vessel_radius)] + [
        (np.vstack([ostium, end]), p.branch_radius)
        for _, ostium, direction, end in branches
    ]

    return PhantomModel(
        hulls=HullSet("aorta-arch-phantom", hulls),
        targets=targets,
        lumen_chains=lumen_chains,
        insertion_origin=np.zeros(3),
        insertion_dir=np.array([0.0, 1.0, 0.0]),
        main_centerline=main_pts,
        branch_centerlines=branch_centerlines,
    )
