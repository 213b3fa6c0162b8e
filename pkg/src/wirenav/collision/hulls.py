"""Convex hull sets and their text document format.

A vessel phantom is stored as a list of convex hulls (triangulated). The
document format is line-oriented ASCII so it is byte-order independent and
diffs cleanly; floats are written with repr() which round-trips exactly.
"""

from __future__ import annotations

import numpy as np


class CollisionError(ValueError):
    pass


class ConvexHull:
    """Triangulated convex polytope.

    vertices: (V, 3) float64, V >= 4
    faces: (F, 3) int64 vertex index triples
    planes: (F, 4) rows (nx, ny, nz, d) with unit outward normal and
        d = max_x n.x over vertices, so every vertex satisfies n.x <= d.
    """

    def __init__(self, vertices, faces):
        V = np.ascontiguousarray(np.asarray(vertices, dtype=np.float64))
        F = np.ascontiguousarray(np.asarray(faces, dtype=np.int64))
        if V.ndim != 2 or V.shape[1] != 3 or V.shape[0] < 4:
            raise CollisionError(f"need >= 4 vertices as (V,3), got shape {V.shape}")
        if not np.all(np.isfinite(V)):
            raise CollisionError("non-finite vertex")
        if F.ndim != 2 or F.shape[1] != 3 or F.shape[0] < 4:
            raise CollisionError(f"need >= 4 triangle faces as (F,3), got shape {F.shape}")
        if F.min() < 0 or F.max() >= V.shape[0]:
            raise CollisionError("face index out of range")

        centroid = V.mean(axis=0)
        planes = np.empty((F.shape[0], 4))
        for f, (i, j, k) in enumerate(F):
            a, b, c = V[i], V[j], V[k]
            n = np.cross(b - a, c - a)
            ln = np.linalg.norm(n)
            if ln < 1e-14:
                raise CollisionError(f"degenerate face {f}")
            n = n / ln
            d_face = float(n @ a)
            if centroid @ n > d_face:
                n = -n
                d_face = float(n @ a)
            sup = float((V @ n).max())
            if sup - d_face > 1e-6:
                raise CollisionError(
                    f"convexity violation {sup - d_face:.2e} on face {f}"
                )
            planes[f, :3] = n
            planes[f, 3] = sup
        self.vertices = V
        self.faces = F
        self.planes = planes
        # triangulation repeats each geometric face; the distance kernel
        # only needs the unique planes
        keep = []
        for f in range(planes.shape[0]):
            row = planes[f]
            if not any(
                abs(row - planes[g]).sum() < 1e-9 for g in keep
            ):
                keep.append(f)
        self.face_planes = np.ascontiguousarray(planes[keep])

        # volume as tetra fan about the centroid (orientation-free)
        vol = 0.0
        for i, j, k in F:
            a, b, c = V[i] - centroid, V[j] - centroid, V[k] - centroid
            v6 = float(a @ np.cross(b, c))
            vol += abs(v6) / 6.0
        self.volume = vol
        if self.volume < 1e-15:
            raise CollisionError("hull has no volume")

        self.aabb = np.stack([V.min(axis=0), V.max(axis=0)])
        # per-face triangle coordinates, laid out for the narrowphase kernel
        self.triangles = np.ascontiguousarray(V[F])

    def contains(self, point, tol=0.0) -> bool:
        x = np.asarray(point, dtype=np.float64)
        return bool(np.all(self.planes[:, :3] @ x <= self.planes[:, 3] + tol))


class HullSet:
    """Named collection of convex hulls with cached bounds and flat arrays."""

    def __init__(self, name: str, hulls):
        if not name or any(ch in name for ch in "\r\n"):
            raise CollisionError("hull set name must be a non-empty single line")
        hulls = list(hulls)
        if not hulls:
            raise CollisionError("hull set is empty")
        self.name = name
        self.hulls = hulls
        self.aabbs = np.stack([h.aabb for h in hulls])
        self.aabb_lo = np.ascontiguousarray(self.aabbs[:, 0])
        self.aabb_hi = np.ascontiguousarray(self.aabbs[:, 1])

        # flat layout for batch kernels; faces_flat holds the deduplicated
        # planes, tris_flat the full triangulation for closest features
        self.vert_off = np.zeros(len(hulls) + 1, dtype=np.int64)
        self.plane_off = np.zeros(len(hulls) + 1, dtype=np.int64)
        self.face_off = np.zeros(len(hulls) + 1, dtype=np.int64)
        for i, h in enumerate(hulls):
            self.vert_off[i + 1] = self.vert_off[i] + h.vertices.shape[0]
            self.plane_off[i + 1] = self.plane_off[i] + h.planes.shape[0]
            self.face_off[i + 1] = self.face_off[i] + h.face_planes.shape[0]
        self.verts_flat = np.concatenate([h.vertices for h in hulls])
        self.planes_flat = np.concatenate([h.planes for h in hulls])
        self.faces_flat = np.concatenate([h.face_planes for h in hulls])
        self.tris_flat = np.concatenate([h.triangles for h in hulls])

    def __len__(self):
        return len(self.hulls)


def dump_hull_set(hs: HullSet) -> str:
    lines = [f"hullset {hs.name}", f"hulls {len(hs.hulls)}"]
    for h in hs.hulls:
        lines.append(f"hull {h.vertices.shape[0]} {h.faces.shape[0]}")
        for v in h.vertices:
            lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
        for f in h.faces:
            lines.append(f"f {int(f[0])} {int(f[1])} {int(f[2])}")
    return "\n".join(lines) + "\n"


def load_hull_set(text: str) -> HullSet:
    """Parse a hull-set document; validates convexity of every hull."""
    tokens = [ln.split() for ln in text.splitlines() if ln.strip()]
    pos = 0

    def take(expect: str):
        nonlocal pos
        if pos >= len(tokens):
            raise CollisionError(f"document truncated, expected '{expect}'")
        row = tokens[pos]
        pos += 1
        if row[0] != expect:
            raise CollisionError(f"expected '{expect}', got '{row[0]}' at line {pos}")
        return row

    head = take("hullset")
    name = " ".join(head[1:])
    count_row = take("hulls")
    try:
        n_hulls = int(count_row[1])
    except (IndexError, ValueError) as exc:
        raise CollisionError("bad hull count") from exc

    hulls = []
    for hidx in range(n_hulls):
        hdr = take("hull")
        try:
            nv, nf = int(hdr[1]), int(hdr[2])
        except (IndexError, ValueError) as exc:
            raise CollisionError(f"bad hull header for hull {hidx}") from exc
        verts = np.empty((nv, 3))
        for i in range(nv):
            row = take("v")
            if len(row) != 4:
                raise CollisionError(f"bad vertex line in hull {hidx}")
            verts[i] = [float(row[1]), float(row[2]), float(row[3])]
        faces = np.empty((nf, 3), dtype=np.int64)
        for i in range(nf):
            row = take("f")
            if len(row) != 4:
                raise CollisionError(f"bad face line in hull {hidx}")
            faces[i] = [int(row[1]), int(row[2]), int(row[3])]
        try:
            hulls.append(ConvexHull(verts, faces))
        except CollisionError as exc:
            raise CollisionError(f"hull {hidx}: {exc}") from exc
    if pos != len(tokens):
        raise CollisionError(f"trailing content at line {pos + 1}")
    return HullSet(name, hulls)
