"""Capsule-vs-convex-hull queries and penalty contact forces.

Signed distance convention: distance from the capsule axis segment to the
hull surface minus the capsule radius, negative once the capsule overlaps.
For an axis point inside the hull the surface distance is the (negated)
smallest face-plane gap, which for a convex polytope is exactly the distance
to the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .hulls import CollisionError, ConvexHull, HullSet


@dataclass(frozen=True)
class CapsuleShape:
    p0: np.ndarray
    p1: np.ndarray
    radius: float
    body: int

    def __post_init__(self):
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=np.float64).reshape(3))
        object.__setattr__(self, "p1", np.asarray(self.p1, dtype=np.float64).reshape(3))
        if not (self.radius > 0.0 and np.isfinite(self.radius)):
            raise CollisionError(f"capsule radius must be positive, got {self.radius}")
        if not (np.all(np.isfinite(self.p0)) and np.all(np.isfinite(self.p1))):
            raise CollisionError("capsule endpoints must be finite")


@dataclass(frozen=True)
class ContactParams:
    k_n: float = 5000.0  # N/m penalty stiffness
    k_d: float = 6.3     # N s/m, ~2 sqrt(k_n * segment mass) for the default wire
    mu: float = 0.2
    margin: float = 5e-4

    def __post_init__(self):
        if not self.k_n > 0:
            raise CollisionError("k_n must be positive")
        if self.k_d < 0 or self.mu < 0:
            raise CollisionError("k_d and mu must be non-negative")


@dataclass(frozen=True)
class Contact:
    """One capsule/hull contact. frame rows are (t1, t2, n), n = hull->capsule."""

    position: np.ndarray
    normal: np.ndarray
    depth: float
    frame: np.ndarray
    body: int
    hull: int
    force_local: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def world_force(self) -> np.ndarray:
        return self.frame.T @ self.force_local


@njit(cache=True)
def _pt_tri_params(px, py, pz, ax, ay, az, bx, by, bz, cx, cy, cz):
    """Closest point on triangle abc to p, as (v, w) with x = a + v ab + w ac.

    Scalar in and out: the narrowphase runs this in a tight loop and array
    temporaries would dominate its cost.
    """
    abx = bx - ax
    aby = by - ay
    abz = bz - az
    acx = cx - ax
    acy = cy - ay
    acz = cz - az
    apx = px - ax
    apy = py - ay
    apz = pz - az
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return 0.0, 0.0
    bpx = px - bx
    bpy = py - by
    bpz = pz - bz
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return 1.0, 0.0
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        return d1 / (d1 - d3), 0.0
    cpx = px - cx
    cpy = py - cy
    cpz = pz - cz
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return 0.0, 1.0
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        return 0.0, d2 / (d2 - d6)
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return 1.0 - w, w
    denom = 1.0 / (va + vb + vc)
    return vb * denom, vc * denom


@njit(cache=True)
def _seg_seg_params(
    p1x, p1y, p1z, q1x, q1y, q1z, p2x, p2y, p2z, q2x, q2y, q2z
):
    """Closest-approach parameters (s, t) of segments p1q1 and p2q2."""
    d1x = q1x - p1x
    d1y = q1y - p1y
    d1z = q1z - p1z
    d2x = q2x - p2x
    d2y = q2y - p2y
    d2z = q2z - p2z
    rx = p1x - p2x
    ry = p1y - p2y
    rz = p1z - p2z
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    f = d2x * rx + d2y * ry + d2z * rz
    EPS = 1e-14
    if a <= EPS and e <= EPS:
        return 0.0, 0.0
    if a <= EPS:
        return 0.0, min(max(f / e, 0.0), 1.0)
    c = d1x * rx + d1y * ry + d1z * rz
    if e <= EPS:
        return min(max(-c / a, 0.0), 1.0), 0.0
    b = d1x * d2x + d1y * d2y + d1z * d2z
    denom = a * e - b * b
    if denom > 1e-13 * a * e:
        s = min(max((b * f - c * e) / denom, 0.0), 1.0)
    else:
        s = 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = min(max(-c / a, 0.0), 1.0)
    elif t > 1.0:
        t = 1.0
        s = min(max((b - c) / a, 0.0), 1.0)
    return s, t


@njit(cache=True)
def _query_one(p0, p1, radius, planes, tris, wa, wh, dn, cutoff):
    """Signed distance and witness points for one capsule/hull pair.

    Writes the axis witness into wa, the hull witness into wh, the unit
    push-out direction into dn; returns the signed distance. Exact whenever
    the result is <= cutoff; beyond that a lower bound comes back and the
    witness outputs are left unfilled.
    """
    seg = p1 - p0
    nf = planes.shape[0]
    # the face-plane gap along the axis is a min of affine functions of t:
    # g_f(t) = av[f] + bv[f] t. Each line peaks at an endpoint, so the min
    # of endpoint maxima bounds the best achievable gap and lets far pairs
    # exit before any feature tests.
    av = np.empty(nf)
    bv = np.empty(nf)
    ub = 1e300
    for f in range(nf):
        a = planes[f, 3] - (
            planes[f, 0] * p0[0] + planes[f, 1] * p0[1] + planes[f, 2] * p0[2]
        )
        b = -(planes[f, 0] * seg[0] + planes[f, 1] * seg[1] + planes[f, 2] * seg[2])
        av[f] = a
        bv[f] = b
        e = a if a > a + b else a + b
        if e < ub:
            ub = e
    if -ub - radius > cutoff:
        return -ub - radius

    # exact maximizer of the concave piecewise-linear gap over t in [0, 1]
    # by cutting planes: keep one rising and one falling active line, move
    # to their crossing, and let any line still below it replace a side.
    a1 = 1e300
    b1 = 0.0
    a2 = 1e300
    b2 = 0.0
    for f in range(nf):
        if av[f] < a1 - 1e-15 or (av[f] < a1 + 1e-15 and bv[f] < b1):
            a1 = av[f]
            b1 = bv[f]
        v = av[f] + bv[f]
        if v < a2 + b2 - 1e-15 or (v < a2 + b2 + 1e-15 and bv[f] > b2):
            a2 = av[f]
            b2 = bv[f]
    if b1 <= 0.0:
        tbest = 0.0
        gbest = a1
    elif b2 >= 0.0:
        tbest = 1.0
        gbest = a2 + b2
    else:
        tbest = 0.0
        gbest = a1
        for _ in range(64):
            t = (a2 - a1) / (b1 - b2)
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            vmin = 1e300
            fa = 0.0
            fb = 0.0
            for f in range(nf):
                v = av[f] + bv[f] * t
                if v < vmin:
                    vmin = v
                    fa = av[f]
                    fb = bv[f]
            tbest = t
            gbest = vmin
            if vmin >= a1 + b1 * t - 1e-12:
                break
            if fb >= 0.0:
                a1 = fa
                b1 = fb
            else:
                a2 = fa
                b2 = fb
    x = np.empty(3)
    x[0] = p0[0] + seg[0] * tbest
    x[1] = p0[1] + seg[1] * tbest
    x[2] = p0[2] + seg[2] * tbest

    if gbest >= 0.0:
        # axis reaches inside (or touches): nearest face is the exit direction.
        # Ties resolve by lowest dominant axis of the normal, positive sign
        # first, then face order.
        best_f = -1
        best_axis = 99
        best_sign = 99
        for f in range(planes.shape[0]):
            gap = planes[f, 3] - (
                planes[f, 0] * x[0] + planes[f, 1] * x[1] + planes[f, 2] * x[2]
            )
            if gap > gbest + 1e-10:
                continue
            ax = 0
            mag = abs(planes[f, 0])
            if abs(planes[f, 1]) > mag:
                ax = 1
                mag = abs(planes[f, 1])
            if abs(planes[f, 2]) > mag:
                ax = 2
            sign = 0 if planes[f, ax] > 0.0 else 1
            if (
                best_f < 0
                or ax < best_axis
                or (ax == best_axis and sign < best_sign)
            ):
                best_f = f
                best_axis = ax
                best_sign = sign
        dn[0] = planes[best_f, 0]
        dn[1] = planes[best_f, 1]
        dn[2] = planes[best_f, 2]
        gap = planes[best_f, 3] - (dn[0] * x[0] + dn[1] * x[1] + dn[2] * x[2])
        wa[:] = x
        wh[0] = x[0] + gap * dn[0]
        wh[1] = x[1] + gap * dn[1]
        wh[2] = x[2] + gap * dn[2]
        return -gbest - radius

    # axis fully outside: the plane gap already bounds the distance from
    # below, so pairs beyond the cutoff skip the feature tests
    if -gbest - radius > cutoff:
        return -gbest - radius
    p0x = p0[0]
    p0y = p0[1]
    p0z = p0[2]
    p1x = p1[0]
    p1y = p1[1]
    p1z = p1[2]
    best_d2 = 1e300
    wax = way = waz = 0.0
    whx = why = whz = 0.0
    for f in range(tris.shape[0]):
        ax = tris[f, 0, 0]
        ay = tris[f, 0, 1]
        az = tris[f, 0, 2]
        bx = tris[f, 1, 0]
        by = tris[f, 1, 1]
        bz = tris[f, 1, 2]
        cx = tris[f, 2, 0]
        cy = tris[f, 2, 1]
        cz = tris[f, 2, 2]
        for edge in range(3):
            if edge == 0:
                ex, ey, ez, fx, fy, fz = ax, ay, az, bx, by, bz
            elif edge == 1:
                ex, ey, ez, fx, fy, fz = bx, by, bz, cx, cy, cz
            else:
                ex, ey, ez, fx, fy, fz = cx, cy, cz, ax, ay, az
            s, t = _seg_seg_params(
                p0x, p0y, p0z, p1x, p1y, p1z, ex, ey, ez, fx, fy, fz
            )
            gx = p0x + (p1x - p0x) * s
            gy = p0y + (p1y - p0y) * s
            gz = p0z + (p1z - p0z) * s
            hx = ex + (fx - ex) * t
            hy = ey + (fy - ey) * t
            hz = ez + (fz - ez) * t
            d2 = (gx - hx) ** 2 + (gy - hy) ** 2 + (gz - hz) ** 2
            if d2 < best_d2:
                best_d2 = d2
                wax, way, waz = gx, gy, gz
                whx, why, whz = hx, hy, hz
        for end in range(2):
            if end == 0:
                px, py, pz = p0x, p0y, p0z
            else:
                px, py, pz = p1x, p1y, p1z
            v, w = _pt_tri_params(px, py, pz, ax, ay, az, bx, by, bz, cx, cy, cz)
            hx = ax + (bx - ax) * v + (cx - ax) * w
            hy = ay + (by - ay) * v + (cy - ay) * w
            hz = az + (bz - az) * v + (cz - az) * w
            d2 = (px - hx) ** 2 + (py - hy) ** 2 + (pz - hz) ** 2
            if d2 < best_d2:
                best_d2 = d2
                wax, way, waz = px, py, pz
                whx, why, whz = hx, hy, hz
    dist = np.sqrt(best_d2)
    wa[0] = wax
    wa[1] = way
    wa[2] = waz
    wh[0] = whx
    wh[1] = why
    wh[2] = whz
    dn[0] = (wax - whx) / dist
    dn[1] = (way - why) / dist
    dn[2] = (waz - whz) / dist
    return dist - radius


@njit(cache=True)
def query_pairs_kernel(
    cap_idx, hull_idx, P0, P1, RAD, faces_flat, face_off, tris_flat, tri_off,
    cutoff,
):
    m = cap_idx.shape[0]
    sd = np.empty(m)
    WA = np.empty((m, 3))
    WH = np.empty((m, 3))
    DN = np.empty((m, 3))
    for k in range(m):
        c = cap_idx[k]
        h = hull_idx[k]
        faces = faces_flat[face_off[h] : face_off[h + 1]]
        tris = tris_flat[tri_off[h] : tri_off[h + 1]]
        sd[k] = _query_one(
            P0[c], P1[c], RAD[c], faces, tris, WA[k], WH[k], DN[k], cutoff
        )
    return sd, WA, WH, DN


@njit(cache=True)
def _broadphase_pairs(P0, P1, pad, hull_lo, hull_hi):
    """AABB-overlap (capsule, hull) index pairs.

    Capsule boxes are inflated by pad; a coarse test against the union box
    of all capsules trims the hull list before the pairwise sweep.
    """
    ncap = P0.shape[0]
    nh = hull_lo.shape[0]
    clo = np.empty((ncap, 3))
    chi = np.empty((ncap, 3))
    for k in range(ncap):
        for d in range(3):
            a = P0[k, d]
            b = P1[k, d]
            if a > b:
                a, b = b, a
            clo[k, d] = a - pad[k]
            chi[k, d] = b + pad[k]
    ulo = np.empty(3)
    uhi = np.empty(3)
    for d in range(3):
        lo = clo[0, d]
        hi = chi[0, d]
        for k in range(1, ncap):
            if clo[k, d] < lo:
                lo = clo[k, d]
            if chi[k, d] > hi:
                hi = chi[k, d]
        ulo[d] = lo
        uhi[d] = hi
    near = np.empty(nh, np.int64)
    nn = 0
    for h in range(nh):
        hit = True
        for d in range(3):
            if ulo[d] > hull_hi[h, d] or uhi[d] < hull_lo[h, d]:
                hit = False
                break
        if hit:
            near[nn] = h
            nn += 1
    cap_out = np.empty(ncap * nn, np.int64)
    hull_out = np.empty(ncap * nn, np.int64)
    m = 0
    for k in range(ncap):
        for j in range(nn):
            h = near[j]
            hit = True
            for d in range(3):
                if clo[k, d] > hull_hi[h, d] or chi[k, d] < hull_lo[h, d]:
                    hit = False
                    break
            if hit:
                cap_out[m] = k
                hull_out[m] = h
                m += 1
    return cap_out[:m].copy(), hull_out[:m].copy()


def detect_contacts_raw(P0, P1, RAD, hullset: HullSet, params: ContactParams):
    """Contacts within the margin as flat arrays, cheapest form.

    Returns (cap_idx, hull_idx, depth, position, normal); rows are sorted
    by (capsule, hull). Simulation substeps consume this directly; the
    Contact-object API below is built on top of it.
    """
    pad = RAD + params.margin
    ci, hi = _broadphase_pairs(P0, P1, pad, hullset.aabb_lo, hullset.aabb_hi)
    if ci.size == 0:
        empty = np.empty(0)
        return ci, hi, empty, np.empty((0, 3)), np.empty((0, 3))
    sd, WA, WH, DN = query_pairs_kernel(
        ci, hi, P0, P1, RAD, hullset.faces_flat, hullset.face_off,
        hullset.tris_flat, hullset.plane_off, params.margin,
    )
    keep = sd < params.margin
    depth = np.maximum(0.0, -sd[keep])
    return ci[keep], hi[keep], depth, WH[keep], DN[keep]


def capsule_hull_query(capsule: CapsuleShape, hull: ConvexHull):
    """(signed_distance, witness on hull, witness on axis, direction)."""
    if hull.volume <= 0.0 or hull.vertices.shape[0] < 4:
        raise CollisionError("degenerate hull")
    wa = np.empty(3)
    wh = np.empty(3)
    dn = np.empty(3)
    sd = _query_one(
        capsule.p0, capsule.p1, capsule.radius, hull.face_planes,
        hull.triangles, wa, wh, dn, 1e300,
    )
    return float(sd), wh, wa, dn


def _tangent_frame(n: np.ndarray) -> np.ndarray:
    e = np.zeros(3)
    e[int(np.argmin(np.abs(n)))] = 1.0
    t1 = np.cross(e, n)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return np.stack([t1, t2, n])


def _tangent_frames_batch(N: np.ndarray) -> np.ndarray:
    """Row-stacked (t1, t2, n) frames for (m, 3) unit normals; matches
    _tangent_frame elementwise."""
    m = N.shape[0]
    e = np.zeros((m, 3))
    e[np.arange(m), np.argmin(np.abs(N), axis=1)] = 1.0
    t1 = np.cross(e, N)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(N, t1)
    return np.stack([t1, t2, N], axis=1)


def detect_contacts(capsules, hullset: HullSet, params: ContactParams, broadphase=True):
    """All capsule/hull contacts closer than the margin, forces unfilled.

    Output is sorted by (body, hull) so it is independent of evaluation
    order. The AABB broadphase only ever discards pairs the narrowphase
    would reject (boxes inflated by radius + margin).
    """
    if not capsules:
        return []
    P0 = np.stack([c.p0 for c in capsules])
    P1 = np.stack([c.p1 for c in capsules])
    RAD = np.array([c.radius for c in capsules])
    bodies = np.array([c.body for c in capsules], dtype=np.int64)
    return detect_contacts_arrays(P0, P1, RAD, bodies, hullset, params, broadphase)


def detect_contacts_arrays(
    P0, P1, RAD, bodies, hullset: HullSet, params: ContactParams, broadphase=True
):
    """Array-form detect_contacts: row k is a capsule p0=P0[k], p1=P1[k],
    radius RAD[k] attached to body index bodies[k]. Skips per-capsule
    object construction so simulation substeps can call it in a loop.
    """
    ncap = P0.shape[0]
    if ncap == 0:
        return []

    if broadphase:
        ci, hi, depth, pos, DN = detect_contacts_raw(P0, P1, RAD, hullset, params)
    else:
        ci, hi = np.meshgrid(
            np.arange(ncap, dtype=np.int64),
            np.arange(len(hullset), dtype=np.int64),
            indexing="ij",
        )
        ci, hi = np.ascontiguousarray(ci.ravel()), np.ascontiguousarray(hi.ravel())
        sd, WA, WH, DN = query_pairs_kernel(
            ci, hi, P0, P1, RAD, hullset.faces_flat, hullset.face_off,
            hullset.tris_flat, hullset.plane_off, params.margin,
        )
        keep = sd < params.margin
        ci, hi, DN = ci[keep], hi[keep], DN[keep]
        depth, pos = np.maximum(0.0, -sd[keep]), WH[keep]

    frames = _tangent_frames_batch(DN) if ci.size else np.empty((0, 3, 3))
    contacts = [
        Contact(
            position=pos[k].copy(),
            normal=DN[k].copy(),
            depth=float(depth[k]),
            frame=frames[k],
            body=int(bodies[ci[k]]),
            hull=int(hi[k]),
        )
        for k in range(ci.size)
    ]
    contacts.sort(key=lambda c: (c.body, c.hull))
    return contacts


def contact_force(contact: Contact, rel_velocity, params: ContactParams) -> Contact:
    """Fill force_local: penalty normal force plus cone-clamped friction.

    rel_velocity is the world velocity of the capsule material point relative
    to the (static) hull. Zero depth produces zero force regardless of
    velocity.
    """
    if contact.depth <= 0.0:
        return replace(contact, force_local=np.zeros(3))
    v = np.asarray(rel_velocity, dtype=np.float64).reshape(3)
    t1, t2, n = contact.frame
    v_n = float(v @ n)
    f_z = max(0.0, params.k_n * contact.depth - params.k_d * v_n)
    vt1 = float(v @ t1)
    vt2 = float(v @ t2)
    vt = np.hypot(vt1, vt2)
    if vt > 1e-12 and f_z > 0.0:
        mag = min(params.k_n * vt, params.mu * f_z)
        f_x = -mag * vt1 / vt
        f_y = -mag * vt2 / vt
    else:
        f_x = f_y = 0.0
    return replace(contact, force_local=np.array([f_x, f_y, f_z]))
