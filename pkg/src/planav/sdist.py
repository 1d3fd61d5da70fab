"""Signed distance between convex shapes via GJK (separation) and EPA (penetration).

The iteration runs on the Minkowski difference A - B and keeps track of the
source vertices on both shapes so that witness points, and with them analytic
gradients, can be recovered.  The sign convention: positive when disjoint,
negative penetration depth when overlapping, and the axis always points in the
direction that increases the signed distance when shape ``a`` is translated
along it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, NumericalFailureError
from .geometry import ConvexPolygon, halfspace_arrays, perp

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100

# Closest-feature axes anti-parallel within this angle mark a degenerate
# (parallel-face) contact; reported, not perturbed.
DEGENERACY_ANGLE = 1e-8


@dataclass(frozen=True)
class SignedDistanceResult:
    """Signed distance with the witness points that realize it."""

    value: float
    witness_a: np.ndarray
    witness_b: np.ndarray
    axis: np.ndarray
    degenerate: bool


@dataclass(frozen=True)
class Overlap:
    """Indicator that GJK found the shapes intersecting; seeds EPA."""

    simplex: tuple  # entries (wx, wy, ia, ib)


def _support_idx(verts, dx, dy):
    # strict '>' keeps the lowest index on exact ties
    best = 0
    best_dot = verts[0][0] * dx + verts[0][1] * dy
    for i in range(1, len(verts)):
        d = verts[i][0] * dx + verts[i][1] * dy
        if d > best_dot:
            best, best_dot = i, d
    return best


def _closest_simplex(simplex):
    """Closest point of the simplex to the origin.

    Returns (vx, vy, reduced simplex, barycentric weights, contains_origin).
    """
    if len(simplex) == 1:
        (wx, wy, _, _) = simplex[0]
        return wx, wy, simplex, (1.0,), False
    if len(simplex) == 2:
        return _closest_segment(simplex[0], simplex[1])
    return _closest_triangle(simplex)


def _closest_segment(p0, p1):
    ax, ay = p0[0], p0[1]
    bx, by = p1[0], p1[1]
    abx, aby = bx - ax, by - ay
    denom = abx * abx + aby * aby
    if denom < 1e-300:
        return ax, ay, [p0], (1.0,), False
    t = -(ax * abx + ay * aby) / denom
    if t <= 0.0:
        return ax, ay, [p0], (1.0,), False
    if t >= 1.0:
        return bx, by, [p1], (1.0,), False
    return ax + t * abx, ay + t * aby, [p0, p1], (1.0 - t, t), False


def _closest_triangle(simplex):
    p0, p1, p2 = simplex
    ax, ay = p0[0], p0[1]
    bx, by = p1[0], p1[1]
    cx, cy = p2[0], p2[1]
    # signed areas for the barycentric coordinates of the origin
    d = (by - cy) * (ax - cx) + (cx - bx) * (ay - cy)
    if abs(d) < 1e-300:
        # collinear triangle: fall back to the best edge
        cands = [
            _closest_segment(p0, p1),
            _closest_segment(p1, p2),
            _closest_segment(p0, p2),
        ]
        return min(cands, key=lambda r: r[0] * r[0] + r[1] * r[1])
    l0 = ((by - cy) * (0.0 - cx) + (cx - bx) * (0.0 - cy)) / d
    l1 = ((cy - ay) * (0.0 - cx) + (ax - cx) * (0.0 - cy)) / d
    l2 = 1.0 - l0 - l1
    if l0 >= 0.0 and l1 >= 0.0 and l2 >= 0.0:
        return 0.0, 0.0, simplex, (l0, l1, l2), True
    cands = []
    if l2 < 0.0:
        cands.append(_closest_segment(p0, p1))
    if l0 < 0.0:
        cands.append(_closest_segment(p1, p2))
    if l1 < 0.0:
        cands.append(_closest_segment(p0, p2))
    return min(cands, key=lambda r: r[0] * r[0] + r[1] * r[1])


def _gjk_core(va, vb, tol, max_iter):
    """GJK distance on vertex lists.  Returns ('distance', ...) or ('overlap', simplex)."""
    cax = sum(p[0] for p in va) / len(va)
    cay = sum(p[1] for p in va) / len(va)
    cbx = sum(p[0] for p in vb) / len(vb)
    cby = sum(p[1] for p in vb) / len(vb)
    dx, dy = cax - cbx, cay - cby
    if dx * dx + dy * dy < 1e-30:
        dx, dy = 1.0, 0.0
    ia = _support_idx(va, dx, dy)
    ib = _support_idx(vb, -dx, -dy)
    simplex = [(va[ia][0] - vb[ib][0], va[ia][1] - vb[ib][1], ia, ib)]
    vx, vy = simplex[0][0], simplex[0][1]
    lam = (1.0,)
    for _ in range(max_iter):
        v2 = vx * vx + vy * vy
        if v2 <= tol * tol:
            return "overlap", tuple(simplex)
        ia = _support_idx(va, -vx, -vy)
        ib = _support_idx(vb, vx, vy)
        wx = va[ia][0] - vb[ib][0]
        wy = va[ia][1] - vb[ib][1]
        # no significant progress toward the origin: converged
        if v2 - (vx * wx + vy * wy) <= tol * math.sqrt(v2):
            return "distance", math.sqrt(v2), tuple(simplex), lam
        if any(ia == e[2] and ib == e[3] for e in simplex):
            return "distance", math.sqrt(v2), tuple(simplex), lam
        simplex.append((wx, wy, ia, ib))
        vx, vy, simplex, lam, inside = _closest_simplex(simplex)
        if inside:
            return "overlap", tuple(simplex)
    raise NumericalFailureError(
        "GJK failed to converge within the iteration cap",
        best_bound=math.sqrt(vx * vx + vy * vy),
    )


def _witnesses(simplex, lam, va, vb):
    wax = way = wbx = wby = 0.0
    for li, (_, _, ia, ib) in zip(lam, simplex):
        wax += li * va[ia][0]
        way += li * va[ia][1]
        wbx += li * vb[ib][0]
        wby += li * vb[ib][1]
    return np.array([wax, way]), np.array([wbx, wby])


def _parallel_faces(va, vb, axis):
    """Degenerate contact: the extremal feature along the axis is a whole edge
    on both shapes, i.e. the closest features are parallel faces."""
    ax, ay = float(axis[0]), float(axis[1])

    def extremal_count(verts, dx, dy):
        dots = [p[0] * dx + p[1] * dy for p in verts]
        m = max(dots)
        return sum(1 for d in dots if m - d <= DEGENERACY_ANGLE)

    return extremal_count(va, -ax, -ay) >= 2 and extremal_count(vb, ax, ay) >= 2


def _epa_core(va, vb, simplex, tol, max_iter):
    """EPA penetration depth on an overlap simplex; returns value < 0 result data."""
    verts = [(e[0], e[1], e[2], e[3]) for e in simplex]
    # augment to at least 3 affinely independent points
    for dx, dy in ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)):
        if len(verts) >= 3 and _polygon_area(verts) > 1e-16:
            break
        ia = _support_idx(va, dx, dy)
        ib = _support_idx(vb, -dx, -dy)
        cand = (va[ia][0] - vb[ib][0], va[ia][1] - vb[ib][1], ia, ib)
        if all(abs(cand[0] - u[0]) > 1e-14 or abs(cand[1] - u[1]) > 1e-14 for u in verts):
            verts.append(cand)
    if len(verts) < 3:
        # both shapes effectively share all support points: treat as touching
        e = verts[0]
        return 0.0, np.array([va[e[2]][0], va[e[2]][1]]), np.array([vb[e[3]][0], vb[e[3]][1]]), np.array([1.0, 0.0]), True
    # order counter-clockwise around the interior point
    mx = sum(u[0] for u in verts) / len(verts)
    my = sum(u[1] for u in verts) / len(verts)
    verts.sort(key=lambda u: math.atan2(u[1] - my, u[0] - mx))
    if _polygon_area(verts) < 0.0:
        verts.reverse()

    for _ in range(max_iter):
        best_i, best_d, best_n = None, math.inf, None
        m = len(verts)
        for i in range(m):
            x0, y0 = verts[i][0], verts[i][1]
            x1, y1 = verts[(i + 1) % m][0], verts[(i + 1) % m][1]
            ex, ey = x1 - x0, y1 - y0
            enorm = math.hypot(ex, ey)
            if enorm < 1e-14:
                continue
            nx, ny = ey / enorm, -ex / enorm  # outward for CCW order
            d = nx * x0 + ny * y0
            if d < best_d:
                best_i, best_d, best_n = i, d, (nx, ny)
        nx, ny = best_n
        ia = _support_idx(va, nx, ny)
        ib = _support_idx(vb, -nx, -ny)
        sx = va[ia][0] - vb[ib][0]
        sy = va[ia][1] - vb[ib][1]
        if (sx * nx + sy * ny) - best_d <= tol:
            i0 = best_i
            i1 = (best_i + 1) % len(verts)
            p0, p1 = verts[i0], verts[i1]
            vx, vy, seg, lam, _ = _closest_segment(p0, p1)
            if len(seg) == 1:
                lam = (1.0, 0.0) if seg[0] is p0 else (0.0, 1.0)
            wa, wb = _witnesses((p0, p1), lam, va, vb)
            axis = np.array([-nx, -ny])
            return -best_d, wa, wb, axis, _parallel_faces(va, vb, axis)
        verts.insert(best_i + 1, (sx, sy, ia, ib))
    raise NumericalFailureError("EPA failed to converge within the iteration cap", best_bound=-best_d)


def _polygon_area(verts):
    s = 0.0
    m = len(verts)
    for i in range(m):
        x0, y0 = verts[i][0], verts[i][1]
        x1, y1 = verts[(i + 1) % m][0], verts[(i + 1) % m][1]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _vertex_list(shape):
    if isinstance(shape, ConvexPolygon):
        return [tuple(v) for v in shape.vertices]
    return [tuple(v) for v in np.asarray(shape, dtype=float).reshape(-1, 2)]


def gjk_distance(a, b, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Distance between two convex polygons, or an Overlap indicator.

    For disjoint shapes the result carries the Euclidean distance and the
    witness points realizing it; for intersecting shapes the terminating
    simplex is returned so EPA can be warm started.
    """
    va, vb = _vertex_list(a), _vertex_list(b)
    out = _gjk_core(va, vb, tol, max_iter)
    if out[0] == "overlap":
        return Overlap(out[1])
    _, value, simplex, lam = out
    wa, wb = _witnesses(simplex, lam, va, vb)
    axis = (wa - wb) / value if value > 0.0 else np.array([1.0, 0.0])
    return SignedDistanceResult(value, wa, wb, axis, _parallel_faces(va, vb, axis))


def epa_penetration(a, b, overlap, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Penetration depth (as a negative signed distance) for overlapping shapes."""
    if not isinstance(overlap, Overlap):
        raise ContractViolationError("epa_penetration requires the Overlap returned by gjk_distance")
    va, vb = _vertex_list(a), _vertex_list(b)
    value, wa, wb, axis, degenerate = _epa_core(va, vb, overlap.simplex, tol, max_iter)
    return SignedDistanceResult(value, wa, wb, axis, degenerate)


def signed_distance(a, b, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Signed distance: GJK when separated, EPA depth (negated) when overlapping."""
    out = gjk_distance(a, b, tol=tol, max_iter=max_iter)
    if isinstance(out, Overlap):
        return epa_penetration(a, b, out, tol=tol, max_iter=max_iter)
    return out


def sd_gradient(result, pose):
    """Gradient of the signed distance w.r.t. the pose (x, y, heading) of shape a.

    Valid when shape a is a rigid body at ``pose``; the translation part is the
    axis itself and the rotation part follows from the witness-point velocity.
    A degenerate (parallel-face) result still yields a usable local gradient;
    the caller can inspect ``result.degenerate``.
    """
    r = result.witness_a - pose.position
    return np.array(
        [result.axis[0], result.axis[1], float(result.axis @ perp(r))]
    )


def sd_point_polygon(p, poly, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Signed distance of a single point to a convex polygon (GJK/EPA core)."""
    res = signed_distance(np.asarray(p, dtype=float).reshape(1, 2), poly, tol=tol, max_iter=max_iter)
    return res.value


def sd_points_polygon(points, poly):
    """Vectorized exact signed distance of many points to one convex polygon.

    Returns (values, gradients) with gradients w.r.t. the point coordinates.
    This is the specialized point case of signed_distance: distance to the
    nearest edge/vertex outside, negated face clearance inside.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    v = poly.vertices
    e = np.roll(v, -1, axis=0) - v
    elen2 = np.einsum("ij,ij->i", e, e)
    # projection parameter of every point onto every edge
    d0 = pts[:, None, :] - v[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", d0, e) / elen2[None, :], 0.0, 1.0)
    closest = v[None, :, :] + t[:, :, None] * e[None, :, :]
    diff = pts[:, None, :] - closest
    dist_e = np.linalg.norm(diff, axis=2)
    idx = np.argmin(dist_e, axis=1)
    rows = np.arange(len(pts))
    dmin = dist_e[rows, idx]

    A, bb = halfspace_arrays(poly)
    face = pts @ A.T - bb[None, :]
    inside = np.all(face <= 0.0, axis=1)
    iface = np.argmax(face, axis=1)

    values = np.where(inside, face[rows, iface], dmin)
    grads = np.empty_like(pts)
    out = ~inside
    safe = np.where(dmin > 1e-300, dmin, 1.0)
    grads[out] = diff[rows[out], idx[out]] / safe[out, None]
    grads[inside] = A[iface[inside]]
    return values, grads
