"""Shared test oracles: deliberately simple, brute-force implementations."""

import math

import numpy as np

from planav.geometry import ConvexPolygon


def random_convex_polygon(rng, n_min=3, n_max=8, radius=1.0, center=(0.0, 0.0)):
    """Random strictly convex polygon from sorted points on a noisy circle."""
    while True:
        n = int(rng.integers(n_min, n_max + 1))
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=n))
        if np.min(np.diff(angles, append=angles[0] + 2.0 * math.pi)) < 0.15:
            continue
        radii = rng.uniform(0.4 * radius, radius, size=n)
        pts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
        pts += np.asarray(center, dtype=float)
        try:
            return ConvexPolygon(pts)
        except Exception:
            continue


def winding_number_inside(p, vertices):
    """Point-in-polygon by winding number (boundary counts as inside)."""
    wn = 0
    n = len(vertices)
    for i in range(n):
        a = vertices[i]
        b = vertices[(i + 1) % n]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if a[1] <= p[1]:
            if b[1] > p[1] and cross > 0:
                wn += 1
        elif b[1] <= p[1] and cross < 0:
            wn -= 1
    return wn != 0


def point_segment_distance(p, a, b):
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def brute_force_distance(poly_a, poly_b):
    """Exhaustive min over all vertex-edge pairs of two disjoint convex polygons."""
    va, vb = poly_a.vertices, poly_b.vertices
    best = math.inf
    for p in va:
        for i in range(len(vb)):
            best = min(best, point_segment_distance(p, vb[i], vb[(i + 1) % len(vb)]))
    for p in vb:
        for i in range(len(va)):
            best = min(best, point_segment_distance(p, va[i], va[(i + 1) % len(va)]))
    return best


def sat_penetration(poly_a, poly_b):
    """Separating-axis sweep over all edge normals of both polygons.

    Returns the minimum translation depth (positive) when overlapping, or None
    when a separating axis exists.
    """
    best = math.inf
    for poly in (poly_a, poly_b):
        v = poly.vertices
        e = np.roll(v, -1, axis=0) - v
        normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        for n in normals:
            pa = poly_a.vertices @ n
            pb = poly_b.vertices @ n
            # translation needed along +n or -n to separate the projections
            depth = min(pa.max() - pb.min(), pb.max() - pa.min())
            if depth < 0.0:
                return None
            best = min(best, depth)
    return best


def brute_force_sd_point(p, poly):
    """Exact signed distance of a point to a convex polygon, by brute force."""
    v = poly.vertices
    d = min(
        point_segment_distance(np.asarray(p, float), v[i], v[(i + 1) % len(v)])
        for i in range(len(v))
    )
    return -d if winding_number_inside(p, v) else d


def clip_polygon_halfplane(pts, normal, offset):
    """Sutherland-Hodgman clip of a polygon by {x : normal.x <= offset}."""
    out = []
    n = len(pts)
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        da = float(np.dot(normal, a)) - offset
        db = float(np.dot(normal, b)) - offset
        if da <= 0:
            out.append(a)
        if (da < 0 < db) or (db < 0 < da):
            t = da / (da - db)
            out.append(a + t * (b - a))
    return out
