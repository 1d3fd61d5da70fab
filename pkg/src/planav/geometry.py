"""Planar geometric primitives: polygons, half-spaces, ellipses and poses.

Conventions: points are numpy arrays of shape (2,), angles are in radians,
polygon vertices are ordered counter-clockwise with outward edge normals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometryError

# Minimum cross product (m^2) of consecutive edges; rejects near-degenerate
# polygons before they can break the penetration solver.
CONVEXITY_TOL = 1e-12


def wrap_angle(angle):
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(float(angle), math.tau)
    if a <= -math.pi:
        a += math.tau
    return a


def perp(v):
    """Rotate a 2-vector by +90 degrees."""
    return np.array([-v[1], v[0]])


def rot2(angle):
    """2x2 rotation matrix."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Pose2:
    """Planar pose; heading is wrapped to (-pi, pi] on construction."""

    x: float
    y: float
    heading: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x, self.y, self.heading))):
            raise InvalidGeometryError("pose components must be finite")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def position(self):
        return np.array([self.x, self.y])

    def rotation(self):
        return rot2(self.heading)


@dataclass(frozen=True)
class HalfSpace:
    """The set {p : normal . p - offset <= 0} with a unit normal.

    A non-unit normal is accepted and normalized together with the offset,
    which leaves the represented set unchanged.
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.array(self.normal, dtype=float).reshape(2)
        nrm = float(np.hypot(n[0], n[1]))
        if not math.isfinite(nrm) or nrm < 1e-12:
            raise InvalidGeometryError("half-space normal must be a nonzero finite vector")
        n /= nrm
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset) / nrm)


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertex order."""

    vertices: np.ndarray  # (n, 2)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InvalidGeometryError("polygon needs at least 3 planar vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidGeometryError("polygon vertices must be finite")
        e = np.roll(v, -1, axis=0) - v
        e_next = np.roll(e, -1, axis=0)
        cross = e[:, 0] * e_next[:, 1] - e[:, 1] * e_next[:, 0]
        if np.any(cross <= CONVEXITY_TOL):
            raise InvalidGeometryError(
                "vertices must make a strictly convex counter-clockwise turn at every corner"
            )
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    def centroid(self):
        return self.vertices.mean(axis=0)


@dataclass(frozen=True)
class Ellipse:
    """Region {p : (p - center)^T shape (p - center) <= 1}."""

    center: np.ndarray
    shape: np.ndarray  # (2, 2) symmetric positive definite

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(2)
        a = np.array(self.shape, dtype=float).reshape(2, 2)
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(a))):
            raise InvalidGeometryError("ellipse parameters must be finite")
        if abs(a[0, 1] - a[1, 0]) > 1e-12:
            raise InvalidGeometryError("ellipse shape matrix must be symmetric")
        if np.any(np.linalg.eigvalsh(a) <= 0.0):
            raise InvalidGeometryError("ellipse shape matrix must be positive definite")
        c.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", a)


def edge_normals(poly):
    """Outward unit edge normals, one row per edge (edge i starts at vertex i)."""
    v = poly.vertices
    e = np.roll(v, -1, axis=0) - v
    n = np.stack([e[:, 1], -e[:, 0]], axis=1)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    return n


def halfspace_arrays(poly):
    """Half-space form (A, b) of a polygon: inside iff A p - b <= 0 rowwise."""
    a = edge_normals(poly)
    b = np.einsum("ij,ij->i", a, poly.vertices)
    return a, b


def polygon_to_halfspaces(poly):
    """Outward half-space per edge; their intersection equals the polygon."""
    a, b = halfspace_arrays(poly)
    return [HalfSpace(n, o) for n, o in zip(a, b)]


def sd_point_halfspace(p, hs):
    """Exact signed distance of a point to a half-space (negative inside)."""
    return float(np.dot(hs.normal, p) - hs.offset)


def ellipse_defining(p, e):
    """Quadratic defining value; <= 1 iff the point lies in the ellipse."""
    d = np.asarray(p, dtype=float) - e.center
    return float(d @ e.shape @ d)


def ellipse_defining_gradient(p, e):
    """Gradient of ellipse_defining with respect to the point."""
    d = np.asarray(p, dtype=float) - e.center
    return 2.0 * (e.shape @ d)


def support(poly, direction):
    """Vertex maximizing direction . vertex; ties break to the lowest index."""
    d = np.asarray(direction, dtype=float)
    if float(np.hypot(d[0], d[1])) < 1e-15:
        raise ValueError("support direction must be nonzero")
    dots = poly.vertices @ d
    return poly.vertices[int(np.argmax(dots))]


def transform_polygon(poly, pose):
    """Rotate by the pose heading, then translate; orientation is preserved."""
    w = poly.vertices @ pose.rotation().T + pose.position
    return ConvexPolygon(w)


def transform_vertices(vertices, pose):
    """World coordinates of body-frame vertices under a pose."""
    return np.asarray(vertices, dtype=float) @ pose.rotation().T + pose.position


def transformed_vertex_jacobians(poly, pose):
    """Jacobian of each world vertex w.r.t. (x, y, heading); shape (n, 2, 3)."""
    w = transform_polygon(poly, pose).vertices
    r = w - pose.position
    jac = np.zeros((len(w), 2, 3))
    jac[:, 0, 0] = 1.0
    jac[:, 1, 1] = 1.0
    jac[:, 0, 2] = -r[:, 1]
    jac[:, 1, 2] = r[:, 0]
    return jac


def transformed_normal_jacobians(poly, pose):
    """Jacobian of each world edge normal w.r.t. (x, y, heading); shape (n, 2, 3)."""
    n_world = edge_normals(poly) @ pose.rotation().T
    jac = np.zeros((len(n_world), 2, 3))
    jac[:, 0, 2] = -n_world[:, 1]
    jac[:, 1, 2] = n_world[:, 0]
    return jac
