"""Signed-distance lower bounds from primitive decomposition.

An obstacle is the intersection of half-space primitives; the signed distance
to the obstacle is bounded from below by the maximum of the exact signed
distances to the individual primitives.  With the vehicle shape included, the
Minkowski difference reduces every term to a point-to-half-space distance with
a closed-form value (a minimum over the vertices of the other shape).  The
hard maximum can be replaced by a LogSumExp smoothing whose error is bounded
by log(m)/alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    ConvexPolygon,
    Pose2,
    halfspace_arrays,
    edge_normals,
    perp,
)


@dataclass(frozen=True)
class PrimitiveObstacle:
    """Convex polygonal obstacle stored with its half-space decomposition."""

    polygon: ConvexPolygon
    normals: np.ndarray  # (K, 2) outward unit normals
    offsets: np.ndarray  # (K,)

    @classmethod
    def from_polygon(cls, polygon):
        a, b = halfspace_arrays(polygon)
        a.setflags(write=False)
        b.setflags(write=False)
        return cls(polygon, a, b)


@dataclass(frozen=True)
class VehiclePrimitives:
    """Vehicle footprint in the body frame plus its current pose."""

    body: ConvexPolygon
    body_normals: np.ndarray  # (L, 2)
    pose: Pose2

    @classmethod
    def from_polygon(cls, body, pose):
        n = edge_normals(body)
        n.setflags(write=False)
        return cls(body, n, pose)

    def world_vertices(self):
        return self.body.vertices @ self.pose.rotation().T + self.pose.position

    def world_normals(self):
        return self.body_normals @ self.pose.rotation().T


@dataclass(frozen=True)
class LseConfig:
    """Sharpness and shift policy for the LogSumExp smoothing."""

    alpha: float
    shift_policy: str = "auto"  # max-of-inputs for alpha > 0, min otherwise

    def __post_init__(self):
        if self.alpha == 0.0:
            raise ValueError("alpha must be nonzero")
        if self.shift_policy not in ("auto", "max-of-inputs", "min-of-inputs"):
            raise ValueError(f"unknown shift policy {self.shift_policy!r}")


def lower_bound_point(p, obs):
    """Hard-max lower bound on sd(point, obstacle) with its gradient.

    Equals the true signed distance whenever the nearest feature is a face;
    ties break to the lowest primitive index.
    """
    vals = obs.normals @ np.asarray(p, dtype=float) - obs.offsets
    i = int(np.argmax(vals))
    return float(vals[i]), obs.normals[i].copy()


def minkdiff_obstacle_minus_vehicle_halfspace(obs, normal, offset):
    """sd(0, O - H) for a world-frame vehicle half-space H: closed form.

    O - H is itself a half-space, so the value is the minimum over the
    obstacle vertices of their signed distance to the face plane.
    """
    poly = obs.polygon if isinstance(obs, PrimitiveObstacle) else obs
    return float(np.min(poly.vertices @ np.asarray(normal, dtype=float) - offset))


def minkdiff_obstacle_halfspace_minus_vehicle(normal, offset, vehicle):
    """sd(0, P - V) for an obstacle half-space primitive P: closed form."""
    w = vehicle.world_vertices()
    return float(np.min(w @ np.asarray(normal, dtype=float) - offset))


def shape_bound_terms(vehicle, obs):
    """All K + L closed-form terms of the shape lower bound with pose gradients.

    Returns (values (K+L,), gradients (K+L, 3)); obstacle-primitive terms come
    first, vehicle-primitive terms after.
    """
    pos = vehicle.pose.position
    w = vehicle.world_vertices()  # (L, 2)
    nw = vehicle.world_normals()  # (L, 2)
    ov = obs.polygon.vertices  # (K, 2) vertices, K faces

    k = len(obs.offsets)
    ell = len(w)
    values = np.empty(k + ell)
    grads = np.zeros((k + ell, 3))

    # sd(0, P_i - V): min over vehicle vertices of their distance to face i
    per = w @ obs.normals.T - obs.offsets[None, :]  # (L, K)
    jmin = np.argmin(per, axis=0)
    values[:k] = per[jmin, np.arange(k)]
    grads[:k, :2] = obs.normals
    rv = w[jmin] - pos
    grads[:k, 2] = obs.normals[:, 0] * (-rv[:, 1]) + obs.normals[:, 1] * rv[:, 0]

    # sd(0, O - P_V,j): min over obstacle vertices of distance to vehicle face j
    q = np.einsum("ld,ld->l", nw, w)  # face-plane offsets q_j
    per_v = ov @ nw.T - q[None, :]  # (K, L)
    imin = np.argmin(per_v, axis=0)
    values[k:] = per_v[imin, np.arange(ell)]
    grads[k:, :2] = -nw
    # heading dependence through both the rotating normal and the face point
    d = ov[imin] - w  # o* - v_j
    dn = np.stack([-nw[:, 1], nw[:, 0]], axis=1)  # d n_j / d psi
    rw = w - pos
    dv = np.stack([-rw[:, 1], rw[:, 0]], axis=1)  # d v_j / d psi
    grads[k:, 2] = np.einsum("ld,ld->l", dn, d) - np.einsum("ld,ld->l", nw, dv)
    return values, grads


def lower_bound_shape(vehicle, obs):
    """Hard-max lower bound on sd(vehicle, obstacle) with pose gradient.

    Returns (value, gradient (3,), tie) where ``tie`` flags a near-tie between
    the two best terms (non-smooth point of the hard maximum).
    """
    values, grads = shape_bound_terms(vehicle, obs)
    i = int(np.argmax(values))
    tie = False
    if len(values) > 1:
        second = np.partition(values, -2)[-2]
        tie = values[i] - second < 1e-9
    return float(values[i]), grads[i].copy(), tie


def lse(values, cfg, gradients=None):
    """LogSumExp smooth maximum (alpha > 0) or minimum (alpha < 0).

    Returns (value, weights) without gradients, or (value, gradient) when
    per-value gradients are supplied; the gradient is their softmax mix.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size < 1:
        raise ValueError("need at least one value")
    a = cfg.alpha
    if cfg.shift_policy == "max-of-inputs":
        d0 = float(vals.max())
    elif cfg.shift_policy == "min-of-inputs":
        d0 = float(vals.min())
    else:
        d0 = float(vals.max()) if a > 0 else float(vals.min())
    ex = np.exp(a * (vals - d0))
    value = math.log(float(ex.sum())) / a + d0
    weights = ex / ex.sum()
    if gradients is None:
        return value, weights
    return value, np.einsum("i,i...->...", weights, np.asarray(gradients))


def lse_error_bound(m, alpha):
    """Additive LSE error bound log(m)/alpha; the safety margin d_min."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    return math.log(m) / alpha


def smooth_union_over_obstacles(bounds, alpha_union, gradients=None):
    """Smooth minimum of per-obstacle bounds (LSE with negative alpha).

    The result never exceeds the true minimum, so requiring it to stay above
    the clearance is conservative.
    """
    if alpha_union >= 0.0:
        raise ValueError("alpha_union must be negative")
    return lse(bounds, LseConfig(alpha_union), gradients)
