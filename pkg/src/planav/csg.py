"""Classic CSG obstacle regions with smooth p-norm intersection/union blending.

Regions are trees of non-negative quadratic defining functions (value 1 on the
boundary, < 1 inside) combined by the smooth approximations
``I_p(f) = (sum f_i^p)^(1/p)`` and ``U_p(f) = (sum f_i^(-p))^(-1/p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError
from .geometry import rot2

DEFAULT_P = 4

# Below this defining value a union operand is treated as exactly zero (the
# limit of U_p), avoiding the singularity at obstacle centers.
_ZERO_CLAMP = 1e-12


def approx_intersection(values, p):
    """Smooth intersection (sum of p-th powers)^(1/p); >= max of the inputs."""
    vals = np.asarray(values, dtype=float)
    _check(vals, p)
    if vals.size == 1:
        return float(vals[0])
    m = float(vals.max())
    if m == 0.0:
        return 0.0
    return m * float(np.sum((vals / m) ** p)) ** (1.0 / p)


def approx_union(values, p):
    """Smooth union (sum of (-p)-th powers)^(-1/p); <= min of the inputs."""
    vals = np.asarray(values, dtype=float)
    _check(vals, p)
    if vals.size == 1:
        return float(vals[0])
    if float(vals.min()) <= _ZERO_CLAMP:
        # limit value of U_p as any operand approaches zero
        return 0.0
    m = float(vals.min())
    return m * float(np.sum((m / vals) ** p)) ** (-1.0 / p)


def _check(vals, p):
    if vals.size < 1:
        raise ValueError("need at least one operand")
    if not (isinstance(p, (int, np.integer)) and p >= 1):
        raise ValueError("exponent p must be an integer >= 1")
    if np.any(vals < 0.0):
        raise ContractViolationError("defining-function values must be non-negative")


@dataclass(frozen=True)
class QuadricLeaf:
    """Defining function (p - center)^T shape (p - center).

    A positive definite shape gives an ellipse, a rank-one shape a slab.
    """

    center: np.ndarray
    shape: np.ndarray

    def evaluate(self, point):
        d = np.asarray(point, dtype=float) - np.asarray(self.center, dtype=float)
        a = np.asarray(self.shape, dtype=float)
        return float(d @ a @ d), 2.0 * (a @ d)


@dataclass(frozen=True)
class SmoothIntersection:
    children: tuple
    p: int = DEFAULT_P

    def evaluate(self, point):
        vals, grads = _eval_children(self.children, point)
        if len(vals) == 1:
            return vals[0], grads[0]
        m = max(vals)
        if m == 0.0:
            return 0.0, np.zeros(2)
        arr = np.asarray(vals) / m
        s = float(np.sum(arr**self.p))
        value = m * s ** (1.0 / self.p)
        # dI/df_i = (f_i / I)^(p-1)
        w = (np.asarray(vals) / value) ** (self.p - 1)
        return value, np.einsum("i,ij->j", w, np.asarray(grads))


@dataclass(frozen=True)
class SmoothUnion:
    children: tuple
    p: int = DEFAULT_P

    def evaluate(self, point):
        vals, grads = _eval_children(self.children, point)
        if len(vals) == 1:
            return vals[0], grads[0]
        if min(vals) <= _ZERO_CLAMP:
            # limit value of U_p with the zero-gradient convention
            return 0.0, np.zeros(2)
        m = min(vals)
        arr = m / np.asarray(vals)
        s = float(np.sum(arr**self.p))
        value = m * s ** (-1.0 / self.p)
        # dU/df_i = (U / f_i)^(p+1)
        w = (value / np.asarray(vals)) ** (self.p + 1)
        return value, np.einsum("i,ij->j", w, np.asarray(grads))


def _eval_children(children, point):
    vals, grads = [], []
    for c in children:
        v, g = c.evaluate(point)
        if v < 0.0:
            raise ContractViolationError("leaf defining functions must be non-negative")
        vals.append(v)
        grads.append(g)
    return vals, grads


def evaluate_region(region, point):
    """Defining value and exact chain-rule gradient at a point.

    The obstacle-avoidance constraint convention is ``1 - value <= 0``.
    """
    return region.evaluate(point)


def union_over_obstacles(regions, p=DEFAULT_P):
    """Single region whose defining function smoothly unions all obstacles."""
    regions = tuple(regions)
    if not regions:
        raise ValueError("need at least one region")
    return SmoothUnion(regions, p)


def ellipse_region(center, shape):
    return QuadricLeaf(np.asarray(center, dtype=float), np.asarray(shape, dtype=float))


def slab_region(center, normal, half_width):
    """Region between two parallel lines at distance half_width from center."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    shape = np.outer(n, n) / float(half_width) ** 2
    return QuadricLeaf(np.asarray(center, dtype=float), shape)


def rounded_rect_region(center, half_lengths, angle=0.0, p=DEFAULT_P):
    """Rounded rectangle: smooth intersection of two orthogonal slabs."""
    r = rot2(angle)
    hx, hy = float(half_lengths[0]), float(half_lengths[1])
    return SmoothIntersection(
        (
            slab_region(center, r @ np.array([1.0, 0.0]), hx),
            slab_region(center, r @ np.array([0.0, 1.0]), hy),
        ),
        p,
    )
