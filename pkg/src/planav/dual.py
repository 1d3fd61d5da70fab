"""Dual-variable signed-distance collision constraints.

For polytopes in half-space form, sd >= d_min holds iff feasible multipliers
exist: mu^T (A p - b) >= d_min with ||A^T mu|| = 1 for a point system, plus
lambda multipliers and the coupling V^T lambda + A^T mu = 0 when the vehicle
shape is considered.  The unit-norm equality is implemented internally in its
squared form, which removes the non-differentiability at A^T mu = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .geometry import perp


@dataclass(frozen=True)
class DualPointResiduals:
    """Residuals/Jacobians of the point-system dual constraints.

    ``ineq`` is in solver form (<= 0 feasible); ``eq`` is the squared-norm
    form ||A^T mu||^2 - 1.
    """

    ineq: float
    eq: float
    d_ineq_dp: np.ndarray  # (2,)
    d_ineq_dmu: np.ndarray  # (K,)
    d_eq_dmu: np.ndarray  # (K,)


@dataclass(frozen=True)
class DualShapeResiduals:
    """Residuals/Jacobians of the shape-aware dual constraints."""

    ineq: float
    eq_coupling: np.ndarray  # (2,) V^T lambda + A^T mu
    eq_norm: float
    d_ineq_dpose: np.ndarray  # (3,)
    d_ineq_dmu: np.ndarray  # (K,)
    d_ineq_dlam: np.ndarray  # (L,)
    d_coupling_dpose: np.ndarray  # (2, 3)
    d_coupling_dmu: np.ndarray  # (2, K)
    d_coupling_dlam: np.ndarray  # (2, L)
    d_norm_dmu: np.ndarray  # (K,)


@dataclass(frozen=True)
class DualCounts:
    constraints: int
    extra_variables: int


def dual_point_residuals(p, a, b, mu, d_min=0.0):
    """Residuals of mu^T (A p - b) >= d_min, ||A^T mu|| = 1 at a sample point."""
    p = np.asarray(p, dtype=float)
    mu = np.asarray(mu, dtype=float)
    slack = a @ p - b
    at_mu = a.T @ mu
    ineq = d_min - float(mu @ slack)
    eq = float(at_mu @ at_mu) - 1.0
    return DualPointResiduals(
        ineq=ineq,
        eq=eq,
        d_ineq_dp=-at_mu,
        d_ineq_dmu=-slack,
        d_eq_dmu=2.0 * (a @ at_mu),
    )


def dual_shape_residuals(pose, vehicle, a, b, mu, lam, d_min=0.0):
    """Residuals of the shape-aware dual constraints at one sample pose.

    ``vehicle`` is a VehiclePrimitives at ``pose``; V and q are its world
    face-normal matrix and face-plane offsets.
    """
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    w = vehicle.world_vertices()  # (L, 2) face points
    v = vehicle.world_normals()  # (L, 2) face normals
    q = np.einsum("ld,ld->l", v, w)
    at_mu = a.T @ mu

    ineq = d_min + float(lam @ q) + float(mu @ b)

    # pose dependence of q: through the face point (translation) and through
    # both normal and point under rotation
    dq_dxy = v  # (L, 2)
    pos = pose.position
    dn = np.stack([-v[:, 1], v[:, 0]], axis=1)
    rw = w - pos
    dv = np.stack([-rw[:, 1], rw[:, 0]], axis=1)
    dq_dpsi = np.einsum("ld,ld->l", dn, w) + np.einsum("ld,ld->l", v, dv)
    d_ineq_dpose = np.array(
        [float(lam @ dq_dxy[:, 0]), float(lam @ dq_dxy[:, 1]), float(lam @ dq_dpsi)]
    )

    coupling = v.T @ lam + at_mu
    d_coupling_dpose = np.zeros((2, 3))
    d_coupling_dpose[:, 2] = dn.T @ lam

    return DualShapeResiduals(
        ineq=ineq,
        eq_coupling=coupling,
        eq_norm=float(at_mu @ at_mu) - 1.0,
        d_ineq_dpose=d_ineq_dpose,
        d_ineq_dmu=b.astype(float).copy(),
        d_ineq_dlam=q,
        d_coupling_dpose=d_coupling_dpose,
        d_coupling_dmu=a.T.copy(),
        d_coupling_dlam=v.T.copy(),
        d_norm_dmu=2.0 * (a @ at_mu),
    )


def dual_counts(samples, obstacle_faces, vehicle_faces, mode):
    """Constraint and extra-variable counts of the dual formulation.

    ``obstacle_faces`` lists K_i per obstacle; ``mode`` is 'point' or 'shape'.
    """
    m = len(obstacle_faces)
    total_k = sum(obstacle_faces)
    if mode == "point":
        return DualCounts(2 * samples * m, samples * total_k)
    if mode == "shape":
        return DualCounts(
            2 * samples * m + 2 * samples * m,
            samples * total_k + samples * m * vehicle_faces,
        )
    raise ValueError(f"unknown dual mode {mode!r}")


def init_point_duals(p, a, b):
    """Educated dual guess for a sample point: activate the nearest face."""
    vals = a @ np.asarray(p, dtype=float) - b
    mu = np.zeros(len(b))
    mu[int(np.argmax(vals))] = 1.0  # unit face normal, so ||A^T mu|| = 1
    return mu


def init_shape_duals(pose, vehicle, a, b):
    """Educated dual guess with the vehicle shape: nearest obstacle face for mu,
    lambda from the vehicle faces opposing the obstacle axis (non-negative
    least squares on the coupling equality)."""
    pos = pose.position
    vals = a @ pos - b
    i = int(np.argmax(vals))
    mu = np.zeros(len(b))
    mu[i] = 1.0
    v = vehicle.world_normals()
    lam, _ = nnls(v.T, -a[i])
    return mu, lam
