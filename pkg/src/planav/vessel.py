"""3-DOF surface-vessel dynamics, differential flatness and the energy cost.

Model: eta_dot = R(psi) nu,  M nu_dot = -(C(nu) + D(nu)) nu + tau with a
diagonal inertia matrix (added mass included), the matching Coriolis matrix
and diagonal linear-plus-quadratic damping.  The flat output is the pose eta;
states and inputs follow algebraically from z, z_dot, z_ddot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ConvexPolygon, rot2, wrap_angle


def _default_footprint():
    # symmetric 5-vertex hull, 1.2 m long and 0.36 m wide, bow at +x
    return ConvexPolygon(
        np.array(
            [
                [0.60, 0.00],
                [0.20, 0.18],
                [-0.60, 0.18],
                [-0.60, -0.18],
                [0.20, -0.18],
            ]
        )
    )


@dataclass(frozen=True)
class VesselParams:
    """Model parameters sized for a 1.2 m unmanned surface vessel.

    The inertia is diagonal (rigid body plus added mass); damping is diagonal
    linear plus quadratic drag per axis.  All values are configuration, not
    measured ground truth.
    """

    inertia: np.ndarray = field(default_factory=lambda: np.diag([16.0, 21.0, 1.8]))
    damping_linear: np.ndarray = field(default_factory=lambda: np.diag([2.0, 7.0, 1.0]))
    damping_quadratic: np.ndarray = field(default_factory=lambda: np.array([4.0, 15.0, 1.5]))
    tau_u_max: float = 10.0
    tau_r_max: float = 5.0
    tau_u_rate_max: float = 5.0
    tau_r_rate_max: float = 2.5
    length: float = 1.2
    width: float = 0.36
    footprint: ConvexPolygon = field(default_factory=_default_footprint)

    def __post_init__(self):
        m = np.asarray(self.inertia, dtype=float)
        if m.shape != (3, 3) or np.max(np.abs(m - m.T)) > 1e-12:
            raise ValueError("inertia must be a symmetric 3x3 matrix")
        if np.any(np.linalg.eigvalsh(m) <= 0.0):
            raise ValueError("inertia must be positive definite")
        if np.max(np.abs(m - np.diag(np.diag(m)))) > 1e-12:
            raise ValueError("only diagonal inertia matrices are supported")
        for lim in (self.tau_u_max, self.tau_r_max, self.tau_u_rate_max, self.tau_r_rate_max):
            if lim <= 0.0:
                raise ValueError("actuator limits must be positive")

    @property
    def m_diag(self):
        return np.diag(np.asarray(self.inertia, dtype=float))

    @property
    def d_lin(self):
        return np.diag(np.asarray(self.damping_linear, dtype=float))

    @property
    def d_quad(self):
        return np.asarray(self.damping_quadratic, dtype=float)


@dataclass(frozen=True)
class VesselState:
    """Pose eta = (north, east, heading) and body velocities nu = (u, v, r)."""

    eta: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float).reshape(3).copy()
        nu = np.asarray(self.nu, dtype=float).reshape(3).copy()
        if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(nu))):
            raise ValueError("state must be finite")
        eta[2] = wrap_angle(eta[2])
        eta.setflags(write=False)
        nu.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "nu", nu)


def rotation3(psi):
    """Rotation of body velocities into NED rates (yaw only)."""
    out = np.eye(3)
    out[:2, :2] = rot2(psi)
    return out


def coriolis(nu, params):
    """Coriolis matrix for a diagonal inertia; skew-symmetric contribution."""
    m11, m22, _ = params.m_diag
    u, v, _ = nu
    return np.array(
        [
            [0.0, 0.0, -m22 * v],
            [0.0, 0.0, m11 * u],
            [m22 * v, -m11 * u, 0.0],
        ]
    )


def damping(nu, params):
    """Diagonal damping matrix with quadratic drag terms."""
    return np.diag(params.d_lin + params.d_quad * np.abs(nu))


def dynamics(state, tau, params):
    """Time derivative (eta_dot, nu_dot) of the vessel state."""
    nu = state.nu
    eta_dot = rotation3(state.eta[2]) @ nu
    rhs = tau - (coriolis(nu, params) + damping(nu, params)) @ nu
    nu_dot = rhs / params.m_diag
    return np.concatenate([eta_dot, nu_dot])


def flat_state(z, z_dot):
    """Vessel state from the flat output (pose) and its rate."""
    psi = z[2]
    nu = rotation3(psi).T @ np.asarray(z_dot, dtype=float)
    return VesselState(eta=np.asarray(z, dtype=float), nu=nu)


def flat_input(z, z_dot, z_ddot, params):
    """Forces/moment tau that realize the flat trajectory; exact model inversion."""
    tau, _ = flat_inputs(
        np.asarray(z, dtype=float)[None, :],
        np.asarray(z_dot, dtype=float)[None, :],
        np.asarray(z_ddot, dtype=float)[None, :],
        params,
        jacobian=False,
    )
    return tau[0]


def flat_inputs(z, z_dot, z_ddot, params, jacobian=True):
    """Vectorized flat parametrization of the inputs over sample batches.

    Returns (tau (S, 3), jac (S, 3, 7)) where the Jacobian columns are the
    partial derivatives w.r.t. (psi, zd_n, zd_e, zd_psi, zdd_n, zdd_e, zdd_psi);
    tau does not depend on the position itself.
    """
    m11, m22, m33 = params.m_diag
    dl1, dl2, dl3 = np.diag(np.asarray(params.damping_linear, dtype=float))
    dq1, dq2, dq3 = params.d_quad

    psi = z[:, 2]
    c, s = np.cos(psi), np.sin(psi)
    zd1, zd2, zd3 = z_dot[:, 0], z_dot[:, 1], z_dot[:, 2]
    zdd1, zdd2, zdd3 = z_ddot[:, 0], z_ddot[:, 1], z_ddot[:, 2]

    u = c * zd1 + s * zd2
    v = -s * zd1 + c * zd2
    r = zd3
    ud = c * zdd1 + s * zdd2 + r * v
    vd = -s * zdd1 + c * zdd2 - r * u
    rd = zdd3

    tau = np.stack(
        [
            m11 * ud - m22 * v * r + dl1 * u + dq1 * np.abs(u) * u,
            m22 * vd + m11 * u * r + dl2 * v + dq2 * np.abs(v) * v,
            m33 * rd + (m22 - m11) * u * v + dl3 * r + dq3 * np.abs(r) * r,
        ],
        axis=1,
    )
    if not jacobian:
        return tau, None

    n = len(psi)
    # partials of the body quantities w.r.t. (psi, zd1, zd2, zd3, zdd1..3)
    zeros = np.zeros(n)
    ones = np.ones(n)
    du = np.stack([v, c, s, zeros, zeros, zeros, zeros], axis=1)
    dv = np.stack([-u, -s, c, zeros, zeros, zeros, zeros], axis=1)
    dr = np.stack([zeros, zeros, zeros, ones, zeros, zeros, zeros], axis=1)
    dud = np.stack([vd, -r * s, r * c, v, c, s, zeros], axis=1)
    dvd = np.stack([-ud, -r * c, -r * s, -u, -s, c, zeros], axis=1)
    drd = np.stack([zeros, zeros, zeros, zeros, zeros, zeros, ones], axis=1)

    g1 = (dl1 + 2.0 * dq1 * np.abs(u))[:, None]
    g2 = (dl2 + 2.0 * dq2 * np.abs(v))[:, None]
    g3 = (dl3 + 2.0 * dq3 * np.abs(r))[:, None]

    jac = np.empty((n, 3, 7))
    jac[:, 0, :] = m11 * dud - m22 * (dv * r[:, None] + v[:, None] * dr) + g1 * du
    jac[:, 1, :] = m22 * dvd + m11 * (du * r[:, None] + u[:, None] * dr) + g2 * dv
    jac[:, 2, :] = m33 * drd + (m22 - m11) * (du * v[:, None] + u[:, None] * dv) + g3 * dr
    return tau, jac


def flat_velocities(z, z_dot):
    """Vectorized body velocities nu and their partials w.r.t. (psi, zd1..3)."""
    psi = z[:, 2]
    c, s = np.cos(psi), np.sin(psi)
    zd1, zd2, zd3 = z_dot[:, 0], z_dot[:, 1], z_dot[:, 2]
    u = c * zd1 + s * zd2
    v = -s * zd1 + c * zd2
    nu = np.stack([u, v, zd3], axis=1)
    n = len(psi)
    zeros = np.zeros(n)
    ones = np.ones(n)
    jac = np.empty((n, 3, 4))
    jac[:, 0, :] = np.stack([v, c, s, zeros], axis=1)
    jac[:, 1, :] = np.stack([-u, -s, c, zeros], axis=1)
    jac[:, 2, :] = np.stack([zeros, zeros, zeros, ones], axis=1)
    return nu, jac


def running_cost(tau, params):
    """Normalized actuator effort (tau_u/tau_u_max)^2 + (tau_r/tau_r_max)^2."""
    return float((tau[0] / params.tau_u_max) ** 2 + (tau[2] / params.tau_r_max) ** 2)
