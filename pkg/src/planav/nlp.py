"""Direct transcription of the planning problem over B-spline flat outputs.

The decision vector stacks the spline coefficients of the three flat channels
(north, east, heading) followed by the collision multipliers when the dual
formulation is active.  All constraint residuals use the solver convention
(equalities = 0, inequalities <= 0) and gradients are supplied through a
vector-Jacobian product so the Jacobian is never materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .astar import grid_path, path_length
from .errors import ConfigurationError
from .vessel import flat_inputs, rotation3

_TAU7_TO_G9 = np.array([2, 3, 4, 5, 6, 7, 8])  # (psi, zd1..3, zdd1..3) slots


@dataclass(frozen=True)
class SplineBasis:
    """Clamped uniform B-spline basis shared by the three flat channels."""

    n_coeffs: int = 63
    degree: int = 3
    t_e: float = 60.0
    samples: int = 61

    def __post_init__(self):
        if self.degree < 3:
            raise ConfigurationError("basis must be at least cubic for continuous z_ddot")
        if self.n_coeffs < self.degree + 5:
            raise ConfigurationError("too few coefficients for the boundary conditions")
        if self.samples < 2 or self.t_e <= 0.0:
            raise ConfigurationError("need samples >= 2 and t_e > 0")

    @property
    def knots(self):
        interior = np.linspace(0.0, self.t_e, self.n_coeffs - self.degree + 1)[1:-1]
        return np.concatenate(
            [np.zeros(self.degree + 1), interior, np.full(self.degree + 1, self.t_e)]
        )

    @property
    def times(self):
        return np.linspace(0.0, self.t_e, self.samples)

    def design_matrices(self, times=None):
        """(B0, B1, B2): value/first/second-derivative collocation matrices."""
        t = self.times if times is None else np.asarray(times, dtype=float)
        spl = BSpline(self.knots, np.eye(self.n_coeffs), self.degree)
        return spl(t), spl.derivative(1)(t), spl.derivative(2)(t)


@dataclass(frozen=True)
class FlatTrajectory:
    """Spline coefficients (n, 3) of the flat output over [0, t_e]."""

    basis: SplineBasis
    coeffs: np.ndarray

    def sample(self, times=None):
        b0, b1, b2 = self.basis.design_matrices(times)
        return b0 @ self.coeffs, b1 @ self.coeffs, b2 @ self.coeffs

    def as_vector(self):
        return self.coeffs.T.reshape(-1).copy()


@dataclass
class Evaluation:
    """One full evaluation of the NLP at a decision vector."""

    cost: float
    cost_grad: np.ndarray
    eq: np.ndarray
    ineq: np.ndarray
    nonsmooth_ineq: np.ndarray
    vjp: callable  # (w_eq, w_ineq) -> gradient over decision variables
    poses: np.ndarray
    tau: np.ndarray


class NlpProblem:
    """Cost, constraints and gradients of the transcribed planning problem."""

    def __init__(self, basis, params, start, goal, provider=None):
        self.basis = basis
        self.params = params
        self.start = start
        self.goal = goal
        self.provider = provider
        self.b0, self.b1, self.b2 = basis.design_matrices()
        self.s = basis.samples
        self.n = basis.n_coeffs
        self.n_coeff_vars = 3 * self.n
        self.n_duals = 0
        if provider is not None and hasattr(provider, "duals_per_sample"):
            self.n_duals = provider.count(self.s).extra_variables
        self.n_vars = self.n_coeff_vars + self.n_duals
        self.dt = basis.t_e / (basis.samples - 1)
        self._build_boundary()
        if provider is not None:
            block = None  # row split of the collision block is fixed per provider
            self._collision_rows = provider.count(self.s).constraints
        else:
            self._collision_rows = 0

    # -- boundary equalities (linear in the coefficients) --

    def _build_boundary(self):
        zd0 = rotation3(self.start.eta[2]) @ self.start.nu
        zde = rotation3(self.goal.eta[2]) @ self.goal.nu
        rows = []
        rhs = []
        for ch in range(3):
            for basis_row, value in (
                (self.b0[0], self.start.eta[ch]),
                (self.b1[0], zd0[ch]),
                (self.b0[-1], self.goal.eta[ch]),
                (self.b1[-1], zde[ch]),
            ):
                row = np.zeros(self.n_vars)
                row[ch * self.n : (ch + 1) * self.n] = basis_row
                rows.append(row)
                rhs.append(value)
        self.boundary_matrix = np.asarray(rows)
        self.boundary_rhs = np.asarray(rhs)

    # -- variable bounds --

    def bounds(self):
        lo = np.full(self.n_vars, -np.inf)
        hi = np.full(self.n_vars, np.inf)
        if self.n_duals:
            lo[self.n_coeff_vars :] = 0.0
        return lo, hi

    def split(self, x):
        coeffs = x[: self.n_coeff_vars].reshape(3, self.n).T
        duals = x[self.n_coeff_vars :] if self.n_duals else None
        return coeffs, duals

    def _accumulate(self, w9):
        """Map per-sample gradients w.r.t. (z, z_dot, z_ddot) onto coefficients."""
        g = np.empty((self.n, 3))
        for ch in range(3):
            g[:, ch] = (
                self.b0.T @ w9[:, ch] + self.b1.T @ w9[:, 3 + ch] + self.b2.T @ w9[:, 6 + ch]
            )
        out = np.zeros(self.n_vars)
        out[: self.n_coeff_vars] = g.T.reshape(-1)
        return out

    def evaluate(self, x):
        coeffs, duals = self.split(x)
        z = self.b0 @ coeffs
        zd = self.b1 @ coeffs
        zdd = self.b2 @ coeffs
        tau, jac7 = flat_inputs(z, zd, zdd, self.params)
        p = self.params
        s = self.s

        # cost and its gradient
        cost = float(np.sum((tau[:, 0] / p.tau_u_max) ** 2 + (tau[:, 2] / p.tau_r_max) ** 2))
        wu = 2.0 * tau[:, 0] / p.tau_u_max**2
        wr = 2.0 * tau[:, 2] / p.tau_r_max**2
        w9 = np.zeros((s, 9))
        w9[:, _TAU7_TO_G9] = wu[:, None] * jac7[:, 0, :] + wr[:, None] * jac7[:, 2, :]
        cost_grad = self._accumulate(w9)

        # equalities: boundary, sway force, collision equality rows
        eq_parts = [self.boundary_matrix @ x - self.boundary_rhs, tau[:, 1]]
        # inequalities: actuator boxes, rate boxes, collision inequality rows
        du = np.diff(tau[:, 0])
        dr = np.diff(tau[:, 2])
        ineq_parts = [
            tau[:, 0] - p.tau_u_max,
            -tau[:, 0] - p.tau_u_max,
            tau[:, 2] - p.tau_r_max,
            -tau[:, 2] - p.tau_r_max,
            du - p.tau_u_rate_max * self.dt,
            -du - p.tau_u_rate_max * self.dt,
            dr - p.tau_r_rate_max * self.dt,
            -dr - p.tau_r_rate_max * self.dt,
        ]
        nonsmooth_parts = [np.zeros(4 * s + 4 * (s - 1), dtype=bool)]

        block = None
        if self.provider is not None:
            block = self.provider.evaluate(z, duals)
            eq_mask = block.is_equality
            eq_parts.append(block.values[eq_mask])
            ineq_parts.append(block.values[~eq_mask])
            nonsmooth_parts.append(block.nonsmooth[~eq_mask])
        eq = np.concatenate(eq_parts)
        ineq = np.concatenate(ineq_parts)
        nonsmooth_ineq = np.concatenate(nonsmooth_parts)

        def vjp(w_eq, w_ineq):
            grad = self.boundary_matrix.T @ w_eq[:12]
            w9 = np.zeros((self.s, 9))
            # sway equality rows
            w9[:, _TAU7_TO_G9] += w_eq[12 : 12 + self.s, None] * jac7[:, 1, :]
            # actuator boxes
            o = 0
            wa_u = w_ineq[o : o + self.s] - w_ineq[o + self.s : o + 2 * self.s]
            wa_r = w_ineq[o + 2 * self.s : o + 3 * self.s] - w_ineq[o + 3 * self.s : o + 4 * self.s]
            o += 4 * self.s
            # rate boxes: +/- on consecutive samples
            m = self.s - 1
            wr_u = w_ineq[o : o + m] - w_ineq[o + m : o + 2 * m]
            wr_r = w_ineq[o + 2 * m : o + 3 * m] - w_ineq[o + 3 * m : o + 4 * m]
            o += 4 * m
            wa_u = wa_u.astype(float).copy()
            wa_r = wa_r.astype(float).copy()
            wa_u[1:] += wr_u
            wa_u[:-1] -= wr_u
            wa_r[1:] += wr_r
            wa_r[:-1] -= wr_r
            w9[:, _TAU7_TO_G9] += wa_u[:, None] * jac7[:, 0, :] + wa_r[:, None] * jac7[:, 2, :]
            grad = grad + self._accumulate(w9)
            if block is not None:
                w_full = np.empty(len(block.values))
                w_full[block.is_equality] = w_eq[12 + self.s :]
                w_full[~block.is_equality] = w_ineq[o:]
                pose_part = np.zeros((self.s, 9))
                np.add.at(
                    pose_part[:, :3], block.sample_index, w_full[:, None] * block.jacobian_pose
                )
                grad = grad + self._accumulate(pose_part)
                if self.n_duals:
                    grad[self.n_coeff_vars :] += block.jacobian_dual.T @ w_full
            return grad

        return Evaluation(
            cost=cost,
            cost_grad=cost_grad,
            eq=eq,
            ineq=ineq,
            nonsmooth_ineq=nonsmooth_ineq,
            vjp=vjp,
            poses=z,
            tau=tau,
        )


def fit_channel(basis, times, targets, end_values, end_slopes):
    """Least-squares spline fit with pinned boundary values and slopes."""
    b0, b1, _ = basis.design_matrices(times)
    b0e, b1e, _ = basis.design_matrices([0.0, basis.t_e])
    a = np.vstack([b0e, b1e])  # rows: value(0), value(te), slope(0), slope(te)
    rhs = np.array([end_values[0], end_values[1], end_slopes[0], end_slopes[1]])
    n = basis.n_coeffs
    kkt = np.zeros((n + 4, n + 4))
    kkt[:n, :n] = 2.0 * b0.T @ b0 + 1e-9 * np.eye(n)
    kkt[:n, n:] = a.T
    kkt[n:, :n] = a
    vec = np.concatenate([2.0 * b0.T @ targets, rhs])
    sol = np.linalg.solve(kkt, vec)
    return sol[:n]


def initial_guess(basis, params, start, goal, polygons=(), provider=None, cell=0.25):
    """A*-seeded spline initial guess plus multiplier initialization.

    Finds a shortest grid path around the (inflated) obstacles, rides it with
    a smooth speed profile meeting the boundary speeds, blends the heading
    from the path tangent into the boundary headings, and fits each channel
    by boundary-pinned least squares.
    """
    p0 = start.eta[:2]
    pe = goal.eta[:2]
    if polygons:
        waypoints = grid_path(p0, pe, polygons, cell=cell, inflation=params.width / 2.0)
        waypoints = np.vstack([p0, waypoints, pe])
    else:
        waypoints = np.vstack([p0, pe])
    seg = np.linalg.norm(np.diff(waypoints, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 1e-9])
    waypoints = waypoints[keep]
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(waypoints, axis=0), axis=1))])
    total = float(arc[-1])

    te = basis.t_e
    fine = np.linspace(0.0, te, max(4 * basis.n_coeffs, 200))
    u0 = float(start.nu[0])
    ue = float(goal.nu[0])
    if total < 1e-9:
        s_of_t = np.zeros_like(fine)
    else:
        # quadratic speed profile v(t) = a + b t + c t^2 with v(0) = u0,
        # v(te) = ue and integral equal to the path length
        a_coef = u0
        b_coef = 6.0 * total / te**2 - 2.0 * (ue + 2.0 * u0) / te
        c_coef = (ue - u0 - b_coef * te) / te**2
        s_of_t = a_coef * fine + b_coef * fine**2 / 2.0 + c_coef * fine**3 / 3.0
        s_of_t = np.clip(s_of_t, 0.0, total)
    north = np.interp(s_of_t, arc, waypoints[:, 0])
    east = np.interp(s_of_t, arc, waypoints[:, 1])

    # heading from the path tangent, blended into the boundary headings
    dn = np.gradient(north, fine)
    de = np.gradient(east, fine)
    speed = np.hypot(dn, de)
    tangent = np.arctan2(de, dn)
    tangent[speed < 1e-6] = goal.eta[2]
    psi = np.unwrap(tangent)
    blend = 0.25 * te
    w_start = np.clip(1.0 - fine / blend, 0.0, 1.0) ** 2
    w_end = np.clip(1.0 - (te - fine) / blend, 0.0, 1.0) ** 2
    psi0 = psi[0] + math.remainder(start.eta[2] - psi[0], 2.0 * math.pi)
    psie = psi[-1] + math.remainder(goal.eta[2] - psi[-1], 2.0 * math.pi)
    psi = psi + w_start * (psi0 - psi[0]) + w_end * (psie - psi[-1])

    zd0 = rotation3(start.eta[2]) @ start.nu
    zde = rotation3(goal.eta[2]) @ goal.nu
    coeffs = np.stack(
        [
            fit_channel(basis, fine, north, (start.eta[0], goal.eta[0]), (zd0[0], zde[0])),
            fit_channel(basis, fine, east, (start.eta[1], goal.eta[1]), (zd0[1], zde[1])),
            fit_channel(basis, fine, psi, (psi0, psie), (zd0[2], zde[2])),
        ],
        axis=1,
    )
    traj = FlatTrajectory(basis, coeffs)
    x0 = np.concatenate([traj.as_vector(), _initial_duals(basis, traj, provider)])
    return traj, x0


def _initial_duals(basis, traj, provider):
    if provider is None or not hasattr(provider, "init_duals"):
        return np.zeros(0)
    z, _, _ = traj.sample()
    return provider.init_duals(z)
