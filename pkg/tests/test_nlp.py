import math

import numpy as np
import pytest

from planav.errors import ConfigurationError, InfeasibleScenarioError
from planav.astar import grid_path, path_length
from planav.formulations import FormulationKind, CsgBoundProvider, DualProvider
from planav.geometry import ConvexPolygon
from planav.nlp import FlatTrajectory, NlpProblem, SplineBasis, initial_guess
from planav.solver import SolveResult, SolverOptions, solve
from planav.vessel import VesselParams, VesselState


PARAMS = VesselParams()


def small_basis():
    return SplineBasis(n_coeffs=16, degree=3, t_e=30.0, samples=21)


class TestSplineBasis:
    def test_partition_of_unity(self):
        basis = SplineBasis()
        b0, _, _ = basis.design_matrices()
        assert np.allclose(b0.sum(axis=1), 1.0)

    def test_derivative_matrices_match_finite_differences(self):
        basis = small_basis()
        t = np.linspace(0.5, 29.5, 40)
        h = 1e-6
        b0p, b1p, b2p = basis.design_matrices(t + h)
        b0m, b1m, b2m = basis.design_matrices(t - h)
        _, b1, b2 = basis.design_matrices(t)
        assert np.allclose(b1, (b0p - b0m) / (2 * h), atol=1e-5)
        assert np.allclose(b2, (b1p - b1m) / (2 * h), atol=1e-5)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            SplineBasis(degree=2)
        with pytest.raises(ConfigurationError):
            SplineBasis(n_coeffs=5)

    def test_clamped_endpoint_interpolation(self):
        basis = small_basis()
        rng = np.random.default_rng(0)
        coeffs = rng.normal(size=(16, 3))
        z, _, _ = FlatTrajectory(basis, coeffs).sample([0.0, 30.0])
        assert np.allclose(z[0], coeffs[0])
        assert np.allclose(z[1], coeffs[-1])


class TestGridPath:
    def test_open_space_straight(self):
        path = grid_path([0.0, 0.0], [5.0, 0.0], [])
        assert path_length(path) < 5.5

    def test_wall_with_gap(self):
        wall_a = ConvexPolygon([[2, -6], [2.5, -6], [2.5, -1], [2, -1]])
        wall_b = ConvexPolygon([[2, 1], [2.5, 1], [2.5, 6], [2, 6]])
        path = grid_path([0.0, 0.0], [5.0, 0.0], [wall_a, wall_b])
        xs = path[(path[:, 0] > 2.0) & (path[:, 0] < 2.5)]
        assert len(xs) > 0
        assert np.all(np.abs(xs[:, 1]) < 1.0 - 0.18)

    def test_blocked(self):
        box = ConvexPolygon([[-1, -1], [6, -1], [6, 1], [-1, 1]])
        with pytest.raises(InfeasibleScenarioError):
            grid_path([0.0, 0.0], [5.0, 0.0], [box])


class ToyProblem:
    """Hand-solvable QP in the NlpProblem duck-type for the solver."""

    def __init__(self, with_inequality=False):
        self.n_vars = 2
        self.with_inequality = with_inequality

    def bounds(self):
        return np.full(2, -np.inf), np.full(2, np.inf)

    def evaluate(self, x):
        from planav.nlp import Evaluation

        if self.with_inequality:
            cost = float(x @ x)
            cost_grad = 2.0 * x
            eq = np.zeros(0)
            ineq = np.array([1.0 - x[0]])
            jac_rows = {"ineq": np.array([[-1.0, 0.0]])}
        else:
            cost = float((x[0] - 1.0) ** 2 + (x[1] - 2.0) ** 2)
            cost_grad = np.array([2.0 * (x[0] - 1.0), 2.0 * (x[1] - 2.0)])
            eq = np.array([x[0] + x[1] - 1.0])
            ineq = np.zeros(0)
            jac_rows = {"eq": np.array([[1.0, 1.0]])}

        def vjp(w_eq, w_ineq):
            g = np.zeros(2)
            if "eq" in jac_rows and len(w_eq):
                g += jac_rows["eq"].T @ w_eq
            if "ineq" in jac_rows and len(w_ineq):
                g += jac_rows["ineq"].T @ w_ineq
            return g

        return Evaluation(cost, cost_grad, eq, ineq, np.zeros(len(ineq), bool), vjp, None, None)


class TestSolverOnToyProblems:
    def test_equality_qp_matches_hand_solution(self):
        opts = SolverOptions(feasibility_tol=1e-10, stationarity_tol=1e-8)
        res = solve(ToyProblem(), np.array([5.0, -3.0]), opts)
        assert res.converged
        assert np.allclose(res.x, [0.0, 1.0], atol=1e-8)

    def test_inequality_qp(self):
        opts = SolverOptions(feasibility_tol=1e-10, stationarity_tol=1e-8)
        res = solve(ToyProblem(with_inequality=True), np.array([-2.0, 3.0]), opts)
        assert res.converged
        assert np.allclose(res.x, [1.0, 0.0], atol=1e-7)


def hexagon(cx, cy, r=1.0):
    ang = np.linspace(0, 2 * math.pi, 7)[:-1]
    return ConvexPolygon(np.stack([cx + r * np.cos(ang), cy + r * np.sin(ang)], axis=1))


def boundary_error(problem, x):
    ev = problem.evaluate(x)
    return float(np.max(np.abs(ev.eq[:12])))


class TestNlpProblem:
    def test_vjp_matches_directional_finite_differences(self):
        basis = small_basis()
        start = VesselState(eta=[0.0, 0.0, 0.0], nu=[0.0, 0.0, 0.0])
        goal = VesselState(eta=[6.0, -2.0, 0.0], nu=[0.3, 0.0, 0.0])
        polys = [hexagon(3.0, 2.0)]
        for provider in (
            None,
            CsgBoundProvider(FormulationKind("csg-bound-lse", "separate", "shape"), polys, PARAMS.footprint),
            DualProvider(FormulationKind("dual", "separate", "shape"), polys, PARAMS.footprint),
        ):
            problem = NlpProblem(basis, PARAMS, start, goal, provider)
            rng = np.random.default_rng(1)
            x = rng.normal(scale=0.5, size=problem.n_vars)
            if problem.n_duals:
                x[problem.n_coeff_vars :] = np.abs(x[problem.n_coeff_vars :])
            ev = problem.evaluate(x)
            h = 1e-6
            for _ in range(5):
                w_eq = rng.normal(size=len(ev.eq))
                w_ineq = rng.normal(size=len(ev.ineq))
                d = rng.normal(size=problem.n_vars)
                d /= np.linalg.norm(d)
                g = ev.vjp(w_eq, w_ineq)
                ep = problem.evaluate(x + h * d)
                em = problem.evaluate(x - h * d)
                fd = (w_eq @ ep.eq + w_ineq @ ep.ineq - w_eq @ em.eq - w_ineq @ em.ineq) / (2 * h)
                assert float(g @ d) == pytest.approx(fd, rel=1e-5, abs=1e-5)
                fd_cost = (ep.cost - em.cost) / (2 * h)
                assert float(ev.cost_grad @ d) == pytest.approx(fd_cost, rel=1e-5, abs=1e-6)

    def test_initial_guess_meets_boundary_conditions(self):
        basis = small_basis()
        start = VesselState(eta=[0.0, 0.0, -0.5], nu=[0.0, 0.0, 0.0])
        goal = VesselState(eta=[6.0, -2.0, 0.3], nu=[0.3, 0.0, 0.0])
        problem = NlpProblem(basis, PARAMS, start, goal)
        _, x0 = initial_guess(basis, PARAMS, start, goal)
        assert boundary_error(problem, x0) < 1e-8

    def test_obstacle_free_solve(self):
        basis = small_basis()
        start = VesselState(eta=[0.0, 0.0, 0.0], nu=[0.0, 0.0, 0.0])
        goal = VesselState(eta=[5.0, 0.0, 0.0], nu=[0.3, 0.0, 0.0])
        problem = NlpProblem(basis, PARAMS, start, goal)
        _, x0 = initial_guess(basis, PARAMS, start, goal)
        res = solve(problem, x0)
        assert res.converged, res.status
        ev = problem.evaluate(res.x)
        assert boundary_error(problem, res.x) < 1e-6
        assert np.max(np.abs(ev.tau[:, 1])) < 1e-6  # sway actuation eliminated
        assert np.max(ev.ineq) < 1e-6
        assert res.cost < 5.0
