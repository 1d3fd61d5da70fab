import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from planav.vessel import (
    VesselParams,
    VesselState,
    coriolis,
    damping,
    dynamics,
    flat_input,
    flat_inputs,
    flat_state,
    flat_velocities,
    rotation3,
    running_cost,
)


@pytest.fixture(scope="module")
def params():
    return VesselParams()


class TestModelStructure:
    def test_equilibrium_at_rest(self, params):
        state = VesselState(eta=[1.0, -2.0, 0.7], nu=[0.0, 0.0, 0.0])
        assert np.allclose(dynamics(state, np.zeros(3), params), 0.0)

    def test_coriolis_skew_symmetry(self, params):
        rng = np.random.default_rng(0)
        for _ in range(20):
            nu = rng.normal(size=3)
            c = coriolis(nu, params)
            assert np.allclose(c, -c.T)
            assert float(nu @ c @ nu) == pytest.approx(0.0, abs=1e-12)

    def test_damping_dissipates(self, params):
        rng = np.random.default_rng(1)
        for _ in range(20):
            nu = rng.normal(size=3)
            assert float(nu @ damping(nu, params) @ nu) > 0.0 or np.allclose(nu, 0.0)

    def test_unforced_energy_decays(self, params):
        # kinetic energy 0.5 nu^T M nu can only be drained by damping
        m = params.m_diag

        def rhs(_, x):
            st = VesselState(eta=x[:3], nu=x[3:])
            return dynamics(st, np.zeros(3), params)

        x0 = np.array([0.0, 0.0, 0.0, 0.8, 0.2, 0.5])
        sol = solve_ivp(rhs, (0.0, 5.0), x0, rtol=1e-9, atol=1e-9, dense_output=True)
        ts = np.linspace(0.0, 5.0, 50)
        energies = [0.5 * float(sol.sol(t)[3:] @ (m * sol.sol(t)[3:])) for t in ts]
        assert all(e2 < e1 + 1e-12 for e1, e2 in zip(energies, energies[1:]))
        assert energies[-1] < 0.1 * energies[0]

    def test_validation(self):
        with pytest.raises(ValueError):
            VesselParams(inertia=np.array([[1.0, 0.5, 0], [0, 1, 0], [0, 0, 1]]))
        with pytest.raises(ValueError):
            VesselParams(tau_u_max=-1.0)

    def test_heading_wrap(self):
        st = VesselState(eta=[0.0, 0.0, 3.0 * math.pi], nu=np.zeros(3))
        assert st.eta[2] == pytest.approx(math.pi)


class TestFlatness:
    def test_state_recovery(self):
        z = np.array([1.0, 2.0, math.pi / 3])
        z_dot = np.array([0.4, -0.1, 0.2])
        st = flat_state(z, z_dot)
        assert np.allclose(st.eta, z)
        assert np.allclose(rotation3(z[2]) @ st.nu, z_dot)

    def test_straight_line_cruise(self, params):
        # constant surge u along heading 0: tau_u balances drag exactly
        u = 0.6
        z = np.array([0.0, 0.0, 0.0])
        tau = flat_input(z, np.array([u, 0.0, 0.0]), np.zeros(3), params)
        dl1 = params.damping_linear[0, 0]
        dq1 = params.d_quad[0]
        assert tau[0] == pytest.approx(dl1 * u + dq1 * u * u)
        assert tau[1] == pytest.approx(0.0, abs=1e-12)
        assert tau[2] == pytest.approx(0.0, abs=1e-12)

    def test_round_trip_through_integration(self, params):
        # drive the simulator with the flat inputs of a smooth reference and
        # check the reference is reproduced
        rng = np.random.default_rng(7)
        a = rng.uniform(-0.3, 0.3, size=(3, 3))

        def ref(t):
            w = np.array([0.5, 0.7, 0.3])
            z = np.array([a[0] @ np.sin(w * t), a[1] @ np.sin(w * t), a[2] @ np.sin(w * t)])
            zd = np.array([a[0] @ (w * np.cos(w * t)), a[1] @ (w * np.cos(w * t)), a[2] @ (w * np.cos(w * t))])
            zdd = np.array(
                [-a[0] @ (w**2 * np.sin(w * t)), -a[1] @ (w**2 * np.sin(w * t)), -a[2] @ (w**2 * np.sin(w * t))]
            )
            return z, zd, zdd

        def rhs(t, x):
            z, zd, zdd = ref(t)
            tau = flat_input(z, zd, zdd, params)
            st = VesselState(eta=x[:3], nu=x[3:])
            return dynamics(st, tau, params)

        z0, zd0, _ = ref(0.0)
        st0 = flat_state(z0, zd0)
        sol = solve_ivp(rhs, (0.0, 6.0), np.concatenate([st0.eta, st0.nu]), rtol=1e-10, atol=1e-10)
        z_end, zd_end, _ = ref(6.0)
        st_end = flat_state(z_end, zd_end)
        assert np.allclose(sol.y[:3, -1], st_end.eta, atol=1e-6)
        assert np.allclose(sol.y[3:, -1], st_end.nu, atol=1e-6)

    def test_vectorized_matches_scalar(self, params):
        rng = np.random.default_rng(9)
        z = rng.uniform(-2, 2, size=(20, 3))
        zd = rng.uniform(-1, 1, size=(20, 3))
        zdd = rng.uniform(-1, 1, size=(20, 3))
        tau, _ = flat_inputs(z, zd, zdd, params)
        for i in range(20):
            assert np.allclose(tau[i], flat_input(z[i], zd[i], zdd[i], params))

    def test_input_jacobian_finite_differences(self, params):
        rng = np.random.default_rng(10)
        h = 1e-6
        checked = 0
        while checked < 200:
            z = rng.uniform(-2, 2, size=(1, 3))
            zd = rng.uniform(-1, 1, size=(1, 3))
            zdd = rng.uniform(-1, 1, size=(1, 3))
            tau, jac = flat_inputs(z, zd, zdd, params)
            nu, _ = flat_velocities(z, zd)
            if np.min(np.abs(nu)) < 1e-3:
                continue  # |.| kink in the quadratic drag
            fd = np.empty((3, 7))
            for k in range(7):
                zp, zdp, zddp = z.copy(), zd.copy(), zdd.copy()
                zm, zdm, zddm = z.copy(), zd.copy(), zdd.copy()
                if k == 0:
                    zp[0, 2] += h
                    zm[0, 2] -= h
                elif k < 4:
                    zdp[0, k - 1] += h
                    zdm[0, k - 1] -= h
                else:
                    zddp[0, k - 4] += h
                    zddm[0, k - 4] -= h
                tp, _ = flat_inputs(zp, zdp, zddp, params, jacobian=False)
                tm, _ = flat_inputs(zm, zdm, zddm, params, jacobian=False)
                fd[:, k] = (tp[0] - tm[0]) / (2 * h)
            assert np.allclose(jac[0], fd, rtol=1e-5, atol=1e-5)
            checked += 1

    def test_velocity_jacobian_finite_differences(self):
        rng = np.random.default_rng(11)
        h = 1e-6
        z = rng.uniform(-2, 2, size=(50, 3))
        zd = rng.uniform(-1, 1, size=(50, 3))
        _, jac = flat_velocities(z, zd)
        for k in range(4):
            zp, zdp = z.copy(), zd.copy()
            zm, zdm = z.copy(), zd.copy()
            if k == 0:
                zp[:, 2] += h
                zm[:, 2] -= h
            else:
                zdp[:, k - 1] += h
                zdm[:, k - 1] -= h
            fp, _ = flat_velocities(zp, zdp)
            fm, _ = flat_velocities(zm, zdm)
            assert np.allclose(jac[:, :, k], (fp - fm) / (2 * h), atol=1e-6)


class TestRunningCost:
    def test_zero_effort(self, params):
        assert running_cost(np.zeros(3), params) == 0.0

    def test_saturated_both_axes(self, params):
        tau = np.array([params.tau_u_max, 3.0, params.tau_r_max])
        assert running_cost(tau, params) == pytest.approx(2.0)

    def test_sway_force_not_billed(self, params):
        assert running_cost(np.array([0.0, 123.0, 0.0]), params) == 0.0
