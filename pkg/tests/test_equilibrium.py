import numpy as np
import pytest
from scipy.special import kv

from rlandau.equilibrium import (
    FluidState,
    bessel_k,
    fluid_moment_check,
    juttner,
    juttner_sqrt,
)
from rlandau.phase_space import MomentumGrid

GRID = MomentumGrid(8.0, 40)


def rest_state(n0=1.0, T0=0.4):
    return FluidState(n0, [0.0, 0.0, 0.0], T0)


class TestBesselK:
    def test_against_scipy_oracle(self):
        for order in (1, 2, 3):
            for z in (0.5, 1.0, 2.5, 10.0):
                assert abs(bessel_k(order, z) - kv(order, z)) / kv(order, z) < 1e-10

    def test_k2_at_one(self):
        assert abs(bessel_k(2, 1.0) - 1.6248) < 5e-4

    def test_large_z_asymptotics(self):
        z = 60.0
        ratio = bessel_k(2, z) * np.exp(z) * np.sqrt(2 * z / np.pi)
        assert abs(ratio - 1.0) < 0.05  # 1 + O(1/z)

    def test_recurrence_closure(self):
        for z in (0.5, 1.0, 4.0):
            gap = bessel_k(3, z) - bessel_k(1, z) - 4.0 * bessel_k(2, z) / z
            assert abs(gap) < 1e-9

    def test_rejects_nonpositive_z(self):
        with pytest.raises(ValueError):
            bessel_k(2, 0.0)
        with pytest.raises(ValueError):
            bessel_k(2, -1.0)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            bessel_k(4, 1.0)


class TestFluidState:
    def test_rejects_nonpositive_density(self):
        with pytest.raises(ValueError):
            FluidState(0.0, [0, 0, 0], 0.4)

    def test_rejects_nonpositive_temperature(self):
        with pytest.raises(ValueError):
            FluidState(1.0, [0, 0, 0], -0.1)

    def test_rejects_fast_bulk_velocity(self):
        with pytest.raises(ValueError):
            FluidState(1.0, [0.2, 0, 0], 0.4)

    def test_warns_outside_temperature_range(self):
        with pytest.warns(UserWarning):
            FluidState(1.0, [0, 0, 0], 2.0)

    def test_derived_quantities(self):
        st = FluidState(2.0, [0.06, 0.0, 0.08], 0.5)
        assert np.isclose(st.gamma, 2.0)
        assert np.isclose(st.u0, np.sqrt(1.01))
        assert np.isclose(st.pressure, 1.0)

    def test_energy_closure_forms_agree(self):
        # n0 (K3/K2 - 1/gamma) == n0 (K1/K2 + 3/gamma) via the recurrence
        for T0 in (0.1, 0.4, 1.0, 1.2):
            st = rest_state(T0=T0)
            g = 1.0 / T0
            alt = st.n0 * (bessel_k(1, g) / bessel_k(2, g) + 3.0 / g)
            assert abs(st.energy - alt) / alt < 1e-12

    def test_field_shapes(self):
        n0 = np.ones(4)
        u = np.zeros((4, 3))
        T0 = np.full(4, 0.4)
        st = FluidState(n0, u, T0)
        assert st.k2.shape == (4,)
        assert juttner(st, GRID.nodes).shape == (4, GRID.size)


class TestJuttner:
    def test_positive_everywhere(self):
        st = FluidState(1.0, [0.03, -0.02, 0.01], 0.4)
        assert np.all(juttner(st, GRID.nodes) > 0.0)

    def test_rest_frame_closed_form(self):
        st = rest_state()
        vals = juttner(st, GRID.nodes)
        pref = st.n0 * st.gamma / (4 * np.pi * kv(2, st.gamma))
        assert np.allclose(vals, pref * np.exp(-st.gamma * GRID.p0), rtol=1e-10)

    def test_monotone_in_energy_at_rest(self):
        st = rest_state()
        vals = juttner(st, GRID.nodes)
        order = np.argsort(GRID.p0)
        assert np.all(np.diff(vals[order]) <= 1e-14)

    def test_normalization_to_density(self):
        st = rest_state()
        assert abs(GRID.integrate(juttner(st, GRID.nodes)) - st.n0) < 1e-6

    def test_rotation_invariance(self):
        # simultaneous rotation of p and u leaves M unchanged
        theta = 0.3
        c, s = np.cos(theta), np.sin(theta)
        R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        u = np.array([0.05, 0.02, -0.01])
        p = np.random.default_rng(5).normal(size=(50, 3))
        a = juttner(FluidState(1.0, u, 0.4), p)
        b = juttner(FluidState(1.0, R @ u, 0.4), p @ R.T)
        assert np.allclose(a, b, rtol=1e-13)

    def test_sqrt_is_exact_root(self):
        st = FluidState(1.3, [0.02, 0.0, 0.05], 0.5)
        r = juttner_sqrt(st, GRID.nodes)
        assert np.allclose(r**2, juttner(st, GRID.nodes), rtol=1e-14)

    def test_sqrt_rest_value_at_origin(self):
        st = rest_state()
        val = juttner_sqrt(st, [0.0, 0.0, 0.0])
        pref = st.n0 * st.gamma / (4 * np.pi * kv(2, st.gamma))
        assert np.isclose(val[0], np.sqrt(pref) * np.exp(-st.gamma / 2), rtol=1e-12)

    def test_drift_moment_parallel_to_u(self):
        u = np.array([0.04, 0.0, 0.03])
        st = FluidState(1.0, u, 0.4)
        M = juttner(st, GRID.nodes)
        drift = np.array([GRID.integrate(GRID.nodes[:, a] * M) for a in range(3)])
        # parallel with positive proportionality
        assert np.linalg.norm(np.cross(drift, u)) < 1e-8 * np.linalg.norm(drift)
        assert drift @ u > 0

    def test_drift_moment_zero_at_rest(self):
        st = rest_state()
        M = juttner(st, GRID.nodes)
        for a in range(3):
            assert abs(GRID.integrate(GRID.nodes[:, a] * M)) < 1e-12


class TestFluidMomentCheck:
    def test_rest_frame_residuals(self):
        res = fluid_moment_check(rest_state(), GRID)
        assert res.density < 1e-6
        assert res.pressure < 1e-5
        assert res.energy < 1e-5

    def test_moving_frame_residuals(self):
        st = FluidState(1.5, [0.05, -0.03, 0.02], 0.4)
        res = fluid_moment_check(st, GRID)
        assert res.max() < 1e-5
