import numpy as np
import pytest

from rlandau.phase_space import (
    MomentumGrid,
    SpatialGrid,
    energy_of,
    lorentz_inner,
    p_hat,
    radial_quadrature,
)

rng = np.random.default_rng(1234)


def test_energy_of_rest_frame():
    assert energy_of([0.0, 0.0, 0.0]) == 1.0


def test_energy_of_345():
    assert np.isclose(energy_of([3.0, 4.0, 0.0]), np.sqrt(26.0), rtol=1e-15)


def test_energy_even_in_p():
    p = rng.normal(size=(100, 3))
    assert np.allclose(energy_of(p), energy_of(-p), rtol=1e-15)


def test_lorentz_inner_mass_shell():
    assert lorentz_inner([0.0, 0.0, 0.0], [0.0, 0.0, 0.0]) == -1.0
    p = rng.normal(size=(200, 3)) * 3
    assert np.allclose(lorentz_inner(p, p), -1.0, atol=1e-12)


def test_lorentz_inner_example():
    assert np.isclose(lorentz_inner([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]), -np.sqrt(2))


def test_lorentz_inner_upper_bound():
    p = rng.normal(size=(500, 3)) * 4
    q = rng.normal(size=(500, 3)) * 4
    assert np.all(lorentz_inner(p, q) <= -1.0 + 1e-12)


def test_p_hat_subluminal():
    assert np.allclose(p_hat([0.0, 0.0, 0.0]), 0.0)
    assert np.allclose(p_hat([1.0, 0.0, 0.0]), [1 / np.sqrt(2), 0, 0])
    p = rng.normal(size=(300, 3)) * 50
    speeds = np.linalg.norm(p_hat(p), axis=-1)
    assert np.all(speeds < 1.0)


class TestMomentumGrid:
    def test_rejects_odd_axis_count(self):
        with pytest.raises(ValueError):
            MomentumGrid(8.0, 15)

    def test_rejects_small_axis_count(self):
        with pytest.raises(ValueError):
            MomentumGrid(8.0, 6)

    def test_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            MomentumGrid(-1.0, 16)

    def test_weight_sum_is_box_measure(self):
        g = MomentumGrid(8.0, 16)
        assert np.isclose(g.weights.sum(), (2 * 8.0) ** 3, rtol=1e-12)

    def test_nodes_symmetric(self):
        g = MomentumGrid(6.0, 12)
        perm = g.reflect_index()
        assert np.allclose(g.nodes[perm], -g.nodes)

    def test_on_shell_invariants(self):
        g = MomentumGrid(6.0, 12)
        assert np.all(g.p0 >= 1.0)
        assert np.allclose(lorentz_inner(g.nodes, g.nodes), -1.0, atol=1e-14)

    def test_integrate_zero_and_linearity(self):
        g = MomentumGrid(6.0, 12)
        assert g.integrate(np.zeros(g.size)) == 0.0
        f = rng.normal(size=g.size)
        assert np.isclose(g.integrate(3.0 * f), 3.0 * g.integrate(f), rtol=1e-13)

    def test_integrate_shape_check(self):
        g = MomentumGrid(6.0, 12)
        with pytest.raises(ValueError):
            g.integrate(np.zeros(10))

    def test_odd_integrand_vanishes(self):
        g = MomentumGrid(6.0, 12)
        vals = g.nodes[:, 0] * np.exp(-g.p0)
        assert abs(g.integrate(vals)) < 1e-12 * np.abs(vals).sum() * g.cell_volume

    def test_halfspace_indicator_cancels(self):
        g = MomentumGrid(6.0, 12)
        ind = np.sign(g.nodes[:, 0])
        assert abs(g.integrate(ind)) < 1e-12

    def test_exp_energy_against_radial_oracle(self):
        # gamma = 2.5 keeps the tail beyond the box below 1e-10; at gamma = 1
        # the truncation tail (~6e-3 relative at R = 8) dominates any
        # quadrature refinement, so the sharp comparison is made here
        g = MomentumGrid(8.0, 40)
        approx = g.integrate(np.exp(-2.5 * g.p0))
        exact = radial_quadrature(lambda r: np.exp(-2.5 * np.sqrt(1 + r * r)))
        assert abs(approx - exact) / exact < 1e-6

    def test_exp_energy_slow_decay_tail_dominated(self):
        g = MomentumGrid(8.0, 40)
        approx = g.integrate(np.exp(-g.p0))
        exact = radial_quadrature(lambda r: np.exp(-np.sqrt(1 + r * r)))
        assert abs(approx - exact) / exact < 1e-2

    def test_gaussian_closed_form(self):
        g = MomentumGrid(8.0, 40)
        approx = g.integrate(np.exp(-np.sum(g.nodes**2, axis=1)))
        assert abs(approx - np.pi**1.5) / np.pi**1.5 < 1e-6

    def test_refinement_order(self):
        exact = radial_quadrature(lambda r: np.exp(-2.5 * np.sqrt(1 + r * r)))
        errs = []
        for n in (16, 32):
            g = MomentumGrid(8.0, n)
            errs.append(abs(g.integrate(np.exp(-2.5 * g.p0)) - exact))
        assert errs[1] < errs[0] / 3.0


class TestSpatialGrid:
    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            SpatialGrid(2)

    def test_spacing(self):
        g = SpatialGrid(8, 2.0)
        assert g.h == 0.25
        assert len(g.x) == 8

    def test_ddx_on_fourier_mode(self):
        g = SpatialGrid(64, 1.0)
        k = 2 * np.pi
        f = np.sin(k * g.x)
        df = g.ddx(f)
        assert np.allclose(df, k * np.cos(k * g.x), atol=k**3 * g.h**2)

    def test_ddx_periodic_sum_zero(self):
        g = SpatialGrid(16)
        f = rng.normal(size=16)
        assert abs(g.ddx(f).sum()) < 1e-12
