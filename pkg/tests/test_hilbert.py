import numpy as np
import pytest

from rlandau.collision import KernelTable
from rlandau.equilibrium import juttner
from rlandau.euler_fluid import EulerState
from rlandau.hilbert import (
    HilbertExpansion,
    build_f0,
    cell_state,
    decay_check,
    maxwellian_log_derivatives,
)
from rlandau.phase_space import MomentumGrid, SpatialGrid

GRID = MomentumGrid(6.0, 12)
TABLE = KernelTable(GRID)


def wave_state(cells=8, amp=1e-4):
    g = SpatialGrid(cells, 1.0)
    n0 = 1.0 + amp * np.sin(2 * np.pi * g.x)
    u = np.zeros((cells, 3))
    u[:, 0] = amp * np.cos(2 * np.pi * g.x)
    T0 = 0.4 + amp * np.sin(2 * np.pi * g.x)
    return EulerState(g, n0, u, T0)


def constant_state(cells=8):
    g = SpatialGrid(cells, 1.0)
    return EulerState(g, np.full(cells, 1.0), np.zeros((cells, 3)), np.full(cells, 0.4))


@pytest.fixture(scope="module")
def wave_hx():
    hx = HilbertExpansion(wave_state(), TABLE)
    hx.coefficients()  # build and cache all orders once
    return hx


class TestBuildF0:
    def test_equals_local_maxwellian(self):
        e = wave_state()
        f0 = build_f0(e, TABLE)
        for c in range(e.grid.cells):
            M = juttner(cell_state(e, c), GRID.nodes)
            assert np.array_equal(f0.values[c], M)
        assert np.all(f0.micro == 0.0)
        assert np.all(f0.macro == 0.0)

    def test_rejects_k1(self):
        with pytest.raises(ValueError):
            HilbertExpansion(constant_state(), TABLE, k=1)


class TestConstantBackbone:
    def test_all_orders_vanish(self):
        hx = HilbertExpansion(constant_state(), TABLE)
        fields = hx.coefficients()
        for f in fields[1:]:
            assert np.all(f.values == 0.0)
            assert np.all(f.micro == 0.0)
            assert np.all(f.macro == 0.0)

    def test_source_vanishes(self):
        hx = HilbertExpansion(constant_state(), TABLE)
        S, S_bar = hx.remainder_source(0.1)
        assert np.all(S == 0.0)
        assert np.all(S_bar == 0.0)


class TestMaxwellianDerivatives:
    def test_dx_matches_direct_differencing(self):
        e = wave_state()
        _, dx_lnM = maxwellian_log_derivatives(e, GRID)
        M = np.stack([juttner(cell_state(e, c), GRID.nodes) for c in range(8)])
        direct = e.grid.ddx(np.log(M))
        scale = np.abs(direct).max()
        assert np.abs(dx_lnM - direct).max() < 0.05 * scale

    def test_dt_matches_tiny_advance(self):
        from rlandau.euler_fluid import euler_step

        e = wave_state()
        dt_lnM, _ = maxwellian_log_derivatives(e, GRID)
        tau = 1e-5
        Mp = np.stack(
            [juttner(cell_state(euler_step(e, tau), c), GRID.nodes) for c in range(8)]
        )
        Mm = np.stack(
            [juttner(cell_state(euler_step(e, -tau), c), GRID.nodes) for c in range(8)]
        )
        fd = (np.log(Mp) - np.log(Mm)) / (2 * tau)
        scale = np.abs(fd).max()
        assert np.abs(dt_lnM - fd).max() < 1e-3 * scale


class TestHierarchy:
    def test_micro_orthogonal_to_null_space(self, wave_hx):
        fields = wave_hx.coefficients()
        entry = wave_hx._entry(wave_hx.euler, wave_hx.y)
        ops = wave_hx._ops(entry)
        for f in fields[1:]:
            norm = np.sqrt(max(GRID.integrate((f.micro**2).sum(axis=0)), 1e-300))
            for c, op in enumerate(ops):
                for b in op.null_basis():
                    b_norm = np.sqrt(GRID.integrate(b * b))
                    assert abs(GRID.integrate(b * f.micro[c])) <= 1e-10 * norm * b_norm

    def test_moments_match_macro_bookkeeping(self, wave_hx):
        # int chi F_n dp must equal G y_n: the macro rows carry the moments
        fields = wave_hx.coefficients()
        entry = wave_hx._entry(wave_hx.euler, wave_hx.y)
        G = wave_hx._moment_matrices(entry)[0]
        chi = np.concatenate(
            [np.ones((1, GRID.size)), GRID.nodes.T, GRID.p0[None, :]]
        )
        for f in fields[1:]:
            quad = np.einsum("mn,cn->cm", chi, f.values) * GRID.cell_volume
            macro = np.einsum("cmn,cn->cm", G, f.macro)
            scale = max(np.abs(quad).max(), np.abs(f.values).max())
            assert np.abs(quad - macro).max() <= 1e-10 * scale

    def test_inversion_round_trip(self, wave_hx):
        # L[micro_1] must reproduce the projected right-hand side
        entry = wave_hx._entry(wave_hx.euler, wave_hx.y)
        ops = wave_hx._ops(entry)
        fields = wave_hx.coefficients(1)
        e = wave_hx.euler
        M = fields[0].values
        dt_lnM, _ = maxwellian_log_derivatives(e, GRID)
        transport = dt_lnM * M + GRID.phat[None, :, 0] * e.grid.ddx(M)
        for c in (0, 3):
            rhs = ops[c].project_out_null(-transport[c] / ops[c].sqrt_M)
            back = ops[c].apply_L(fields[1].micro[c])
            scale = np.abs(rhs).max()
            assert np.abs(back - rhs).max() <= 1e-5 * scale

    def test_residuals_orders_one_two(self, wave_hx):
        for n in (1, 2):
            resid, scale = wave_hx.hierarchy_residual(n)
            assert resid <= 1e-5 * scale

    def test_residual_order_zero_small(self, wave_hx):
        resid, scale = wave_hx.hierarchy_residual(0)
        assert resid <= 0.05 * scale

    def test_residual_order_zero_refines(self, wave_hx):
        # joint refinement of space and momentum cuts the order-0 defect
        coarse_r, coarse_s = wave_hx.hierarchy_residual(0)
        fine = HilbertExpansion(wave_state(cells=16), KernelTable(MomentumGrid(6.0, 16)))
        fine_r, fine_s = fine.hierarchy_residual(0)
        assert fine_r / fine_s < (coarse_r / coarse_s) / 3.0

    def test_residual_bad_order(self, wave_hx):
        with pytest.raises(ValueError):
            wave_hx.hierarchy_residual(3)


class TestRemainderSource:
    def test_epsilon_scaling_slope(self, wave_hx):
        # S is a sum of eps^3 and eps^4 terms: the fitted slope sits between
        eps = np.array([0.1, 0.05, 0.025])
        norms = [np.abs(wave_hx.remainder_source(e)[0]).max() for e in eps]
        slope = np.polyfit(np.log(eps), np.log(norms), 1)[0]
        assert 2.5 <= slope <= 4.5

    def test_sbar_is_weighted_source(self, wave_hx):
        S, S_bar = wave_hx.remainder_source(0.1)
        entry = wave_hx._entry(wave_hx.euler, wave_hx.y)
        sqrt_M = np.stack([op.sqrt_M for op in wave_hx._ops(entry)])
        assert np.allclose(S_bar * sqrt_M, S, rtol=1e-12)


class TestDecay:
    def test_reports_finite_constants(self, wave_hx):
        fields = wave_hx.coefficients()
        reps = [decay_check(f, wave_hx.t, wave_hx.euler, GRID) for f in fields[1:]]
        for rep in reps:
            assert np.isfinite(rep.constant) and rep.constant > 0

    def test_witness_interior_at_t0(self, wave_hx):
        fields = wave_hx.coefficients()
        rep = decay_check(fields[1], 0.0, wave_hx.euler, GRID)
        assert not rep.boundary_dominated


class TestAdvance:
    def test_macro_rows_respond_and_residual_stays_small(self, wave_hx):
        hx = HilbertExpansion(wave_state(), TABLE)
        hx._cache = wave_hx._cache  # reuse the already-built base state
        hx.advance(0.05)
        assert hx.t == pytest.approx(0.05)
        assert np.abs(hx.y[1]).max() > 0
        resid, scale = hx.hierarchy_residual(1)
        assert resid <= 1e-3 * scale

    def test_constant_backbone_stays_trivial(self):
        hx = HilbertExpansion(constant_state(), TABLE)
        hx.advance(0.05)
        assert np.all(hx.y == 0.0)
        fields = hx.coefficients()
        assert np.all(fields[3].values == 0.0)
