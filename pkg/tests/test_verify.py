import numpy as np
import pytest

from istnls.core import ComplexField1D, ComplexField2D, DimensionError, DomainError, Grid1D, Grid2D
from istnls.evolution import propagate_free
from istnls.ist import SolutionSnapshot, gaussian_profile, gaussian_solution
from istnls.verify import (
    EDGE_LAYERS,
    ResidualReport,
    conserved_norm,
    pde_residual,
    rank1_time_identities,
    residual_field,
)


def square(n, lo=-10.0, hi=10.0):
    g = Grid1D.from_bounds(lo, hi, n)
    return Grid2D(g, g)


def snapshot(G, t, values, v=0.0):
    pot = np.full(G.shape, float(v))
    return SolutionSnapshot(t, ComplexField2D(G, values), pot, np.zeros(G.shape))


def plane_wave(G, t, a=1.0, b=-0.5, v=0.0):
    x, y = G.mesh()
    return np.exp(1j * (a * x + b * y) - 1j * (a * a + b * b - v) * t)


class TestResidual:
    def test_zero_solution(self):
        G = square(16)
        s = snapshot(G, 0.0, np.zeros(G.shape))
        rep = pde_residual(s, s, s, 0.1)
        assert rep.linf == 0 and rep.l2 == 0
        assert rep.interior_margin == EDGE_LAYERS

    @pytest.mark.parametrize("v", [0.0, 0.7])
    def test_plane_wave_second_order(self, v):
        errs = []
        for n, dt in ((64, 4e-3), (128, 2e-3)):
            G = square(n, -np.pi * 4, np.pi * 4)
            snaps = [snapshot(G, t, plane_wave(G, t, v=v), v) for t in (0.3 - dt, 0.3, 0.3 + dt)]
            errs.append(pde_residual(*snaps, dt).linf)
        assert errs[1] < 1e-2
        assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.1)

    def test_gaussian_frozen(self):
        G = square(256)
        dt = 1e-3
        snaps = [gaussian_solution(G, t, 0.5, potential_method="finite-difference")
                 for t in (0.25 - dt, 0.25, 0.25 + dt)]
        rep = pde_residual(*snaps, dt)
        assert rep.linf == pytest.approx(0.0019116858579568334, rel=1e-6)
        assert rep.l2 == pytest.approx(0.004168490658393554, rel=1e-6)

    def test_corruption_is_detected(self):
        G = square(256)
        dt = 1e-3
        snaps = [gaussian_solution(G, t, 0.5) for t in (0.25 - dt, 0.25, 0.25 + dt)]
        good = pde_residual(*snaps, dt).linf
        prev, curr, nxt = snaps
        scaled = SolutionSnapshot(curr.t, ComplexField2D(G, 1.01 * curr.u.values),
                                  curr.v1, curr.v2)
        assert pde_residual(prev, scaled, nxt, dt).linf > 3 * good
        zero = np.zeros(G.shape)
        linear = SolutionSnapshot(curr.t, curr.u, zero, zero)
        assert pde_residual(prev, linear, nxt, dt).linf > 10 * good

    def test_edge_rows_skip_laplacian(self):
        G = square(12)
        s = snapshot(G, 0.0, plane_wave(G, 0.0), v=0.5)
        r = residual_field(s, s, s, 0.1)
        u = s.u.values
        # identical snapshots: no time derivative, and no Laplacian at the corners
        assert r[0, 0] == pytest.approx(0.5 * u[0, 0])
        assert abs(r[5, 5] - 0.5 * u[5, 5]) > 0.1

    def test_grid_mismatch(self):
        a, b = square(16), square(18)
        sa, sb = snapshot(a, 0, np.zeros(a.shape)), snapshot(b, 0, np.zeros(b.shape))
        with pytest.raises(DimensionError):
            pde_residual(sa, sb, sa, 0.1)

    def test_margin_too_large(self):
        G = square(6)
        s = snapshot(G, 0, np.zeros(G.shape))
        with pytest.raises(DimensionError):
            pde_residual(s, s, s, 0.1)

    def test_bad_dt(self):
        G = square(16)
        s = snapshot(G, 0, np.zeros(G.shape))
        with pytest.raises(DomainError):
            pde_residual(s, s, s, 0.0)


class TestReport:
    def test_to_dict(self):
        rep = ResidualReport(0.5, 1e-3, 2e-3, 3)
        assert rep.to_dict() == {"t": 0.5, "linf": 1e-3, "l2": 2e-3, "interior_margin": 3}

    @pytest.mark.parametrize("bad", [-1.0, np.nan, np.inf])
    def test_rejects_invalid(self, bad):
        with pytest.raises(DomainError):
            ResidualReport(0.0, bad, 0.0, 3)


class TestConservedNorm:
    def test_constant(self):
        G = Grid2D(Grid1D.from_bounds(0, 1, 11), Grid1D.from_bounds(0, 2, 21))
        assert conserved_norm(ComplexField2D(G, 2 * np.ones(G.shape))) == pytest.approx(8.0)

    def test_gaussian(self):
        G = square(256)
        u = gaussian_solution(G, 0.25, 0.5).u
        assert conserved_norm(u) == pytest.approx(0.28768207245178085, rel=1e-12)
        assert conserved_norm(u) == pytest.approx(-np.log(0.75), rel=1e-6)


class TestRank1TimeIdentity:
    def test_stationary_zero_field(self):
        g = Grid1D.from_bounds(-5, 5, 64)
        z = ComplexField1D(g, np.zeros(64))
        assert rank1_time_identities(z, z, z, 0.1) == 0

    def test_free_factor_second_order(self):
        g = Grid1D.from_bounds(-20, 20, 512)
        f0 = gaussian_profile(g, 0.0).conj()
        errs = []
        for dt in (1e-2, 5e-3):
            fs = [propagate_free(f0, -1, t) for t in (0.3 - dt, 0.3, 0.3 + dt)]
            errs.append(rank1_time_identities(*fs, dt))
        assert errs[1] < 1e-4
        assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.3)

    def test_wrong_direction_fails(self):
        # a factor evolved with the wrong sign violates the identity at order one
        g = Grid1D.from_bounds(-20, 20, 512)
        f0 = ComplexField1D(g, gaussian_profile(g, 0.0).values * np.exp(1j * g.points))
        dt = 1e-2
        fs = [propagate_free(f0, 1, t) for t in (0.3 - dt, 0.3, 0.3 + dt)]
        assert rank1_time_identities(*fs, dt) > 1e-2

    def test_bad_inputs(self):
        g, h = Grid1D.from_bounds(-5, 5, 64), Grid1D.from_bounds(-5, 5, 32)
        a, b = ComplexField1D(g, np.zeros(64)), ComplexField1D(h, np.zeros(32))
        with pytest.raises(DimensionError):
            rank1_time_identities(a, b, a, 0.1)
        with pytest.raises(DomainError):
            rank1_time_identities(a, a, a, -1.0)
