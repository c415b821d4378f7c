"""Contour parametrization, quadrature grids, truncation and node selection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cirom import contour, fom, models
from cirom.contour import (
    ParabolicContour,
    build_grid,
    choose_node_count,
    choose_truncation,
    eval_contour,
)
from cirom.errors import NodeCountFailureError, TruncationFailureError


class TestEvalContour:
    def test_vertex(self):
        z, dz = eval_contour(ParabolicContour(-1.0, 1.0), 0.0)
        assert z == 1.0 + 0.0j
        assert dz == 2.0j

    def test_direct_substitution(self):
        z, dz = eval_contour(ParabolicContour(-1.0, 1.0), 2.0)
        assert z == pytest.approx(-3.0 + 4.0j)
        assert dz == pytest.approx(-4.0 + 2.0j)

    @given(st.floats(-5, -0.01), st.floats(0.01, 5), st.floats(-20, 20))
    @settings(max_examples=50, deadline=None)
    def test_conjugate_reflection(self, a1, a2, s):
        cont = ParabolicContour(a1, a2)
        z_pos, _ = cont.point(s)
        z_neg, _ = cont.point(-s)
        assert z_neg == np.conj(z_pos)

    def test_sign_constraints(self):
        with pytest.raises(ValueError):
            ParabolicContour(0.5, 1.0)
        with pytest.raises(ValueError):
            ParabolicContour(-1.0, -0.1)


class TestBuildGrid:
    def test_four_point_rule(self):
        grid = build_grid(ParabolicContour(-1.0, 1.0), 1.0, 4)
        np.testing.assert_allclose(grid.xi, [-np.pi / 2, 0.0, np.pi / 2])

    def test_degenerate_two_point_rule(self):
        grid = build_grid(ParabolicContour(-1.0, 1.0), 2.0, 2)
        np.testing.assert_allclose(grid.xi, [0.0])

    def test_midpoint_maps_to_vertex(self):
        grid = build_grid(ParabolicContour(-1.0, 1.0), 1.0, 32)
        assert grid.n_nodes == 31
        assert grid.xi[15] == pytest.approx(0.0, abs=1e-15)
        assert grid.z[15] == pytest.approx(1.0 + 0.0j)

    def test_conjugate_node_pairing(self):
        grid = build_grid(ParabolicContour(-0.7, 0.3), 1.3, 16)
        for j in range(grid.n_nodes):
            partner = grid.conjugate_partner(j)
            assert grid.z[partner] == pytest.approx(np.conj(grid.z[j]), rel=1e-12)

    def test_real_part_below_vertex(self):
        grid = build_grid(ParabolicContour(-2.0, 0.8), 2.0, 33)
        assert np.all(grid.z.real <= 0.8 + 1e-15)
        interior = np.abs(grid.xi) > 1e-12
        assert np.all(grid.z.real[interior] < 0.8)

    def test_deterministic(self):
        g1 = build_grid(ParabolicContour(-1.0, 0.5), 1.7, 64)
        g2 = build_grid(ParabolicContour(-1.0, 0.5), 1.7, 64)
        assert np.array_equal(g1.xi, g2.xi)
        assert np.array_equal(g1.z, g2.z)
        assert np.array_equal(g1.dz, g2.dz)


class TestChooseTruncation:
    def test_certified_tail_condition(self):
        cont = ParabolicContour(-1.0, 1.0)
        tol, bound, horizon = 1e-8, 1.0, 1.0
        c = choose_truncation(cont, horizon, bound, tol)
        z, dz = cont.point(c * np.pi)
        assert np.exp(z.real * horizon) * abs(dz) * bound <= tol

    def test_zero_transform_gives_floor(self):
        c = choose_truncation(ParabolicContour(-1.0, 1.0), 1.0, 0.0, 1e-10,
                              c_min=0.1)
        assert c == 0.1

    def test_monotone_in_tolerance(self):
        cont = ParabolicContour(-1.0, 0.5)
        tols = [10.0 ** (-k) for k in range(2, 9)]
        cs = [choose_truncation(cont, 1.0, 5.0, tol) for tol in tols]
        assert all(c2 >= c1 for c1, c2 in zip(cs, cs[1:]))

    def test_unsatisfiable_raises(self):
        with pytest.raises(TruncationFailureError):
            choose_truncation(ParabolicContour(-1.0, 1.0), 1e-6, 1e300, 1e-300,
                              c_max=2.0)


class TestChooseNodeCount:
    def test_scalar_reaches_tolerance(self, scalar_decay):
        cont = ParabolicContour(-1.0, 0.5)
        c = choose_truncation(cont, 1.0, 1.0, 1e-8)
        n = choose_node_count(scalar_decay, cont, c, [0.5], 1.0, 1e-6)
        assert n <= 64
        grid_n = build_grid(cont, c, n)
        grid_2n = build_grid(cont, c, 2 * n)
        w = fom.TimeWindow(1.0, 1.0)
        u_n = fom.full_solution(scalar_decay, [0.5], grid_n, w, [1.0])[0, 0]
        u_2n = fom.full_solution(scalar_decay, [0.5], grid_2n, w, [1.0])[0, 0]
        assert abs(u_2n - u_n) / abs(u_2n) <= 1e-6

    def test_loose_tolerance_returns_first_doubling(self, scalar_decay):
        cont = ParabolicContour(-1.0, 0.5)
        n = choose_node_count(scalar_decay, cont, 1.5, [0.5], 1.0, 1.0)
        assert n == 16

    def test_diag_discrepancy_decays_geometrically(self, diag_two):
        cont = ParabolicContour(-1.0, 0.5)
        c = 1.8
        w = fom.TimeWindow(0.5, 1.0)
        prev = None
        discrepancies = []
        for n in (8, 16, 32, 64, 128, 256):
            u = fom.full_solution(diag_two, [0.0], build_grid(cont, c, n), w,
                                  [0.5])[:, 0]
            if prev is not None:
                discrepancies.append(np.linalg.norm(u - prev) /
                                     np.linalg.norm(u))
            prev = u
        plateau = max(discrepancies[-1], 1e-13)
        for d1, d2 in zip(discrepancies, discrepancies[1:]):
            if d1 <= 100 * plateau:
                break
            assert d2 <= 0.5 * d1

    def test_cap_failure_carries_discrepancy(self, advection_desk):
        cont = ParabolicContour(-1.0, 0.5)
        with pytest.raises(NodeCountFailureError) as err:
            choose_node_count(advection_desk, cont, 1.5, [0.2], 0.5, 1e-10,
                              n_cap=32)
        assert err.value.last_discrepancy is not None


class TestDesignGrid:
    def test_scalar_pipeline(self, scalar_decay):
        from cirom import ParameterBox
        grid = contour.design_grid(scalar_decay, ParameterBox([0.0], [1.0]),
                                   horizon=1.0, tol=1e-8)
        # vertex positive per the sign rule and right of the eigenvalue at -1
        assert grid.contour.a2 > 0
        u = fom.full_solution(scalar_decay, [0.5], grid,
                              fom.TimeWindow(1.0, 1.0), [1.0])[0, 0]
        assert abs(u - np.exp(-1.0)) <= 1e-6

    def test_overrides_respected(self, scalar_decay):
        from cirom import ParameterBox
        grid = contour.design_grid(scalar_decay, ParameterBox([0.0], [1.0]),
                                   horizon=1.0, tol=1e-6, a2=0.9, c=1.25, n=32)
        assert grid.contour.a2 == 0.9
        assert grid.c == 1.25
        assert grid.n == 32
