"""Affine operator/source assembly, derivatives and parameter domains."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from cirom import models
from cirom.affine import (
    AffineOperator,
    AffineSource,
    OperatorTerm,
    ParameterBox,
    SourceTerm,
    assemble_operator,
    assemble_source,
    operator_derivative,
)
from cirom.errors import CapabilityError, ParameterShapeError, PoleProximityError


def make_operator(matrices, coeffs, grads=None, n_params=1):
    terms = []
    for q, mat in enumerate(matrices):
        terms.append(OperatorTerm(coeffs[q], sparse.csr_matrix(mat),
                                  grads[q] if grads else None))
    return AffineOperator(terms, n_params=n_params)


class TestAssembleOperator:
    def test_single_identity_term(self):
        op = make_operator([np.eye(2)], [lambda mu: 1.0])
        out = assemble_operator(op, [0.37]).toarray()
        np.testing.assert_array_equal(out, np.eye(2))

    def test_diagonal_superposition(self):
        op = make_operator(
            [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]],
            [lambda mu: mu[0], lambda mu: mu[1]],
            n_params=2,
        )
        out = assemble_operator(op, [3.0, 5.0]).toarray()
        np.testing.assert_allclose(out, [[3.0, 0.0], [0.0, 5.0]])

    def test_black_scholes_matches_direct_stencil(self):
        n_h, s_max = 50, 200.0
        model = models.black_scholes(n_h=n_h, s_max=s_max, strike=100.0)
        sigma_v, r = 0.2, 0.01
        a = model.operator.assemble([sigma_v, r]).toarray()
        ds = s_max / (n_h + 1)
        s = np.arange(1, n_h + 1) * ds
        for i in range(n_h):
            diff = sigma_v**2 * s[i] ** 2 / 2.0 / ds**2
            conv = r * s[i] / (2.0 * ds)
            assert a[i, i] == pytest.approx(-2.0 * diff - r, rel=1e-14)
            if i > 0:
                assert a[i, i - 1] == pytest.approx(diff - conv, rel=1e-14)
            if i + 1 < n_h:
                assert a[i, i + 1] == pytest.approx(diff + conv, rel=1e-14)

    def test_wrong_parameter_length(self):
        op = make_operator([np.eye(2)], [lambda mu: mu[0]], n_params=1)
        with pytest.raises(ParameterShapeError):
            op.assemble([1.0, 2.0])

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=2),
           st.floats(-5, 5), st.floats(-5, 5))
    @settings(max_examples=30, deadline=None)
    def test_assembly_linearity(self, mu, d1, d2):
        m1 = np.diag([d1, d2])
        m2 = np.array([[0.0, 1.0], [1.0, 0.0]])
        c1, c2 = lambda m: m[0], lambda m: m[1]
        op1 = make_operator([m1], [c1], n_params=2)
        op2 = make_operator([m2], [c2], n_params=2)
        both = make_operator([m1, m2], [c1, c2], n_params=2)
        np.testing.assert_array_equal(
            both.assemble(mu).toarray(),
            op1.assemble(mu).toarray() + op2.assemble(mu).toarray(),
        )


class TestAssembleSource:
    def test_constant_in_time_source_transform(self):
        e1 = np.array([1.0, 0.0, 0.0])
        src = AffineSource(
            [SourceTerm(lambda mu: 1.0, lambda z, mu: 1.0 / z, e1)],
            n_params=1, dim=3, poles=[lambda mu: 0.0j],
        )
        np.testing.assert_allclose(assemble_source(src, 2.0, [0.5]), 0.5 * e1)

    def test_two_term_boundary_data(self):
        b1 = np.array([1.0, 0.0])
        b2 = np.array([0.0, 1.0])
        strike = 100.0
        src = AffineSource(
            [
                SourceTerm(lambda mu: 1.0, lambda z, mu: 1.0 / z, b1),
                SourceTerm(lambda mu: -strike, lambda z, mu: 1.0 / (z + mu[0]), b2),
            ],
            n_params=1, dim=2,
            poles=[lambda mu: 0.0j, lambda mu: -mu[0] + 0.0j],
        )
        out = assemble_source(src, 1.0, [0.01])
        np.testing.assert_allclose(out, b1 / 1.0 - 100.0 * b2 / 1.01)

    def test_advection_source_is_zero(self):
        model = models.advection(n_h=32)
        for z in (1.0, -2.0 + 3.0j, 10.0j):
            out = model.source.assemble(z, [0.7])
            np.testing.assert_array_equal(out, np.zeros(32))

    def test_pole_proximity(self):
        src = AffineSource(
            [SourceTerm(lambda mu: 1.0, lambda z, mu: 1.0 / z, np.ones(2))],
            n_params=1, dim=2, poles=[lambda mu: 0.0j],
        )
        with pytest.raises(PoleProximityError):
            src.assemble(1e-13, [0.0])

    @given(st.floats(0.1, 5.0), st.floats(-4.0, 4.0))
    @settings(max_examples=30, deadline=None)
    def test_conjugate_symmetry_real_data(self, re, im):
        src = AffineSource(
            [
                SourceTerm(lambda mu: 1.0, lambda z, mu: 1.0 / z, np.array([1.0, 2.0])),
                SourceTerm(lambda mu: mu[0], lambda z, mu: 1.0 / (z + 0.5),
                           np.array([0.0, 3.0])),
            ],
            n_params=1, dim=2,
            poles=[lambda mu: 0.0j, lambda mu: -0.5 + 0.0j],
        )
        z = complex(re, im)
        fwd = src.assemble(z, [0.3])
        bwd = src.assemble(np.conj(z), [0.3])
        np.testing.assert_allclose(bwd, fwd.conj(), rtol=1e-13, atol=1e-300)


class TestOperatorDerivative:
    def test_polynomial_coefficient(self):
        op = make_operator([np.eye(2)], [lambda mu: mu[0] ** 2],
                           grads=[lambda mu: np.array([2.0 * mu[0]])])
        out = operator_derivative(op, [3.0], 0).toarray()
        np.testing.assert_allclose(out, 6.0 * np.eye(2))

    def test_black_scholes_volatility_derivative(self):
        model = models.black_scholes(n_h=30, s_max=200.0, strike=100.0)
        mu = np.array([0.2, 0.01])
        d_sigma = model.operator.derivative(mu, 0).toarray()
        pure_diffusion = model.operator.terms[0].matrix.toarray()
        np.testing.assert_allclose(d_sigma, 2.0 * 0.2 * pure_diffusion,
                                   rtol=1e-13)

    def test_missing_gradients(self):
        op = make_operator([np.eye(2)], [lambda mu: mu[0]])
        with pytest.raises(CapabilityError):
            op.derivative([1.0], 0)

    @pytest.mark.parametrize("seed", range(4))
    def test_finite_difference_consistency(self, seed):
        rng = np.random.default_rng(seed)
        mats = [rng.standard_normal((5, 5)) for _ in range(2)]
        op = make_operator(
            mats,
            [lambda mu: mu[0] ** 2 + mu[1], lambda mu: np.sin(mu[0]) * mu[1]],
            grads=[
                lambda mu: np.array([2.0 * mu[0], 1.0]),
                lambda mu: np.array([np.cos(mu[0]) * mu[1], np.sin(mu[0])]),
            ],
            n_params=2,
        )
        mu = rng.uniform(0.2, 1.5, size=2)
        h = 1e-6
        for i in range(2):
            d_analytic = op.derivative(mu, i).toarray()
            up, down = mu.copy(), mu.copy()
            up[i] += h
            down[i] -= h
            d_fd = (op.assemble(up).toarray() - op.assemble(down).toarray()) / (2 * h)
            scale = max(np.abs(d_analytic).max(), 1e-8)
            mask = np.abs(d_analytic) >= 1e-8
            assert np.abs((d_fd - d_analytic))[mask].max() <= 1e-6 * scale


class TestParameterDomains:
    def test_box_validation(self):
        with pytest.raises(ValueError):
            ParameterBox([1.0], [0.5])

    def test_lattice_and_corners(self):
        box = ParameterBox([0.0, 1.0], [1.0, 1.0])
        grid = box.lattice([3, 1])
        assert len(grid) == 3
        assert grid.points.shape == (3, 2)
        corners = box.corners()
        assert corners.shape == (2, 2)  # degenerate axis collapses

    def test_random_grid_inside_box_and_seeded(self):
        box = ParameterBox([0.1, -1.0], [0.2, 4.0])
        g1 = box.random(50, seed=7)
        g2 = box.random(50, seed=7)
        np.testing.assert_array_equal(g1.points, g2.points)
        assert all(box.contains(p) for p in g1.points)

    def test_grid_rejects_outside_points(self):
        box = ParameterBox([0.0], [1.0])
        from cirom.affine import ParameterGrid
        with pytest.raises(ValueError):
            ParameterGrid(np.array([[2.0]]), "manual", box)
