"""Shared fixtures: toy systems and the desk-scale option-pricing setup.

The desk bundle (grid, exact lower bounds, greedy basis, full sweep) is
expensive, so it is built once per session and shared by the unit tests and
the acceptance suite.
"""

import numpy as np
import pytest

from cirom import ParameterBox, contour, fom, models, rom, sigma


@pytest.fixture(scope="session")
def scalar_decay():
    """1x1 system u' = -u, u(0) = 1."""
    return models.from_matrices([[[-1.0]]], name="scalar-decay")


@pytest.fixture(scope="session")
def diag_two():
    """diag(-1, -2) with unit initial value."""
    return models.from_matrices([np.diag([-1.0, -2.0])], u0=[1.0, 1.0],
                                name="diag-two")


@pytest.fixture(scope="session")
def bs_desk():
    return models.black_scholes(n_h=200, s_max=200.0, strike=100.0)


@pytest.fixture(scope="session")
def bs_box():
    return ParameterBox([0.05, 0.001], [0.25, 0.02])


@pytest.fixture(scope="session")
def bs_xi(bs_box):
    return bs_box.lattice([10, 10]).points


@pytest.fixture(scope="session")
def bs_window():
    return fom.TimeWindow(1.0, 10.0)


@pytest.fixture(scope="session")
def bs_grid(bs_desk, bs_box):
    return contour.design_grid(bs_desk, bs_box, horizon=1.0, tol=1e-4)


@pytest.fixture(scope="session")
def bs_ctx(bs_desk, bs_grid, bs_window, bs_xi):
    lbs = sigma.lower_bounds_grid(bs_desk.operator, bs_grid, bs_xi)
    return rom.EstimatorContext(bs_grid, bs_window, lbs)


@pytest.fixture(scope="session")
def bs_greedy(bs_desk, bs_grid, bs_ctx, bs_xi):
    basis, red, log = rom.greedy_pod(bs_desk, bs_grid, bs_ctx, bs_xi,
                                     tol=1e-6, tol_pod=1e-8, max_iter=40)
    return basis, red, log


@pytest.fixture(scope="session")
def bs_window_times(bs_window):
    return bs_window.sample(10)


@pytest.fixture(scope="session")
def bs_fulls(bs_desk, bs_grid, bs_window, bs_xi, bs_window_times):
    return [fom.full_solution(bs_desk, mu, bs_grid, bs_window, bs_window_times)
            for mu in bs_xi]


@pytest.fixture(scope="session")
def heston_desk():
    return models.heston(n_s=16, n_v=8)


@pytest.fixture(scope="session")
def heston_box():
    return ParameterBox([0.3, 0.02, 1.2, 0.08, 0.21],
                        [0.3, 0.02, 3.0, 0.15, 0.21])


@pytest.fixture(scope="session")
def heston_grid(heston_desk):
    # identity/reproduction checks compare against the same grid, so a fixed
    # moderate profile keeps them fast; vertex right of spectrum and pole
    return contour.build_grid(contour.ParabolicContour(-1.0, 2.0), 2.0, 128)


@pytest.fixture(scope="session")
def advection_desk():
    return models.advection(n_h=200)


@pytest.fixture(scope="session")
def advection_grid():
    return contour.build_grid(contour.ParabolicContour(-1.0, 0.5), 0.5, 64)
