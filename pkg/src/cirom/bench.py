"""Benchmark pipelines shared by the command-line harness and the tests.

Everything here reduces to four studies: reduction-error sweeps over the
basis size (transform route and classical stepping route), online timing of
the two routes, lower-bound tables at chosen transform points, and
singular-value decay of snapshot families.
"""

import numpy as np

from . import rom
from .fom import full_solution, solve_grid
from .models import heaviside_snapshot_matrices, step_reference
from .util import median_time, parallel_map


def window_samples(window, count=10):
    return window.sample(count)


def full_sweep(model, grid, window, points, times, threads=1):
    """Full contour solutions for every parameter (columns per time)."""
    return parallel_map(
        lambda mu: full_solution(model, mu, grid, window, times), points, threads
    )


def reduction_errors(model, grid, window, basis, red, points, times,
                     nr_values, fulls=None, threads=1):
    """Worst relative reduction error over parameters and window samples.

    The reference is the full contour solution on the same grid, so the
    quantity isolates the reduction error from the quadrature error.
    """
    if fulls is None:
        fulls = full_sweep(model, grid, window, points, times, threads)
    out = []
    for nr in nr_values:
        b = basis.truncate(nr)
        r = red.truncate(nr)
        worst = 0.0
        for mu, full in zip(points, fulls):
            approx = rom.online_solution(r, b, grid, mu, times)
            rel = np.linalg.norm(approx - full, axis=0) / \
                np.maximum(np.linalg.norm(full, axis=0), 1e-300)
            worst = max(worst, float(rel.max()))
        out.append((int(b.n_reduced), worst))
    return out


def reduction_errors_local(model, grid, window, local, points, times,
                           nr_values, fulls=None, threads=1):
    if fulls is None:
        fulls = full_sweep(model, grid, window, points, times, threads)
    out = []
    for nr in nr_values:
        lt = local.truncate(nr)
        worst = 0.0
        for mu, full in zip(points, fulls):
            approx = rom.online_solution_local(lt, grid, mu, times)
            rel = np.linalg.norm(approx - full, axis=0) / \
                np.maximum(np.linalg.norm(full, axis=0), 1e-300)
            worst = max(worst, float(rel.max()))
        out.append((int(max(lt.sizes)), worst))
    return out


def classical_errors(model, cred_full, points, stepper, dt, t_end, times,
                     nr_values, refs=None):
    """Worst relative error of the reduced stepping route against full stepping."""
    if refs is None:
        refs = []
        for mu in points:
            traj = step_reference(model, mu, stepper, dt, t_end)
            refs.append(np.column_stack([traj.near(t) for t in times]))
    out = []
    for nr in nr_values:
        red = cred_full.truncate(nr)
        worst = 0.0
        for mu, ref in zip(points, refs):
            approx = rom.classical_step_online(red, mu, stepper, dt, t_end, times)
            rel = np.linalg.norm(approx - ref, axis=0) / \
                np.maximum(np.linalg.norm(ref, axis=0), 1e-300)
            worst = max(worst, float(rel.max()))
        out.append((int(red.n_reduced), worst))
    return out


def projection_errors(snapshots, basis_columns, nr_values):
    """Relative Frobenius projection error of a snapshot family onto basis
    prefixes.

    Used for the transport study, where time-domain reconstruction through
    the contour is not available (delayed content grows along the left tail)
    and the meaningful comparison is how much of each snapshot family its
    compressed space captures.
    """
    total = max(float(np.linalg.norm(snapshots)), 1e-300)
    out = []
    for nr in nr_values:
        b = basis_columns[:, :nr]
        resid = snapshots - b @ (b.conj().T @ snapshots)
        out.append((int(b.shape[1]), float(np.linalg.norm(resid)) / total))
    return out


def time_laplace_online(red, grid, mu, times, repeats=5, symmetric=True):
    """Median wall time of the size-independent online stage (no lift).

    By default only the upper-half nodes are solved (the half-plane form of
    the quadrature sum), which is valid for real-data problems.
    """
    from .fom import half_plane_factors

    if symmetric:
        factors = half_plane_factors(grid)
        idx = np.nonzero(factors)[0]
    else:
        idx = np.arange(grid.n_nodes)
        factors = np.ones(grid.n_nodes)
    weights = [(np.exp(grid.z[idx] * t) * grid.dz[idx]) * factors[idx] for t in times]

    def run():
        betas = rom.solve_nodes(red, grid, mu, node_indices=idx)
        return [w @ betas for w in weights]

    return median_time(run, repeats)


def time_classical_online(cred, mu, stepper, dt, t_end, times, repeats=5):
    def run():
        return rom.classical_step_online(cred, mu, stepper, dt, t_end, times,
                                         lift_result=False)

    return median_time(run, repeats)


def svd_study_model(model, velocities, stepper, dt, t_end, grid, threads=1):
    """Singular values of stepping-trajectory vs transform-snapshot families."""
    blocks = parallel_map(
        lambda mu: step_reference(model, mu, stepper, dt, t_end).states,
        velocities, threads)
    sv_time = np.linalg.svd(np.hstack(blocks), compute_uv=False)

    def transform_block(mu):
        return np.column_stack([s.uhat for s in solve_grid(model, grid, mu)])

    cols = parallel_map(transform_block, velocities, threads)
    sv_lap = np.linalg.svd(np.hstack(cols), compute_uv=False)
    return sv_time, sv_lap


def svd_study_heaviside(mu_samples, t_samples, x_grid, z_nodes):
    time_mat, lap_mat = heaviside_snapshot_matrices(mu_samples, t_samples,
                                                    x_grid, z_nodes)
    return (np.linalg.svd(time_mat, compute_uv=False),
            np.linalg.svd(lap_mat, compute_uv=False))


def crossing_index(sigmas, threshold):
    """First 1-based index where the relative singular value drops below threshold."""
    rel = sigmas / sigmas[0]
    below = np.nonzero(rel < threshold)[0]
    return int(below[0]) + 1 if below.size else -1
