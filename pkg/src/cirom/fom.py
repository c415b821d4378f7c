"""Full-order transform solves and time-domain reconstruction.

For each quadrature node the shifted system ``(z I - A(mu)) uhat = u0 + g(z)``
is solved by a direct sparse factorization (dimensions here are small enough
that one factorization per node is both robust and embarrassingly parallel).
Reconstruction at any time in the validated window reuses the same node
solves; only the scalar weights ``exp(z_j t)`` change.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._validation import as_parameter, check_positive
from .errors import SingularShiftError, SymmetryViolationError, WindowViolationError
from .util import parallel_map

IMAG_RESIDUE_TOL = 1e-6


@dataclass(frozen=True)
class TimeWindow:
    """Relative time window ``[t0, lam * t0]``; ``lam = 1`` collapses to one instant."""

    t0: float
    lam: float

    def __post_init__(self):
        check_positive(self.t0, "t0")
        if self.lam < 1.0:
            raise ValueError(f"window factor must be >= 1, got {self.lam}")

    @property
    def t_end(self):
        return self.lam * self.t0

    def contains(self, t, rtol=1e-9):
        pad = rtol * max(1.0, self.t_end)
        return self.t0 - pad <= t <= self.t_end + pad

    def sample(self, count=10):
        """Geometrically spaced instants covering the window, endpoints included."""
        if self.lam == 1.0 or count == 1:
            return np.array([self.t0])
        return np.geomspace(self.t0, self.t_end, count)


@dataclass(frozen=True)
class TransformSnapshot:
    """One transform solve: point, parameter, solution and solver residual."""

    z: complex
    mu: np.ndarray
    uhat: np.ndarray
    residual_norm: float


def solve_transform(model, z, mu):
    """Solve ``(z I - A(mu)) uhat = u0(mu) + g(z; mu)`` by sparse LU."""
    mu = as_parameter(mu, model.n_params)
    z = complex(z)
    a = model.operator.assemble(mu)
    shifted = (z * sp.identity(model.dim, format="csc") - a).tocsc()
    rhs = model.laplace_rhs.assemble(z, mu)
    try:
        lu = spla.splu(shifted)
    except RuntimeError as exc:
        raise SingularShiftError(f"factorization failed at z={z}: {exc}") from exc
    uhat = lu.solve(rhs)
    if not np.all(np.isfinite(uhat)):
        raise SingularShiftError(f"shifted solve returned non-finite values at z={z}")
    residual = float(np.linalg.norm(shifted @ uhat - rhs))
    return TransformSnapshot(z=z, mu=mu, uhat=uhat, residual_norm=residual)


def solve_grid(model, grid, mu, threads=1):
    """Transform snapshots at every grid node, in node order."""
    return parallel_map(lambda z: solve_transform(model, z, mu), grid.z, threads)


def contour_sum(grid, values, t, symmetric=False):
    """Weighted trapezoid combination ``(c / (1j n)) sum_j e^{z_j t} V_j z'_j``.

    ``values`` has one row per node.  With ``symmetric=True`` the conjugate
    half of the sum is replaced by ``(2c/n) Im(...)`` over the upper-half
    nodes (valid only when the data is real, where it agrees with the full
    sum exactly); the result is then returned with a zero imaginary part.
    """
    values = np.asarray(values)
    weights = np.exp(grid.z * t) * grid.dz
    if not symmetric:
        return grid.prefactor * np.tensordot(weights, values, axes=(0, 0))
    half = np.tensordot(weights * half_plane_factors(grid), values, axes=(0, 0))
    return (2.0 * grid.c / grid.n) * np.imag(half) + 0.0j


def half_plane_factors(grid):
    """Per-node factors of the half-plane form of the trapezoid sum.

    Upper-half nodes count once, a node on the real axis half, the conjugate
    half not at all; only the imaginary part of the weighted sum survives.
    Node ``j`` (1-based) sits at ``xi = (j - n/2) * step``.
    """
    j = np.arange(1, grid.n)
    return np.where(2 * j > grid.n, 1.0, 0.0) + np.where(2 * j == grid.n, 0.5, 0.0)


def invert(grid, snapshots, t, symmetric=False, require_real=True,
           imag_tol=IMAG_RESIDUE_TOL):
    """Reconstruct the state at time ``t`` from node snapshots of one parameter.

    For real-data problems the imaginary residue is a contour-validity
    tripwire: it must vanish to round-off relative to the real part.
    """
    if len(snapshots) != grid.n_nodes:
        raise ValueError(
            f"need {grid.n_nodes} snapshots covering the grid, got {len(snapshots)}"
        )
    for snap, z in zip(snapshots, grid.z):
        if abs(snap.z - z) > 1e-12 * max(1.0, abs(z)):
            raise ValueError("snapshots are not aligned with the grid nodes")
    uhats = np.stack([snap.uhat for snap in snapshots])
    total = contour_sum(grid, uhats, t, symmetric=symmetric)
    if not require_real:
        return total
    re_norm = float(np.linalg.norm(total.real))
    im_norm = float(np.linalg.norm(total.imag))
    if im_norm > imag_tol * max(re_norm, 1e-300):
        raise SymmetryViolationError(
            f"imaginary residue {im_norm:.3e} exceeds {imag_tol:.1e} x ||Re|| = "
            f"{imag_tol * re_norm:.3e}; contour or data invalid"
        )
    return total.real


def full_solution(model, mu, grid, window, times, threads=1, symmetric=False):
    """States at several times from one set of node solves.

    The solves are time-independent, so requesting more instants adds only
    scalar work.  Every requested time must lie in the validated window.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    for t in times:
        if not window.contains(t):
            raise WindowViolationError(
                f"t={t} outside validated window [{window.t0}, {window.t_end}]"
            )
    snapshots = solve_grid(model, grid, mu, threads=threads)
    out = np.empty((model.dim, times.size))
    for k, t in enumerate(times):
        out[:, k] = invert(grid, snapshots, t, symmetric=symmetric)
    return out
