"""Parabolic integration profile and trapezoid quadrature grid.

The inverse transform is evaluated along the parabola

    z(s) = -s**2 - 2j*s*a1 + a2,        a1 < 0, a2 > 0,

truncated to ``s in [-c*pi, c*pi]`` and sampled at the equispaced interior
nodes ``xi_j = -c*pi + j*(2*c*pi/n)``, ``j = 1..n-1``.  The truncation ``c``
is fixed a priori from a tail bound on the integrand and the node count ``n``
by a doubling loop on a reference solve (the rule converges exponentially, so
doubling is cheap insurance).
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive
from .errors import NodeCountFailureError, TruncationFailureError


@dataclass(frozen=True)
class ParabolicContour:
    """Left-opening parabola with vertex ``a2`` on the positive real axis."""

    a1: float = -1.0
    a2: float = 0.5

    def __post_init__(self):
        if not self.a1 < 0:
            raise ValueError(f"a1 must be negative, got {self.a1}")
        if not self.a2 > 0:
            raise ValueError(f"a2 must be positive, got {self.a2}")

    def point(self, s):
        """Contour point and derivative at arclength parameter ``s``.

        Works elementwise on arrays.
        """
        s = np.asarray(s, dtype=float)
        z = -s * s - 2j * s * self.a1 + self.a2
        dz = -2.0 * s - 2j * self.a1
        if z.ndim == 0:
            return complex(z), complex(dz)
        return z, dz


def eval_contour(contour, s):
    return contour.point(s)


@dataclass(frozen=True)
class QuadratureGrid:
    """Trapezoid nodes on a truncated contour.

    ``xi`` holds the ``n - 1`` interior abscissae; ``z`` and ``dz`` the mapped
    points and map derivatives.  The inversion weight of node ``j`` at time
    ``t`` is ``(c / (1j * n)) * exp(z_j * t) * dz_j``.
    """

    contour: ParabolicContour
    c: float
    n: int
    xi: np.ndarray
    z: np.ndarray
    dz: np.ndarray

    @property
    def n_nodes(self):
        return self.n - 1

    @property
    def prefactor(self):
        return self.c / (1j * self.n)

    def conjugate_partner(self, j):
        """Index of the node conjugate to node ``j`` (0-based)."""
        return self.n - 2 - j


def build_grid(contour, c, n):
    """Equispaced interior trapezoid grid with ``n - 1`` nodes."""
    check_positive(c, "truncation parameter c")
    n = int(n)
    if n < 2:
        raise ValueError(f"node count n must be at least 2, got {n}")
    step = 2.0 * c * np.pi / n
    xi = -c * np.pi + np.arange(1, n) * step
    z, dz = contour.point(xi)
    return QuadratureGrid(contour, float(c), n, xi, z, dz)


def conjugate_node_plan(grid, mirror=True):
    """Split node indices into a computed set and conjugate-mirror assignments.

    With ``mirror`` off, every node is computed directly.  Otherwise one node
    of each conjugate pair is computed and the partner marked for mirroring;
    self-paired nodes (on the real axis) are always computed.
    """
    if not mirror:
        return list(range(grid.n_nodes)), {}
    compute, mirrored = [], {}
    for idx in range(grid.n_nodes):
        partner = grid.conjugate_partner(idx)
        if partner < 0 or partner >= grid.n_nodes or partner == idx:
            compute.append(idx)
        elif idx < partner:
            compute.append(idx)
            mirrored[partner] = idx
    return compute, mirrored


def _tail_magnitude(contour, c, horizon, transform_bound):
    z, dz = contour.point(c * np.pi)
    return float(np.exp(z.real * horizon) * abs(dz) * transform_bound)


def choose_truncation(contour, horizon, transform_bound, tol,
                      c_min=0.1, c_max=10.0, rel_tol=1e-3):
    """Smallest truncation ``c`` whose integrand tail falls below ``tol``.

    ``transform_bound`` is an a-priori bound on the transform norm along the
    contour tail; the condition enforced is
    ``exp(Re z(c*pi) * horizon) * |z'(c*pi)| * transform_bound <= tol``.
    Solved by doubling plus bisection to relative ``rel_tol``; the returned
    endpoint is certified (the condition holds there exactly).
    """
    check_positive(tol, "tol")
    if transform_bound < 0:
        raise ValueError("transform_bound must be nonnegative")
    if _tail_magnitude(contour, c_min, horizon, transform_bound) <= tol:
        return float(c_min)
    lo = c_min
    hi = c_min
    while _tail_magnitude(contour, hi, horizon, transform_bound) > tol:
        lo = hi
        hi = min(2.0 * hi, c_max)
        if hi == lo:
            raise TruncationFailureError(
                f"tail condition unsatisfiable within c_max={c_max}"
            )
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _tail_magnitude(contour, mid, horizon, transform_bound) <= tol:
            hi = mid
        else:
            lo = mid
    return float(hi)


def choose_node_count(model, contour, c, mu_ref, horizon, tol,
                      n_start=8, n_cap=512):
    """Node count by doubling until successive inversions agree to ``tol``.

    Compares reconstructions at ``t = horizon`` for the reference parameter;
    returns the first accepted doubled count.
    """
    from .fom import full_solution  # deferred: fom builds on this module
    from .fom import TimeWindow

    window = TimeWindow(horizon, 1.0)
    n = int(n_start)
    grid = build_grid(contour, c, n)
    u_prev = full_solution(model, mu_ref, grid, window, [horizon])[:, 0]
    last = None
    while 2 * n <= n_cap:
        n *= 2
        grid = build_grid(contour, c, n)
        u_next = full_solution(model, mu_ref, grid, window, [horizon])[:, 0]
        denom = np.linalg.norm(u_next)
        last = float(np.linalg.norm(u_next - u_prev) / denom) if denom > 0 else 0.0
        if last <= tol:
            return n
        u_prev = u_next
    raise NodeCountFailureError(
        f"doubling reached cap {n_cap} with discrepancy {last:.3e} > tol {tol:.3e}",
        last_discrepancy=last,
    )


def design_grid(model, box, horizon, tol, a1=-1.0, a2=None, c=None, n=None,
                probes=None, mu_ref=None, margin=0.5, n_cap=1024):
    """Build a validated quadrature grid for a model over a parameter box.

    The vertex is placed ``margin`` to the right of both the numerical
    abscissa over a probe set (box corners plus center) and the rightmost
    source pole, so every singularity of the transform stays left of the
    profile.  The truncation tail bound comes from one actual solve at a
    moderate tail point (the transform norm decreases along the tail, so that
    value dominates the rest); the node count from ``choose_node_count`` at
    the shortest time of interest.  Any of ``a2, c, n`` may be overridden.
    """
    from .fom import solve_transform

    if probes is None:
        probes = np.vstack([box.corners(), box.center()])
    if mu_ref is None:
        mu_ref = box.center()
    if a2 is None:
        alpha = model.spectral_bound(probes)
        pole_re = max(
            (complex(pole(mu)).real for pole in model.source.poles for mu in probes),
            default=-np.inf,
        )
        a2 = max(alpha, pole_re, 0.0) + margin
    contour = ParabolicContour(a1, a2)
    if c is None:
        z_probe, _ = contour.point(0.5 * np.pi)
        snap = solve_transform(model, z_probe, mu_ref)
        transform_bound = float(np.linalg.norm(snap.uhat))
        c = choose_truncation(contour, horizon, transform_bound, tol)
    if n is None:
        n = choose_node_count(model, contour, c, mu_ref, horizon, tol,
                              n_cap=n_cap)
    return build_grid(contour, c, n)
