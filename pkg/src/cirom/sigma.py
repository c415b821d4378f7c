"""Smallest-singular-value machinery for shifted parametric operators.

The resolvent norm along the profile equals ``1 / sigma_min(z I - A(mu))``;
the error estimator needs per-node lower bounds of ``sigma_min`` over the
whole parameter box.  Those are produced either by brute minimization over a
training grid (small instances) or by a multi-start projected gradient
descent using the analytic derivative of a simple singular value

    d sigma / d mu_i = -Re( u^H (dA/dmu_i) v ),

with ``u, v`` the singular vectors of ``z I - A(mu)``.  The minus sign comes
from differentiating the shifted matrix; it is validated against central
differences in the test suite.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._validation import as_parameter
from .contour import conjugate_node_plan
from .errors import (
    MultiplicityError,
    ProfileFailureError,
    SingularShiftError,
)
from .util import parallel_map

DENSE_CUTOFF = 150
GAP_RTOL = 1e-8


def _dense_triplet(m):
    u_mat, s_vals, vh = np.linalg.svd(m)
    sigma = float(s_vals[-1])
    gap = float(s_vals[-2]) if s_vals.size > 1 else np.inf
    return sigma, u_mat[:, -1], vh[-1].conj(), gap


def sigma_min(mat, want_vectors=True, want_gap=False, dense_cutoff=DENSE_CUTOFF):
    """Smallest singular triplet of a (sparse) complex square matrix.

    Small matrices go through dense LAPACK; larger ones through inverse
    iteration on ``M^H M`` accelerated by Lanczos, with the factorization of
    ``M`` supplying the inverse applications.  The returned vectors are unit
    norm with the phase fixed so that ``u^H M v = sigma >= 0``.

    Returns ``(sigma, u, v)`` and appends the next singular value when
    ``want_gap`` is set.
    """
    n = mat.shape[0]
    if mat.shape[0] != mat.shape[1]:
        raise ValueError("matrix must be square")
    sparse_input = sp.issparse(mat)
    if n <= dense_cutoff or not sparse_input:
        dense = mat.toarray() if sparse_input else np.asarray(mat)
        dense = dense.astype(complex, copy=False)
        if not want_vectors:
            svals = np.linalg.svd(dense, compute_uv=False)
            sigma = float(svals[-1])
            second = float(svals[-2]) if svals.size > 1 else np.inf
            return (sigma,) + ((second,) if want_gap else ())
        sigma, u, v, second = _dense_triplet(dense)
        out = (sigma, u, v) if want_vectors else (sigma,)
        return out + ((second,) if want_gap else ())

    mc = mat.tocsc().astype(complex)
    try:
        lu = spla.splu(mc)
    except RuntimeError:
        # numerically singular shift: fall back to dense when feasible
        if n <= 4 * DENSE_CUTOFF:
            sigma, u, v, second = _dense_triplet(mc.toarray())
            out = (sigma, u, v) if want_vectors else (sigma,)
            return out + ((second,) if want_gap else ())
        raise SingularShiftError("sparse factorization failed for sigma_min")

    def apply_inv_gram(y):
        # (M^H M)^{-1} y = M^{-1} (M^{-H} y)
        return lu.solve(lu.solve(y, trans="H"), trans="N")

    op = spla.LinearOperator((n, n), matvec=apply_inv_gram, dtype=complex)
    k = 2 if want_gap else 1
    try:
        vals, vecs = spla.eigsh(op, k=k, which="LM", tol=1e-12, maxiter=5000)
    except spla.ArpackNoConvergence:
        if n <= 2400:
            sigma, u, v, second = _dense_triplet(mc.toarray())
            out = (sigma, u, v) if want_vectors else (sigma,)
            return out + ((second,) if want_gap else ())
        raise
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    sigma = float(1.0 / np.sqrt(vals[0]))
    second = float(1.0 / np.sqrt(vals[1])) if want_gap and k > 1 else np.inf
    if not want_vectors:
        return (sigma,) + ((second,) if want_gap else ())
    v = vecs[:, 0]
    v = v / np.linalg.norm(v)
    mv = mc @ v
    nrm = np.linalg.norm(mv)
    u = mv / nrm if nrm > 0 else np.zeros_like(v)
    out = (sigma, u, v)
    return out + ((second,) if want_gap else ())


def sigma_min_value(mat, dense_cutoff=DENSE_CUTOFF):
    return sigma_min(mat, want_vectors=False, dense_cutoff=dense_cutoff)[0]


def _shifted(op, z, mu):
    return (complex(z) * sp.identity(op.dim, format="csr") - op.assemble(mu)).tocsr()


def sigma_gradient(op, z, mu, triplet=None):
    """Analytic gradient of ``mu -> sigma_min(z I - A(mu))``.

    Requires the smallest singular value to be simple (relative gap above
    ``GAP_RTOL``); otherwise a ``MultiplicityError`` signals the caller to
    fall back to finite differences.
    """
    mu = as_parameter(mu, op.n_params)
    if triplet is None:
        sigma, u, v, second = sigma_min(_shifted(op, z, mu), want_gap=True)
    else:
        sigma, u, v, second = triplet
    if op.dim > 1 and (second - sigma) <= GAP_RTOL * max(second, 1e-300):
        raise MultiplicityError(
            f"smallest singular value not simple: sigma={sigma:.6e}, next={second:.6e}"
        )
    if sigma == 0.0:
        raise MultiplicityError("singular matrix: gradient undefined")
    grads = op.coefficient_gradients(mu)  # (n_terms, n_params)
    inner = np.array([np.vdot(u, term.matrix @ v) for term in op.terms])
    return -np.real(inner @ grads.astype(complex))


def _fd_gradient(op, z, mu, eval_sigma, h=1e-6):
    grad = np.empty(mu.size)
    for i in range(mu.size):
        step = h * max(1.0, abs(mu[i]))
        up = mu.copy()
        up[i] += step
        down = mu.copy()
        down[i] -= step
        grad[i] = (eval_sigma(up) - eval_sigma(down)) / (2.0 * step)
    return grad


@dataclass
class SigmaResult:
    """Outcome of the lower-bound search at one transform point."""

    sigma: float
    argmin_mu: np.ndarray
    eigenproblem_count: int
    trace: list
    traces: list


def default_starts(box):
    """Box corners plus the center, duplicates removed."""
    pts = np.vstack([box.corners(), box.center()])
    return np.unique(pts, axis=0)


def sigma_lb_optimize(op, z, box, starts=None, max_iter=200, armijo=1e-4,
                      shrink=0.5, step0=1.0, step_tol=1e-10, grad_tol=1e-8,
                      threads=1):
    """Multi-start projected gradient descent for ``min_mu sigma_min(z I - A(mu))``.

    Backtracking line search with an Armijo sufficient-decrease test; iterates
    are clipped to the box.  Every singular-triplet/value solve, including
    line-search probes and finite-difference fallbacks, contributes to the
    eigenproblem count.  Non-convexity means the result is the best local
    minimum over the starts; all evaluations are tracked so the returned value
    is the best point ever seen.
    """
    if starts is None:
        starts = default_starts(box)
    starts = [box.clip(s) for s in np.atleast_2d(starts)]
    if not starts:
        raise ValueError("need at least one start")

    counts = [0]

    def eval_value(mu):
        counts[0] += 1
        return sigma_min_value(_shifted(op, z, mu))

    def eval_triplet(mu):
        counts[0] += 1
        return sigma_min(_shifted(op, z, mu), want_gap=True)

    best = [np.inf, None]

    def note(mu, sigma):
        if sigma < best[0]:
            best[0] = sigma
            best[1] = mu.copy()

    def descend(mu0):
        mu = box.clip(mu0)
        trace = []
        sigma, u, v, second = eval_triplet(mu)
        note(mu, sigma)
        trace.append((mu.copy(), sigma))
        for _ in range(max_iter):
            try:
                grad = sigma_gradient(op, z, mu, triplet=(sigma, u, v, second))
            except MultiplicityError:
                grad = _fd_gradient(op, z, mu, lambda m: eval_value(box.clip(m)))
            proj_norm = np.linalg.norm(box.clip(mu - grad) - mu)
            if proj_norm < grad_tol:
                break
            step = step0
            accepted = False
            while step >= step_tol:
                cand = box.clip(mu - step * grad)
                direction = cand - mu
                if np.linalg.norm(direction) == 0.0:
                    break
                sigma_cand = eval_value(cand)
                note(cand, sigma_cand)
                if sigma_cand <= sigma + armijo * float(grad @ direction):
                    accepted = True
                    break
                step *= shrink
            if not accepted:
                break
            mu = cand
            sigma, u, v, second = eval_triplet(mu)
            note(mu, sigma)
            trace.append((mu.copy(), sigma))
        return trace

    traces = parallel_map(descend, starts, threads=threads)
    best_trace = min(traces, key=lambda tr: tr[-1][1])
    return SigmaResult(
        sigma=float(best[0]),
        argmin_mu=best[1],
        eigenproblem_count=counts[0],
        trace=best_trace,
        traces=traces,
    )


def sigma_min_on_grid(op, z, points, threads=1):
    """Exact ``sigma_min`` values over a finite parameter set."""
    points = np.atleast_2d(points)
    vals = parallel_map(lambda mu: sigma_min_value(_shifted(op, z, mu)), points,
                        threads=threads)
    return np.asarray(vals)


def pseudospectrum_indicator(op, mu, z, t):
    """Weighted resolvent indicator ``exp(-Re(z) t) * sigma_min(A(mu) - z I)``.

    A point belongs to the weighted epsilon-level set iff the value is at
    most epsilon.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    sigma = sigma_min_value(_shifted(op, z, mu))  # |sigma(A - zI)| = |sigma(zI - A)|
    return float(np.exp(-complex(z).real * t) * sigma)


@dataclass
class SigmaLowerBounds:
    """Per-node lower bounds of the shifted smallest singular value."""

    per_node: np.ndarray
    argmins: np.ndarray
    method: str

    def __post_init__(self):
        self.per_node = np.asarray(self.per_node, dtype=float)
        if np.any(self.per_node <= 0):
            raise ValueError("lower bounds must be positive")


def _operator_is_real(op):
    return all(np.isrealobj(term.matrix.data) for term in op.terms)


def lower_bounds_grid(op, grid, points, threads=1):
    """Exact per-node minima over a finite parameter set.

    For real operators conjugate nodes share their singular values, so only
    the upper half of the grid is computed and the rest mirrored.
    """
    points = np.atleast_2d(points)
    compute, mirrored = conjugate_node_plan(grid, mirror=_operator_is_real(op))

    def one(idx):
        vals = sigma_min_on_grid(op, grid.z[idx], points)
        k = int(np.argmin(vals))
        return float(vals[k]), points[k]

    results = parallel_map(one, compute, threads=threads)
    per_node = np.empty(grid.n_nodes)
    argmins = np.empty((grid.n_nodes, points.shape[1]))
    for idx, (val, arg) in zip(compute, results):
        per_node[idx] = val
        argmins[idx] = arg
    for idx, src in mirrored.items():
        per_node[idx] = per_node[src]
        argmins[idx] = argmins[src]
    return SigmaLowerBounds(per_node=per_node, argmins=argmins, method="exact-grid")


def lower_bounds_optimize(op, grid, box, threads=1, **kwargs):
    """Per-node lower bounds via the gradient descent, mirrored across conjugates."""
    compute, mirrored = conjugate_node_plan(grid, mirror=_operator_is_real(op))

    def one(idx):
        res = sigma_lb_optimize(op, grid.z[idx], box, **kwargs)
        return res.sigma, res.argmin_mu

    results = parallel_map(one, compute, threads=threads)
    per_node = np.empty(grid.n_nodes)
    argmins = np.empty((grid.n_nodes, box.n_params))
    for idx, (val, arg) in zip(compute, results):
        per_node[idx] = val
        argmins[idx] = arg
    for idx, src in mirrored.items():
        per_node[idx] = per_node[src]
        argmins[idx] = argmins[src]
    return SigmaLowerBounds(per_node=per_node, argmins=argmins, method="optimized")


@dataclass
class ProfileReport:
    accepted: bool
    worst_mu: np.ndarray
    err_bound: float
    lbs: SigmaLowerBounds
    rounds: int
    grid: object


def validate_profile(model, grid, box, window, tol, method="optimize",
                     points=None, max_rounds=5, threads=1, redesign=None):
    """Accept or rebuild an integration profile from its numerical-error bound.

    Round structure: (1) per-node lower bounds of the shifted smallest
    singular value over the box, (2) the round-off error bound evaluated at
    each per-node argmin using actual solver residuals and the window
    endpoint rule, (3) accept if every bound is below ``tol``, otherwise
    rebuild the profile anchored at the worst parameter and repeat.
    """
    from .contour import design_grid
    from .fom import solve_grid

    op = model.operator

    def bounds_for(g):
        if method == "grid":
            if points is None:
                raise ValueError("grid method needs a finite parameter set")
            return lower_bounds_grid(op, g, points, threads=threads)
        return lower_bounds_optimize(op, g, box, threads=threads)

    if redesign is None:
        def redesign(worst_mu, g):
            return design_grid(model, box, window.t0, tol,
                               probes=np.atleast_2d(worst_mu), n=g.n)

    current = grid
    for round_idx in range(1, max_rounds + 1):
        lbs = bounds_for(current)
        t_j = np.where(current.z.real >= 0.0, window.t_end, window.t0)
        weights = (current.c / current.n) * np.exp(current.z.real * t_j) \
            * np.abs(current.dz)
        candidates = np.unique(lbs.argmins, axis=0)
        worst_bound, worst_mu = -np.inf, None
        for mu in candidates:
            snaps = solve_grid(model, current, mu, threads=threads)
            residuals = np.array([s.residual_norm for s in snaps])
            bound = float(np.sum(weights * residuals / lbs.per_node))
            if bound > worst_bound:
                worst_bound, worst_mu = bound, mu
        if worst_bound <= tol:
            return ProfileReport(True, worst_mu, worst_bound, lbs, round_idx, current)
        if round_idx < max_rounds:
            current = redesign(worst_mu, current)
    raise ProfileFailureError(
        f"no acceptable profile after {max_rounds} rounds; "
        f"worst bound {worst_bound:.3e} > tol {tol:.3e}",
        worst_mu=worst_mu, err_bound=worst_bound,
    )
