"""Reduced-order machinery: compression, projection, estimation, greedy loops.

Offline, snapshots of the transform are compressed into an orthonormal basis
``B`` and every parameter-independent piece is projected once: operator terms
``B^H A_q B``, right-hand-side terms ``B^H g_k`` and the Gram matrix of the
stacked columns ``[B, A_1 B, ..., A_Q B, g_1, ..., g_K]``.  Online, for a new
parameter the node systems are dense and small, and the residual norm

    || (z I - A(mu)) B beta - g(z; mu) ||

is a quadratic form in precomputed Gram blocks, so no full-size array is ever
touched until the final lift.

Two offline strategies are provided: a pooled compress-then-enrich greedy
over the whole node set, and an independent per-node greedy that tailors one
small space to each quadrature point.  A classical time-stepping baseline
(trajectory compression plus reduced implicit stepping) lives at the end for
benchmark comparisons.
"""

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import as_parameter, as_parameter_matrix
from .affine import ParameterBox, ParameterGrid
from .contour import design_grid
from .errors import (
    DegenerateSnapshotError,
    GreedyStallError,
    InvalidContextError,
    ReducedSingularityError,
    SymmetryViolationError,
)
from .fom import IMAG_RESIDUE_TOL, TimeWindow, contour_sum, solve_grid, solve_transform
from .util import parallel_map
from . import sigma as sigma_mod


# --------------------------------------------------------------------------
# basis construction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ReducedBasis:
    """Orthonormal complex basis with snapshot provenance."""

    columns: np.ndarray
    provenance: tuple = ()
    singular_values: Optional[np.ndarray] = None

    def __post_init__(self):
        cols = np.asarray(self.columns)
        if cols.ndim != 2 or cols.shape[1] < 1:
            raise ValueError("basis must be a nonempty column matrix")
        object.__setattr__(self, "columns", cols.astype(complex))
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def n_full(self):
        return self.columns.shape[0]

    @property
    def n_reduced(self):
        return self.columns.shape[1]

    def orthonormality_defect(self):
        gram = self.columns.conj().T @ self.columns
        return float(np.linalg.norm(gram - np.eye(self.n_reduced), "fro"))

    def truncate(self, k):
        k = min(int(k), self.n_reduced)
        return ReducedBasis(self.columns[:, :k], self.provenance,
                            self.singular_values)


def pod(snapshots, tol_pod, provenance=()):
    """Orthonormal basis of the leading left singular directions.

    Directions are kept while ``sigma_i / sigma_1 > tol_pod``; at least one
    survives.
    """
    mat = np.asarray(snapshots)
    if mat.ndim != 2 or mat.shape[1] < 1:
        raise ValueError("snapshot matrix must have at least one column")
    if not 0.0 < tol_pod < 1.0:
        raise ValueError("tol_pod must lie in (0, 1)")
    u, svals, _ = np.linalg.svd(mat, full_matrices=False)
    if svals[0] == 0.0:
        raise DegenerateSnapshotError("snapshot matrix is identically zero")
    keep = max(1, int(np.sum(svals > tol_pod * svals[0])))
    return ReducedBasis(u[:, :keep], provenance, singular_values=svals)


def orthonormalize(snapshots, provenance=(), drop_tol=1e-12):
    """Gram-Schmidt with one re-orthogonalization pass; drops dependent columns."""
    mat = np.asarray(snapshots, dtype=complex)
    kept = []
    for col in mat.T:
        v = col.copy()
        scale = np.linalg.norm(v)
        if scale == 0.0:
            continue
        for _ in range(2):
            for b in kept:
                v -= np.vdot(b, v) * b
        nrm = np.linalg.norm(v)
        if nrm > drop_tol * scale:
            kept.append(v / nrm)
    if not kept:
        raise DegenerateSnapshotError("no independent directions to orthonormalize")
    return ReducedBasis(np.column_stack(kept), provenance)


# --------------------------------------------------------------------------
# Galerkin projection and the offline/online split
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ReducedModel:
    """All parameter-independent projections needed by the online stage.

    ``gram`` is the Gram matrix of the stacked columns
    ``[B | A_1 B | ... | A_Q B | g_1 | ... | g_K]``; residual norms online are
    quadratic forms in it with scalar coefficient vectors.
    """

    op_terms: np.ndarray          # (Q, Nr, Nr)
    rhs_terms: np.ndarray         # (K, Nr)
    reduced_identity: np.ndarray  # (Nr, Nr), stored check of orthonormality
    gram: np.ndarray              # (D, D) with D = (Q + 1) Nr + K
    operator: object              # AffineOperator (coefficients only)
    rhs: object                   # AffineSource for u0 + transformed source
    dim_full: int

    @property
    def n_reduced(self):
        return self.op_terms.shape[1]

    @property
    def n_op_terms(self):
        return self.op_terms.shape[0]

    @property
    def n_rhs_terms(self):
        return self.rhs_terms.shape[0]

    def assemble_operator(self, mu):
        theta = self.operator.coefficients(mu)
        return np.tensordot(theta, self.op_terms, axes=(0, 0))

    def rhs_coefficients(self, zs, mu):
        return np.stack([self.rhs.coefficients(z, mu) for z in np.atleast_1d(zs)])

    def assemble_rhs(self, zs, mu):
        return self.rhs_coefficients(zs, mu) @ self.rhs_terms

    def truncate(self, k):
        """Restriction to the first ``k`` basis vectors without full-size work."""
        k = min(int(k), self.n_reduced)
        nr, nq, nk = self.n_reduced, self.n_op_terms, self.n_rhs_terms
        blocks = [b * nr + np.arange(k) for b in range(nq + 1)]
        blocks.append((nq + 1) * nr + np.arange(nk))
        idx = np.concatenate(blocks)
        return ReducedModel(
            op_terms=self.op_terms[:, :k, :k],
            rhs_terms=self.rhs_terms[:, :k],
            reduced_identity=self.reduced_identity[:k, :k],
            gram=self.gram[np.ix_(idx, idx)],
            operator=self.operator,
            rhs=self.rhs,
            dim_full=self.dim_full,
        )


def galerkin_project(model, basis):
    """Project a full model onto a basis; everything online-relevant is precomputed."""
    b = basis.columns
    op_terms = []
    stacked = [b]
    for term in model.operator.terms:
        ab = term.matrix @ b
        stacked.append(ab)
        op_terms.append(b.conj().T @ ab)
    rhs = model.laplace_rhs
    rhs_terms = np.stack([b.conj().T @ term.vector for term in rhs.terms])
    g_vecs = np.column_stack([term.vector for term in rhs.terms]).astype(complex)
    x = np.hstack(stacked + [g_vecs])
    gram = x.conj().T @ x
    return ReducedModel(
        op_terms=np.stack(op_terms),
        rhs_terms=rhs_terms,
        reduced_identity=b.conj().T @ b,
        gram=gram,
        operator=model.operator,
        rhs=rhs,
        dim_full=model.dim,
    )


def solve_nodes(red, grid, mu, node_indices=None):
    """Dense reduced node solves ``(z_j I - A_r(mu)) beta_j = g_r(z_j; mu)``.

    Batched over the requested nodes; cost is independent of the full
    dimension.
    """
    zs = grid.z if node_indices is None else grid.z[np.atleast_1d(node_indices)]
    a_r = red.assemble_operator(mu)
    eye = np.eye(red.n_reduced, dtype=complex)
    mats = zs[:, None, None] * eye[None, :, :] - a_r[None, :, :]
    rhs = red.assemble_rhs(zs, mu)
    try:
        betas = np.linalg.solve(mats, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise ReducedSingularityError(
            f"singular reduced shift for mu={mu}: {exc}"
        ) from exc
    if not np.all(np.isfinite(betas)):
        raise ReducedSingularityError(f"non-finite reduced solution for mu={mu}")
    return betas


def residual_norms(red, betas, zs, mu):
    """Full-size residual norms evaluated purely from Gram blocks.

    The coefficient vector per node is ``[z beta | -theta_q beta | -gamma_k]``
    against the stacked-column Gram matrix; negative round-off values of the
    quadratic form are clamped at zero.
    """
    betas = np.atleast_2d(np.asarray(betas, dtype=complex))
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    theta = red.operator.coefficients(mu).astype(complex)
    gamma = red.rhs_coefficients(zs, mu)
    n, nr = betas.shape
    d = red.gram.shape[0]
    w = np.empty((n, d), dtype=complex)
    w[:, :nr] = zs[:, None] * betas
    for q in range(red.n_op_terms):
        w[:, (q + 1) * nr:(q + 2) * nr] = -theta[q] * betas
    w[:, (red.n_op_terms + 1) * nr:] = -gamma
    vals = np.einsum("nd,de,ne->n", w.conj(), red.gram, w).real
    return np.sqrt(np.maximum(vals, 0.0))


def residual_norm(red, beta, z, mu):
    return float(residual_norms(red, beta[None, :], [z], mu)[0])


def lift(basis, combo):
    return basis.columns @ combo


def online_solution(red, basis, grid, mu, times, require_real=True,
                    symmetric=False, imag_tol=IMAG_RESIDUE_TOL):
    """Reduced states at several times; node solves are shared across times.

    With ``symmetric=True`` only the upper-half nodes are solved and the
    half-plane form of the trapezoid sum is used.  For real-data problems
    whose snapshot pool is closed under conjugation the reduced space is
    conjugate-closed too, so this agrees with the full sum up to the basis'
    round-off; the final state is the imaginary part of the lifted sum.
    """
    from .fom import half_plane_factors

    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty((basis.n_full, times.size),
                   dtype=float if require_real else complex)
    if symmetric:
        factors = half_plane_factors(grid)
        idx = np.nonzero(factors)[0]
        betas = np.zeros((grid.n_nodes, red.n_reduced), dtype=complex)
        betas[idx] = solve_nodes(red, grid, mu, node_indices=idx)
        for k, t in enumerate(times):
            weights = (np.exp(grid.z[idx] * t) * grid.dz[idx]) * factors[idx]
            y = weights @ betas[idx]
            u = (2.0 * grid.c / grid.n) * np.imag(lift(basis, y))
            out[:, k] = u if require_real else u + 0.0j
        return out
    betas = solve_nodes(red, grid, mu)
    for k, t in enumerate(times):
        combo = contour_sum(grid, betas, t)
        u = lift(basis, combo)
        if require_real:
            re_norm = np.linalg.norm(u.real)
            im_norm = np.linalg.norm(u.imag)
            if im_norm > imag_tol * max(re_norm, 1e-300):
                raise SymmetryViolationError(
                    f"imaginary residue {im_norm:.3e} exceeds tolerance"
                )
            out[:, k] = u.real
        else:
            out[:, k] = u
    return out


def online_solve(red, basis, grid, mu, t, **kwargs):
    return online_solution(red, basis, grid, mu, [t], **kwargs)[:, 0]


# --------------------------------------------------------------------------
# error estimation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimatorContext:
    """Quadrature grid, time window and per-node singular-value lower bounds."""

    grid: object
    window: TimeWindow
    sigma_lb: object  # SigmaLowerBounds or positive array

    def __post_init__(self):
        arr = getattr(self.sigma_lb, "per_node", self.sigma_lb)
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (self.grid.n_nodes,):
            raise InvalidContextError(
                f"need one lower bound per node ({self.grid.n_nodes}), got {arr.shape}"
            )
        if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
            raise InvalidContextError("sigma lower bounds must be positive and finite")
        object.__setattr__(self, "_lb_array", arr)

    @property
    def lb(self):
        return self._lb_array

    def endpoint_times(self):
        """Window endpoint maximizing ``exp(Re(z_j) t)`` per node."""
        return np.where(self.grid.z.real >= 0.0, self.window.t_end, self.window.t0)

    def node_weights(self):
        t_j = self.endpoint_times()
        return (self.grid.c / self.grid.n) * np.exp(self.grid.z.real * t_j) \
            * np.abs(self.grid.dz)


def error_estimator(red, ctx, mu):
    """Residual-based bound on the worst error over the time window."""
    betas = solve_nodes(red, ctx.grid, mu)
    res = residual_norms(red, betas, ctx.grid.z, mu)
    return float(np.sum(ctx.node_weights() * res / ctx.lb))


def error_estimator_node(red, ctx, j, mu):
    """Single-node contribution to the estimator (window max at an endpoint)."""
    betas = solve_nodes(red, ctx.grid, mu, node_indices=[j])
    res = residual_norms(red, betas, ctx.grid.z[[j]], mu)
    return float(ctx.node_weights()[j] * res[0] / ctx.lb[j])


def estimator_sweep(red, ctx, points, threads=1):
    points = np.atleast_2d(points)
    vals = parallel_map(lambda mu: error_estimator(red, ctx, mu), points, threads)
    return np.asarray(vals)


# --------------------------------------------------------------------------
# greedy offline loops
# --------------------------------------------------------------------------

@dataclass
class GreedyRow:
    iteration: int
    mu: np.ndarray
    delta_max: float
    n_reduced: int
    snapshots_total: int
    wall_time: float


@dataclass
class GreedyLog:
    rows: list = field(default_factory=list)
    converged: bool = False
    reason: str = ""

    @property
    def snapshots_total(self):
        return self.rows[-1].snapshots_total if self.rows else 0


def _as_points(training):
    if isinstance(training, ParameterGrid):
        return training.points
    return as_parameter_matrix(training)


def greedy_pod(model, grid, ctx, training, tol, tol_pod, mu_start=None,
               max_iter=100, threads=1, plateau_patience=3, plateau_factor=0.7):
    """Pooled compress-then-enrich greedy over the whole node set.

    Each iteration solves every node at the selected parameter, re-compresses
    the entire snapshot pool, and moves to the estimator argmax over the
    training set (first index wins ties).  Stops when the worst estimator
    value drops below ``tol``.  Because the estimator bottoms out at the
    round-off floor of the Gram-based residual, a plateau of the worst value
    also terminates the loop (reported but not an error); exhausting
    ``max_iter`` raises.
    """
    points = _as_points(training)
    mu = as_parameter(mu_start if mu_start is not None else points[0],
                      model.n_params)
    log = GreedyLog()
    pool = []
    origins = []
    best_delta = np.inf
    stagnation = 0
    t_start = time.perf_counter()
    for iteration in range(1, max_iter + 1):
        snaps = solve_grid(model, grid, mu, threads=threads)
        pool.extend(s.uhat for s in snaps)
        origins.extend((s.z, tuple(mu)) for s in snaps)
        basis = pod(np.column_stack(pool), tol_pod, provenance=origins)
        red = galerkin_project(model, basis)
        deltas = estimator_sweep(red, ctx, points, threads=threads)
        pick = int(np.argmax(deltas))
        delta_max = float(deltas[pick])
        log.rows.append(GreedyRow(iteration, mu.copy(), delta_max,
                                  basis.n_reduced, len(pool),
                                  time.perf_counter() - t_start))
        if delta_max <= tol:
            log.converged = True
            log.reason = "tol"
            return basis, red, log
        if delta_max > plateau_factor * best_delta:
            stagnation += 1
            if stagnation >= plateau_patience:
                log.reason = "plateau"
                return basis, red, log
        else:
            stagnation = 0
        best_delta = min(best_delta, delta_max)
        mu = points[pick]
    raise GreedyStallError(
        f"greedy did not meet tol={tol} within {max_iter} iterations",
        log=log, basis=(basis, red),
    )


@dataclass
class LocalBases:
    """Per-node reduced spaces (generally of different sizes)."""

    bases: list
    reduced: list
    logs: list

    @property
    def n_nodes(self):
        return len(self.bases)

    @property
    def sizes(self):
        return np.array([b.n_reduced for b in self.bases])

    @property
    def snapshots_total(self):
        return int(sum(log.snapshots_total for log in self.logs))

    def truncate(self, k):
        bases = [b.truncate(k) for b in self.bases]
        reduced = [r.truncate(k) for r in self.reduced]
        return LocalBases(bases=bases, reduced=reduced, logs=self.logs)


def greedy_local(model, grid, ctx, training, tol, j, mu_start=None,
                 max_iter=100, plateau_patience=3, plateau_factor=0.7):
    """Greedy space for a single quadrature node with tolerance ``tol/(n-1)``.

    Snapshots are orthonormalized directly (no compression); the per-node
    estimator uses the window endpoint rule for its exponential factor.
    """
    points = _as_points(training)
    tol_j = tol / grid.n_nodes
    mu = as_parameter(mu_start if mu_start is not None else points[0],
                      model.n_params)
    log = GreedyLog()
    pool = []
    origins = []
    best_delta = np.inf
    stagnation = 0
    t_start = time.perf_counter()
    for iteration in range(1, max_iter + 1):
        snap = solve_transform(model, grid.z[j], mu)
        pool.append(snap.uhat)
        origins.append((snap.z, tuple(mu)))
        basis = orthonormalize(np.column_stack(pool), provenance=origins)
        red = galerkin_project(model, basis)
        deltas = np.array([error_estimator_node(red, ctx, j, p) for p in points])
        pick = int(np.argmax(deltas))
        delta_max = float(deltas[pick])
        log.rows.append(GreedyRow(iteration, mu.copy(), delta_max,
                                  basis.n_reduced, len(pool),
                                  time.perf_counter() - t_start))
        if delta_max <= tol_j:
            log.converged = True
            log.reason = "tol"
            return basis, red, log
        if delta_max > plateau_factor * best_delta:
            stagnation += 1
            if stagnation >= plateau_patience:
                log.reason = "plateau"
                return basis, red, log
        else:
            stagnation = 0
        best_delta = min(best_delta, delta_max)
        mu = points[pick]
    raise GreedyStallError(
        f"node-{j} greedy did not meet tol_j={tol_j} within {max_iter} iterations",
        log=log,
    )


def _conjugate_basis(basis):
    provenance = tuple((np.conj(z), mu) for z, mu in basis.provenance)
    return ReducedBasis(basis.columns.conj(), provenance, basis.singular_values)


def _conjugate_reduced(red):
    return ReducedModel(
        op_terms=red.op_terms.conj(),
        rhs_terms=red.rhs_terms.conj(),
        reduced_identity=red.reduced_identity.conj(),
        gram=red.gram.conj(),
        operator=red.operator,
        rhs=red.rhs,
        dim_full=red.dim_full,
    )


def model_conjugate_symmetric(model, mu_probe, z_probe=0.7 + 0.9j):
    """Whether transform data mirrors under conjugation of the point.

    True when the operator terms and source vectors are real and every scalar
    factor satisfies ``phi(conj z) = conj(phi(z))`` (spot-checked).
    """
    if not all(np.isrealobj(term.matrix.data) for term in model.operator.terms):
        return False
    rhs = model.laplace_rhs
    if not all(np.isrealobj(np.asarray(term.vector)) for term in rhs.terms):
        return False
    if rhs.terms:
        fwd = rhs.coefficients(z_probe, mu_probe)
        bwd = rhs.coefficients(np.conj(z_probe), mu_probe)
        if not np.allclose(bwd, fwd.conj(), rtol=1e-12, atol=1e-300):
            return False
    return True


def greedy_local_all(model, grid, ctx, training, tol, mu_start=None,
                     max_iter=100, threads=1, mirror=None, **kwargs):
    """Per-node greedy loops, parallel over nodes.

    For conjugate-symmetric data the loop at a node and at its conjugate
    partner are exact mirrors, so by default only one of each pair is run and
    the partner's space is obtained by conjugation; this keeps the pairing
    exact (and halves the work).
    """
    from .contour import conjugate_node_plan

    points = _as_points(training)
    if mirror is None:
        mirror = model_conjugate_symmetric(model, points[0])
    compute, mirrored = conjugate_node_plan(grid, mirror=mirror)

    def one(j):
        return greedy_local(model, grid, ctx, training, tol, j,
                            mu_start=mu_start, max_iter=max_iter, **kwargs)

    results = dict(zip(compute, parallel_map(one, compute, threads=threads)))
    bases, reduced, logs = [], [], []
    for j in range(grid.n_nodes):
        if j in results:
            b, r, lg = results[j]
        else:
            b0, r0, lg = results[mirrored[j]]
            b, r = _conjugate_basis(b0), _conjugate_reduced(r0)
        bases.append(b)
        reduced.append(r)
        logs.append(lg)
    return LocalBases(bases=bases, reduced=reduced, logs=logs)


def online_solution_local(local, grid, mu, times, require_real=True,
                          imag_tol=IMAG_RESIDUE_TOL):
    """Online stage with per-node bases: node solves in the node's own space."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    lifted = np.empty((local.bases[0].n_full, grid.n_nodes), dtype=complex)
    for j in range(grid.n_nodes):
        beta = solve_nodes(local.reduced[j], grid, mu, node_indices=[j])[0]
        lifted[:, j] = local.bases[j].columns @ beta
    out = np.empty((lifted.shape[0], times.size),
                   dtype=float if require_real else complex)
    for k, t in enumerate(times):
        u = contour_sum(grid, lifted.T, t)
        if require_real:
            re_norm = np.linalg.norm(u.real)
            im_norm = np.linalg.norm(u.imag)
            if im_norm > imag_tol * max(re_norm, 1e-300):
                raise SymmetryViolationError(
                    f"imaginary residue {im_norm:.3e} exceeds tolerance"
                )
            out[:, k] = u.real
        else:
            out[:, k] = u
    return out


def error_estimator_local(local, ctx, mu):
    """Sum of the per-node contributions; equals the pooled estimator when
    all nodes share one basis."""
    total = 0.0
    for j in range(ctx.grid.n_nodes):
        total += error_estimator_node(local.reduced[j], ctx, j, mu)
    return float(total)


# --------------------------------------------------------------------------
# classical time-stepping baseline
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassicalReducedModel:
    """Real trajectory-compressed basis with projected stepping pieces."""

    basis: np.ndarray            # (N_h, k), real orthonormal
    op_terms: np.ndarray         # (Q, k, k)
    u0_terms: np.ndarray         # (n_init, k)
    src_terms: np.ndarray        # (K, k)
    model: object

    @property
    def n_reduced(self):
        return self.basis.shape[1]

    def truncate(self, k):
        k = min(int(k), self.n_reduced)
        return ClassicalReducedModel(
            basis=self.basis[:, :k],
            op_terms=self.op_terms[:, :k, :k],
            u0_terms=self.u0_terms[:, :k],
            src_terms=self.src_terms[:, :k],
            model=self.model,
        )

    def reduced_operator(self, mu):
        theta = self.model.operator.coefficients(mu)
        return np.tensordot(theta, self.op_terms, axes=(0, 0))

    def reduced_initial(self, mu):
        coeffs = np.array([float(t.coeff(mu)) for t in self.model.initial_terms])
        return coeffs @ self.u0_terms

    def reduced_source(self, t, mu):
        terms = self.model.source.terms
        if not terms:
            return np.zeros(self.n_reduced)
        coeffs = np.array([
            float(term.mu_coeff(mu)) * float(term.time_profile(t, mu))
            for term in terms
        ])
        return coeffs @ self.src_terms

    def source_table(self, ts, mu):
        """Reduced source vectors for a whole step schedule (vectorized)."""
        terms = self.model.source.terms
        ts = np.asarray(ts, dtype=float)
        if not terms:
            return np.zeros((ts.size, self.n_reduced))
        coeffs = np.column_stack([
            float(term.mu_coeff(mu)) * np.broadcast_to(
                np.asarray(term.time_profile(ts, mu), dtype=float), ts.shape)
            for term in terms
        ])
        return coeffs @ self.src_terms


def classical_project(model, basis_real):
    """Project the stepping pieces onto a real basis once, offline."""
    v = np.asarray(basis_real, dtype=float)
    op_terms = np.stack([v.T @ (term.matrix @ v) for term in model.operator.terms])
    u0_terms = np.stack([v.T @ term.vector for term in model.initial_terms])
    if model.source.terms:
        src_terms = np.stack([v.T @ np.real(term.vector)
                              for term in model.source.terms])
    else:
        src_terms = np.zeros((0, v.shape[1]))
    return ClassicalReducedModel(basis=v, op_terms=op_terms, u0_terms=u0_terms,
                                 src_terms=src_terms, model=model)


def classical_step_online(red, mu, stepper, dt, t_end, times=None, lift_result=True):
    """Reduced implicit stepping with one dense factorization reused throughout."""
    mu = as_parameter(mu, red.model.n_params)
    k = red.n_reduced
    a_r = red.reduced_operator(mu)
    eye = np.eye(k)
    if stepper == "crank-nicolson":
        lhs = eye - 0.5 * dt * a_r
        rhs_mat = eye + 0.5 * dt * a_r
    elif stepper == "backward-euler":
        lhs = eye - dt * a_r
        rhs_mat = None
    elif stepper == "forward-euler":
        lhs = None
        rhs_mat = eye + dt * a_r
    else:
        raise ValueError(f"unknown stepper {stepper!r}")
    lu_piv = scipy.linalg.lu_factor(lhs) if lhs is not None else None
    n_steps = int(round(t_end / dt))
    has_source = red.src_terms.shape[0] > 0
    wanted = {}
    if times is not None:
        for t in np.atleast_1d(times):
            wanted[int(round(t / dt))] = float(t)
    state = red.reduced_initial(mu)
    collected = {}
    if 0 in wanted:
        collected[0] = state.copy()
    if has_source:
        offsets = {"crank-nicolson": 0.5 * dt, "backward-euler": dt,
                   "forward-euler": 0.0}[stepper]
        src = dt * red.source_table(dt * np.arange(n_steps) + offsets, mu)
    for step in range(1, n_steps + 1):
        rhs = rhs_mat @ state if rhs_mat is not None else state
        if has_source:
            rhs = rhs + src[step - 1]
        state = scipy.linalg.lu_solve(lu_piv, rhs) if lu_piv is not None else rhs
        if step in wanted:
            collected[step] = state.copy()
    if times is None:
        result = state[:, None]
    else:
        result = np.column_stack([collected[int(round(t / dt))]
                                  for t in np.atleast_1d(times)])
    if lift_result:
        return red.basis @ result
    return result


def classical_pod_basis(model, train_points, stepper, dt, t_end, tol_pod,
                        max_modes=None):
    """Real basis from the compression of full trajectories at training parameters."""
    from .models import step_reference

    blocks = []
    for mu in np.atleast_2d(train_points):
        traj = step_reference(model, mu, stepper, dt, t_end)
        blocks.append(traj.states)
    snapshots = np.hstack(blocks)
    u, svals, _ = np.linalg.svd(snapshots, full_matrices=False)
    if svals[0] == 0.0:
        raise DegenerateSnapshotError("trajectory snapshots are identically zero")
    keep = max(1, int(np.sum(svals > tol_pod * svals[0])))
    if max_modes is not None:
        keep = min(keep, int(max_modes))
    return np.real(u[:, :keep]), snapshots


def classical_greedy_basis(model, train_points, stepper, dt, t_end, times,
                           tol, tol_pod, max_iter=30):
    """Trajectory greedy: enrich with the worst-approximated training trajectory.

    Selection uses the true relative error of the stepped reduced model
    against the precomputed trajectories (the direct measure; cheap at
    training scale and free of estimator assumptions).
    """
    from .models import step_reference

    points = np.atleast_2d(train_points)
    trajs = [step_reference(model, mu, stepper, dt, t_end) for mu in points]
    refs = [np.column_stack([traj.near(t) for t in times]) for traj in trajs]
    pool = trajs[0].states
    order = [0]
    errors_log = []
    for _ in range(max_iter):
        u, svals, _ = np.linalg.svd(pool, full_matrices=False)
        keep = max(1, int(np.sum(svals > tol_pod * svals[0])))
        v = np.real(u[:, :keep])
        red = classical_project(model, v)
        errs = []
        for mu, ref in zip(points, refs):
            approx = classical_step_online(red, mu, stepper, dt, t_end, times)
            num = np.linalg.norm(approx - ref, axis=0)
            den = np.maximum(np.linalg.norm(ref, axis=0), 1e-300)
            errs.append(float(np.max(num / den)))
        worst = int(np.argmax(errs))
        errors_log.append((order[-1], errs[order[-1]], max(errs), keep))
        if max(errs) <= tol or worst in order:
            return v, pool.shape[1], errors_log
        order.append(worst)
        pool = np.hstack([pool, trajs[worst].states])
    return v, pool.shape[1], errors_log


# --------------------------------------------------------------------------
# estimator-style facade
# --------------------------------------------------------------------------

class ContourROM(BaseEstimator):
    """Scikit-learn style wrapper around the offline/online pipeline.

    ``fit(X)`` takes training parameters (one row per parameter vector),
    builds the quadrature grid, the estimator context and the reduced space;
    ``predict(X)`` takes rows ``[mu_1, ..., mu_p, t]`` and returns full-size
    states reconstructed through the reduced model.
    """

    def __init__(self, model=None, window=(1.0, 10.0), strategy="pod-greedy",
                 tol=1e-4, tol_pod=1e-8, quad_tol=1e-8, sigma_source="exact",
                 box=None, a1=-1.0, a2=None, c=None, n_nodes=None,
                 mu_start=None, max_iter=100, threads=1):
        self.model = model
        self.window = window
        self.strategy = strategy
        self.tol = tol
        self.tol_pod = tol_pod
        self.quad_tol = quad_tol
        self.sigma_source = sigma_source
        self.box = box
        self.a1 = a1
        self.a2 = a2
        self.c = c
        self.n_nodes = n_nodes
        self.mu_start = mu_start
        self.max_iter = max_iter
        self.threads = threads

    def _box(self, points):
        if self.box is not None:
            return self.box
        return ParameterBox(points.min(axis=0), points.max(axis=0))

    def fit(self, X, y=None):
        if self.model is None:
            raise ValueError("a full-order model is required")
        points = check_array(X, dtype=float, ensure_2d=True)
        if points.shape[1] != self.model.n_params:
            raise ValueError(
                f"training rows have {points.shape[1]} entries, model expects "
                f"{self.model.n_params}"
            )
        window = TimeWindow(*self.window)
        box = self._box(points)
        grid = design_grid(self.model, box, window.t0, self.quad_tol,
                           a1=self.a1, a2=self.a2, c=self.c, n=self.n_nodes)
        if self.sigma_source == "exact":
            lbs = sigma_mod.lower_bounds_grid(self.model.operator, grid, points,
                                              threads=self.threads)
        elif self.sigma_source == "optimize":
            lbs = sigma_mod.lower_bounds_optimize(self.model.operator, grid, box,
                                                  threads=self.threads)
        else:
            raise ValueError(f"unknown sigma_source {self.sigma_source!r}")
        ctx = EstimatorContext(grid, window, lbs)
        self.window_ = window
        self.grid_ = grid
        self.ctx_ = ctx
        self.local_ = None
        if self.strategy == "pod-greedy":
            basis, red, log = greedy_pod(
                self.model, grid, ctx, points, self.tol, self.tol_pod,
                mu_start=self.mu_start, max_iter=self.max_iter,
                threads=self.threads,
            )
            self.basis_, self.reduced_, self.log_ = basis, red, log
        elif self.strategy == "local-greedy":
            local = greedy_local_all(
                self.model, grid, ctx, points, self.tol,
                mu_start=self.mu_start, max_iter=self.max_iter,
                threads=self.threads,
            )
            self.local_ = local
            self.basis_ = None
            self.reduced_ = None
            self.log_ = local.logs
        elif self.strategy == "plain-pod":
            pool, origins = [], []
            for mu in points:
                for snap in solve_grid(self.model, grid, mu, threads=self.threads):
                    pool.append(snap.uhat)
                    origins.append((snap.z, tuple(mu)))
            basis = pod(np.column_stack(pool), self.tol_pod, provenance=origins)
            self.basis_ = basis
            self.reduced_ = galerkin_project(self.model, basis)
            self.log_ = GreedyLog(converged=True, reason="plain-pod")
        else:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        self.n_reduced_ = (max(self.local_.sizes) if self.local_ is not None
                           else self.basis_.n_reduced)
        return self

    def predict(self, X):
        check_is_fitted(self, "grid_")
        rows = check_array(X, dtype=float, ensure_2d=True)
        p = self.model.n_params
        if rows.shape[1] != p + 1:
            raise ValueError(f"predict rows must be [mu_1..mu_{p}, t]")
        out = np.empty((rows.shape[0], self.model.dim))
        for i, row in enumerate(rows):
            mu, t = row[:p], row[p]
            if not self.window_.contains(t):
                raise ValueError(f"t={t} outside the fitted window")
            if self.local_ is not None:
                out[i] = online_solution_local(self.local_, self.grid_, mu, [t])[:, 0]
            else:
                out[i] = online_solve(self.reduced_, self.basis_, self.grid_, mu, t)
        return out

    def error_estimate(self, X):
        check_is_fitted(self, "grid_")
        rows = check_array(X, dtype=float, ensure_2d=True)
        vals = np.empty(rows.shape[0])
        for i, mu in enumerate(rows):
            if self.local_ is not None:
                vals[i] = error_estimator_local(self.local_, self.ctx_, mu)
            else:
                vals[i] = error_estimator(self.reduced_, self.ctx_, mu)
        return vals
