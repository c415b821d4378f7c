"""Affine-decomposed parametric operators, sources and parameter domains.

A parametric matrix is kept as ``A(mu) = sum_q theta_q(mu) * A_q`` with
parameter-independent sparse terms, and a transformed right-hand side as
``g(z; mu) = sum_k theta_k(mu) * phi_k(z, mu) * g_k`` with fixed vectors.
Keeping every mu- and z-dependence inside scalar coefficients is what makes
the reduced online stage independent of the full dimension: projections of
the fixed pieces can be precomputed once.

The scalar ``phi_k`` may depend on the parameter as well as on ``z`` (e.g.
``1/(z + r)`` with a rate parameter ``r``); the cost argument still holds
because the vectors stay fixed.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from ._validation import as_parameter, as_parameter_matrix
from .errors import CapabilityError, ParameterShapeError, PoleProximityError

POLE_PROXIMITY = 1e-12


@dataclass(frozen=True)
class ParameterBox:
    """Axis-aligned box of admissible parameters."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1 or lower.size < 1:
            raise ParameterShapeError("box bounds must be matching vectors")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ParameterShapeError("box bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n_params(self):
        return self.lower.size

    def contains(self, mu, rtol=1e-12):
        mu = as_parameter(mu, self.n_params)
        slack = rtol * np.maximum(1.0, np.abs(self.upper) + np.abs(self.lower))
        return bool(np.all(mu >= self.lower - slack) and np.all(mu <= self.upper + slack))

    def clip(self, mu):
        return np.clip(as_parameter(mu, self.n_params), self.lower, self.upper)

    def center(self):
        return 0.5 * (self.lower + self.upper)

    def corners(self):
        """All distinct box vertices (degenerate axes collapse duplicates)."""
        axes = [np.unique([lo, hi]) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        return pts

    def lattice(self, dims):
        """Uniform tensor lattice with ``dims[i]`` points per axis (endpoints included)."""
        dims = [int(d) for d in np.atleast_1d(dims)]
        if len(dims) != self.n_params or any(d < 1 for d in dims):
            raise ValueError("lattice dims must give one positive count per axis")
        axes = []
        for lo, hi, d in zip(self.lower, self.upper, dims):
            axes.append(np.array([0.5 * (lo + hi)]) if d == 1 else np.linspace(lo, hi, d))
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        label = "x".join(str(d) for d in dims)
        return ParameterGrid(pts, f"uniform-lattice({label})", self)

    def random(self, count, seed):
        rng = np.random.default_rng(seed)
        pts = self.lower + (self.upper - self.lower) * rng.random((int(count), self.n_params))
        return ParameterGrid(pts, f"uniform-random(seed={seed},n={count})", self)


@dataclass(frozen=True)
class ParameterGrid:
    """Finite training/test set of parameters inside a box."""

    points: np.ndarray
    provenance: str
    box: Optional[ParameterBox] = None

    def __post_init__(self):
        pts = as_parameter_matrix(self.points)
        if pts.shape[0] == 0:
            raise ValueError("parameter grid must be nonempty")
        if self.box is not None:
            for row in pts:
                if not self.box.contains(row):
                    raise ValueError(f"grid point {row} lies outside the parameter box")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @property
    def n_params(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class OperatorTerm:
    """One affine term: scalar coefficient function times a fixed sparse matrix."""

    coeff: Callable[[np.ndarray], float]
    matrix: sp.spmatrix
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class AffineOperator:
    """Parametric matrix ``A(mu) = sum_q theta_q(mu) A_q``."""

    terms: Sequence[OperatorTerm]
    n_params: int

    def __post_init__(self):
        if len(self.terms) < 1:
            raise ValueError("affine operator needs at least one term")
        dims = {t.matrix.shape for t in self.terms}
        if len(dims) != 1 or any(a != b for a, b in dims):
            raise ValueError(f"term matrices must be square and share a dimension, got {dims}")
        object.__setattr__(self, "terms", tuple(
            OperatorTerm(t.coeff, sp.csr_matrix(t.matrix), t.grad) for t in self.terms
        ))

    @property
    def dim(self):
        return self.terms[0].matrix.shape[0]

    @property
    def n_terms(self):
        return len(self.terms)

    @property
    def has_gradients(self):
        return all(t.grad is not None for t in self.terms)

    def coefficients(self, mu):
        mu = as_parameter(mu, self.n_params)
        return np.array([float(t.coeff(mu)) for t in self.terms])

    def coefficient_gradients(self, mu):
        """Coefficient gradient matrix of shape (n_terms, n_params)."""
        mu = as_parameter(mu, self.n_params)
        if not self.has_gradients:
            raise CapabilityError("operator terms carry no coefficient gradients")
        rows = [as_parameter(t.grad(mu), self.n_params) for t in self.terms]
        return np.vstack(rows)

    def assemble(self, mu):
        """Return ``sum_q theta_q(mu) A_q`` as a CSR matrix (all terms, no dropping)."""
        coeffs = self.coefficients(mu)
        acc = coeffs[0] * self.terms[0].matrix
        for c, term in zip(coeffs[1:], self.terms[1:]):
            acc = acc + c * term.matrix
        return sp.csr_matrix(acc)

    def derivative(self, mu, i):
        """Partial derivative of ``assemble`` with respect to parameter ``i`` (0-based)."""
        if not (0 <= i < self.n_params):
            raise IndexError(f"parameter index {i} out of range for p={self.n_params}")
        grads = self.coefficient_gradients(mu)
        acc = grads[0, i] * self.terms[0].matrix
        for q in range(1, self.n_terms):
            acc = acc + grads[q, i] * self.terms[q].matrix
        return sp.csr_matrix(acc)


@dataclass(frozen=True)
class SourceTerm:
    """One separated right-hand-side term ``theta(mu) * phi(z, mu) * vector``.

    ``time_profile(t, mu)`` is the inverse transform of ``phi`` and is only
    needed by the reference time steppers.
    """

    mu_coeff: Callable[[np.ndarray], float]
    z_coeff: Callable[[complex, np.ndarray], complex]
    vector: np.ndarray
    time_profile: Optional[Callable[[float, np.ndarray], float]] = None


@dataclass(frozen=True)
class AffineSource:
    """Parametric transformed source ``g(z; mu) = sum_k theta_k phi_k g_k``.

    ``poles`` lists the mu-dependent singularities of the scalar factors so
    that contour construction can keep them on the left of the profile.
    """

    terms: Sequence[SourceTerm]
    n_params: int
    dim: int
    poles: Sequence[Callable[[np.ndarray], complex]] = field(default_factory=tuple)

    def __post_init__(self):
        vecs = []
        for t in self.terms:
            v = np.asarray(t.vector)
            if v.ndim != 1 or v.size != self.dim:
                raise ValueError("source vectors must share the operator dimension")
            vecs.append(SourceTerm(t.mu_coeff, t.z_coeff, v, t.time_profile))
        object.__setattr__(self, "terms", tuple(vecs))
        object.__setattr__(self, "poles", tuple(self.poles))

    @property
    def n_terms(self):
        return len(self.terms)

    def check_pole_distance(self, z, mu):
        mu = as_parameter(mu, self.n_params)
        for pole in self.poles:
            if abs(complex(z) - complex(pole(mu))) <= POLE_PROXIMITY:
                raise PoleProximityError(
                    f"z={z} is within {POLE_PROXIMITY} of a source pole at {pole(mu)}"
                )

    def coefficients(self, z, mu):
        """Scalar factors ``theta_k(mu) * phi_k(z, mu)`` as a complex vector."""
        mu = as_parameter(mu, self.n_params)
        self.check_pole_distance(z, mu)
        return np.array(
            [complex(t.mu_coeff(mu)) * complex(t.z_coeff(complex(z), mu)) for t in self.terms]
        )

    def assemble(self, z, mu):
        """Return ``sum_k theta_k(mu) phi_k(z, mu) g_k`` as a complex vector."""
        out = np.zeros(self.dim, dtype=complex)
        if not self.terms:
            as_parameter(mu, self.n_params)
            return out
        for c, term in zip(self.coefficients(z, mu), self.terms):
            out += c * term.vector
        return out

    def time_value(self, t, mu):
        """Time-domain source value for the reference steppers."""
        mu = as_parameter(mu, self.n_params)
        out = np.zeros(self.dim)
        for term in self.terms:
            if term.time_profile is None:
                raise CapabilityError("source term lacks a time-domain profile")
            out += float(term.mu_coeff(mu)) * float(term.time_profile(t, mu)) * np.real(term.vector)
        return out


# Spec-facing functional aliases; the methods above are the primary surface.
def assemble_operator(op, mu):
    return op.assemble(mu)


def assemble_source(src, z, mu):
    return src.assemble(z, mu)


def operator_derivative(op, mu, i):
    return op.derivative(mu, i)
