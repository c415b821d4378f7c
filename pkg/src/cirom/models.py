"""Full-order test discretizations and reference time steppers.

Three benchmark families:

* a European call under one-factor lognormal dynamics, centered finite
  differences on a uniform price grid with the far-field boundary value
  folded into the affine source;
* a two-factor stochastic-volatility call (price x variance rectangle,
  centered differences plus a tensor cross-derivative stencil, degenerate
  lower variance boundary handled with a one-sided first difference);
* first-order upwind transport of a step profile with homogeneous inflow.

All models expose the operator as an affine decomposition with coefficient
gradients, the transformed source in separated form, and an affine initial
value, so the same offline/online machinery applies to each.
"""

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._validation import as_parameter, as_parameter_matrix, check_positive
from .affine import AffineOperator, AffineSource, OperatorTerm, SourceTerm
from .errors import SingularStepError


def _gershgorin_upper(sym):
    """Upper bound on the largest eigenvalue of a symmetric sparse matrix."""
    diag = sym.diagonal()
    radii = np.abs(sym).sum(axis=1).A1 - np.abs(diag)
    return float(np.max(diag + radii))


@dataclass(frozen=True)
class MeshInfo:
    """Grid metadata: per-axis bounds, spacing, unknown counts and node coordinates."""

    bounds: tuple
    spacing: tuple
    shape: tuple
    axes: tuple


@dataclass(frozen=True)
class InitialTerm:
    coeff: Callable[[np.ndarray], float]
    vector: np.ndarray


@dataclass(frozen=True)
class DiscretizedModel:
    """A full-order problem instance ``u' = A(mu) u + b(t; mu), u(0) = u0(mu)``."""

    name: str
    operator: AffineOperator
    source: AffineSource
    initial_terms: Sequence[InitialTerm]
    mesh: MeshInfo
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.source.dim != self.operator.dim:
            raise ValueError("operator and source dimensions disagree")
        for term in self.initial_terms:
            if np.asarray(term.vector).size != self.operator.dim:
                raise ValueError("initial value dimension disagrees with operator")

    @property
    def dim(self):
        return self.operator.dim

    @property
    def n_params(self):
        return self.operator.n_params

    def initial_value(self, mu):
        mu = as_parameter(mu, self.n_params)
        out = np.zeros(self.dim)
        for term in self.initial_terms:
            out += float(term.coeff(mu)) * term.vector
        return out

    @cached_property
    def laplace_rhs(self):
        """Combined transformed right-hand side ``u0(mu) + g(z; mu)``.

        The initial value enters with a z-independent scalar factor, so the
        union is again a separated source usable by the offline machinery.
        """
        terms = [
            SourceTerm(term.coeff, lambda z, mu: 1.0 + 0.0j, term.vector,
                       time_profile=None)
            for term in self.initial_terms
        ]
        terms.extend(self.source.terms)
        return AffineSource(terms, self.n_params, self.dim, self.source.poles)

    def time_source(self, t, mu):
        if not self.source.terms:
            return np.zeros(self.dim)
        return self.source.time_value(t, mu)

    def spectral_bound(self, probes):
        """Largest numerical abscissa ``lambda_max((A + A^T)/2)`` over probe parameters."""
        probes = as_parameter_matrix(probes, self.n_params)
        worst = -np.inf
        for mu in probes:
            a = self.operator.assemble(mu)
            sym = 0.5 * (a + a.T)
            n = sym.shape[0]
            if n <= 400:
                vals = np.linalg.eigvalsh(sym.toarray())
                worst = max(worst, float(vals[-1]))
            else:
                # Gershgorin gives a certified upper bound; shift-invert just
                # above it converges where plain Lanczos stagnates on the wide
                # negative spectrum of parabolic operators
                sym = sym.tocsc()
                gersh = _gershgorin_upper(sym)
                try:
                    val = spla.eigsh(sym, k=1, sigma=gersh + 1.0, which="LA",
                                     return_eigenvectors=False)
                    worst = max(worst, float(val[0]))
                except Exception:
                    worst = max(worst, gersh)
        return worst


def black_scholes(n_h=1000, s_max=200.0, strike=100.0):
    """One-factor European call on a uniform price grid.

    ``n_h`` interior unknowns on ``[0, s_max]`` with spacing
    ``ds = s_max / (n_h + 1)``; homogeneous value at the origin is eliminated
    and the far-field value ``s_max - K * exp(-r * t)`` is folded into the
    separated source with scalar factors ``s_max / z`` and ``-K / (z + r)``.
    Parameters are ``mu = (volatility, rate)``.
    """
    if n_h < 3:
        raise ValueError("need at least 3 interior points")
    check_positive(s_max, "s_max")
    ds = s_max / (n_h + 1)
    s = np.arange(1, n_h + 1) * ds

    # diffusion: (1/2) s^2 d2/ds2, coefficient sigma^2
    half_s2 = 0.5 * s * s
    diff = sp.diags(
        [half_s2[1:] / ds**2, -2.0 * half_s2 / ds**2, half_s2[:-1] / ds**2],
        offsets=[-1, 0, 1], format="csr",
    )
    # convection/discount: s d/ds - I, coefficient r
    conv = sp.diags(
        [-s[1:] / (2.0 * ds), -np.ones(n_h), s[:-1] / (2.0 * ds)],
        offsets=[-1, 0, 1], format="csr",
    )
    operator = AffineOperator(
        terms=[
            OperatorTerm(lambda mu: mu[0] ** 2, diff,
                         grad=lambda mu: np.array([2.0 * mu[0], 0.0])),
            OperatorTerm(lambda mu: mu[1], conv,
                         grad=lambda mu: np.array([0.0, 1.0])),
        ],
        n_params=2,
    )

    # last interior row couples to the far boundary through both terms
    e_last = np.zeros(n_h)
    e_last[-1] = 1.0
    v_diff = (half_s2[-1] / ds**2) * e_last
    v_conv = (s[-1] / (2.0 * ds)) * e_last
    source = AffineSource(
        terms=[
            SourceTerm(lambda mu: mu[0] ** 2, lambda z, mu: s_max / z, v_diff,
                       time_profile=lambda t, mu: s_max),
            SourceTerm(lambda mu: mu[0] ** 2, lambda z, mu: -strike / (z + mu[1]), v_diff,
                       time_profile=lambda t, mu: -strike * np.exp(-mu[1] * t)),
            SourceTerm(lambda mu: mu[1], lambda z, mu: s_max / z, v_conv,
                       time_profile=lambda t, mu: s_max),
            SourceTerm(lambda mu: mu[1], lambda z, mu: -strike / (z + mu[1]), v_conv,
                       time_profile=lambda t, mu: -strike * np.exp(-mu[1] * t)),
        ],
        n_params=2,
        dim=n_h,
        poles=[lambda mu: 0.0 + 0.0j, lambda mu: -mu[1] + 0.0j],
    )

    payoff = np.maximum(0.0, s - strike)
    mesh = MeshInfo(bounds=((0.0, s_max),), spacing=(ds,), shape=(n_h,), axes=(s,))
    return DiscretizedModel(
        name="black-scholes",
        operator=operator,
        source=source,
        initial_terms=[InitialTerm(lambda mu: 1.0, payoff)],
        mesh=mesh,
        notes={"strike": strike, "s_max": s_max},
    )


def _heston_blocks(n_s, n_v, s_max, v_max):
    """1-D difference factors for the two-factor model, boundary rows adjusted."""
    ds = s_max / n_s
    dv = v_max / n_v
    s = np.arange(1, n_s + 1) * ds          # includes s = s_max (reflected row)
    v = np.arange(0, n_v) * dv              # includes v = 0, excludes v = v_max

    # second difference in s; last row uses the ghost reflection of the
    # known normal derivative: (2 u_{I-1} - 2 u_I) / ds^2 + source
    d2s = sp.lil_matrix((n_s, n_s))
    for i in range(n_s - 1):
        if i > 0:
            d2s[i, i - 1] = 1.0
        d2s[i, i] = -2.0
        d2s[i, i + 1] = 1.0
    d2s[n_s - 1, n_s - 2] = 2.0
    d2s[n_s - 1, n_s - 1] = -2.0
    d2s = d2s.tocsr() / ds**2

    # centered first difference in s; last row zeroed (derivative is boundary data)
    d1s = sp.lil_matrix((n_s, n_s))
    for i in range(n_s - 1):
        if i > 0:
            d1s[i, i - 1] = -1.0
        d1s[i, i + 1] = 1.0
    d1s = d1s.tocsr() / (2.0 * ds)

    # second difference in v on rows 1..n_v-1; row 0 never contributes (its
    # diffusion coefficient vanishes at v = 0); top neighbour folded later
    d2v = sp.lil_matrix((n_v, n_v))
    for j in range(1, n_v):
        d2v[j, j - 1] = 1.0
        d2v[j, j] = -2.0
        if j + 1 < n_v:
            d2v[j, j + 1] = 1.0
    d2v = d2v.tocsr() / dv**2

    # first difference in v: one-sided at the degenerate v = 0 row, centered
    # inside, top neighbour folded later
    d1v = sp.lil_matrix((n_v, n_v))
    d1v[0, 0] = -1.0 / dv
    d1v[0, 1] = 1.0 / dv
    for j in range(1, n_v):
        d1v[j, j - 1] = -1.0 / (2.0 * dv)
        if j + 1 < n_v:
            d1v[j, j + 1] = 1.0 / (2.0 * dv)
    d1v = d1v.tocsr()

    return ds, dv, s, v, d2s, d1s, d2v, d1v


def heston(n_s=50, n_v=25, strike=100.0, s_max=800.0, v_max=5.0,
           rate_foreign=0.0, feller_box=None):
    """Two-factor stochastic-volatility call on a uniform rectangle.

    Unknowns are price nodes ``i = 1..n_s`` (the far price boundary carries a
    known normal derivative and stays an unknown via ghost reflection) tensor
    variance nodes ``j = 0..n_v-1`` (the top variance boundary value is
    eliminated).  Parameters ``mu = (sigma, r_d, kappa, eta, rho)``; seven
    affine terms keep every coefficient gradient trivial.
    """
    if n_s < 3 or n_v < 3:
        raise ValueError("need at least 3 nodes per direction")
    rf = float(rate_foreign)
    ds, dv, s, v, d2s, d1s, d2v, d1v = _heston_blocks(n_s, n_v, s_max, v_max)
    n_h = n_s * n_v
    eye_s = sp.identity(n_s, format="csr")
    eye_v = sp.identity(n_v, format="csr")
    diag_s = sp.diags(s)
    diag_v = sp.diags(v)

    t1 = sp.kron(sp.diags(0.5 * s * s) @ d2s, diag_v, format="csr")
    t2 = sp.kron(diag_s @ d1s, diag_v @ d1v, format="csr")
    t3 = sp.kron(eye_s, sp.diags(0.5 * v) @ d2v, format="csr")
    t4 = sp.kron(diag_s @ d1s, eye_v, format="csr")
    t5 = sp.kron(eye_s, d1v, format="csr")
    t6 = sp.kron(eye_s, -diag_v @ d1v, format="csr")
    t7 = -sp.identity(n_h, format="csr")

    operator = AffineOperator(
        terms=[
            OperatorTerm(lambda mu: 1.0, t1, grad=lambda mu: np.zeros(5)),
            OperatorTerm(lambda mu: mu[4] * mu[0], t2,
                         grad=lambda mu: np.array([mu[4], 0.0, 0.0, 0.0, mu[0]])),
            OperatorTerm(lambda mu: mu[0] ** 2, t3,
                         grad=lambda mu: np.array([2.0 * mu[0], 0.0, 0.0, 0.0, 0.0])),
            OperatorTerm(lambda mu: mu[1] - rf, t4,
                         grad=lambda mu: np.array([0.0, 1.0, 0.0, 0.0, 0.0])),
            OperatorTerm(lambda mu: mu[2] * mu[3], t5,
                         grad=lambda mu: np.array([0.0, 0.0, mu[3], mu[2], 0.0])),
            OperatorTerm(lambda mu: mu[2], t6,
                         grad=lambda mu: np.array([0.0, 0.0, 1.0, 0.0, 0.0])),
            OperatorTerm(lambda mu: mu[1], t7,
                         grad=lambda mu: np.array([0.0, 1.0, 0.0, 0.0, 0.0])),
        ],
        n_params=5,
    )

    # boundary folds; all carry the discount profile exp(-rf * t) <-> 1/(z + rf)
    def flat(i_vals, j_vals):
        out = np.zeros((n_s, n_v))
        out[i_vals, j_vals] = 1.0
        return out.ravel()

    jtop = n_v - 1
    # top variance boundary u(s, v_max, t) = s * exp(-rf t): fold the
    # eliminated column of each v-difference factor
    fold_mixed = np.zeros((n_s, n_v))
    fold_mixed[:, jtop] = (diag_s @ d1s @ s) * (v[jtop] / (2.0 * dv))
    fold_d2v = np.zeros((n_s, n_v))
    fold_d2v[:, jtop] = s * (0.5 * v[jtop] / dv**2)
    fold_d1v = np.zeros((n_s, n_v))
    fold_d1v[:, jtop] = s / (2.0 * dv)
    fold_vd1v = np.zeros((n_s, n_v))
    fold_vd1v[:, jtop] = -s * (v[jtop] / (2.0 * dv))
    # far price boundary (ghost reflection constant + known convection slope)
    fold_ghost = np.zeros((n_s, n_v))
    fold_ghost[n_s - 1, :] = s[-1] ** 2 * v / ds
    fold_conv = np.zeros((n_s, n_v))
    fold_conv[n_s - 1, :] = s[-1]

    profile = lambda z, mu: 1.0 / (z + rf)
    tprofile = lambda t, mu: np.exp(-rf * t)
    source = AffineSource(
        terms=[
            SourceTerm(lambda mu: mu[4] * mu[0], profile, fold_mixed.ravel(), tprofile),
            SourceTerm(lambda mu: mu[0] ** 2, profile, fold_d2v.ravel(), tprofile),
            SourceTerm(lambda mu: mu[2] * mu[3], profile, fold_d1v.ravel(), tprofile),
            SourceTerm(lambda mu: mu[2], profile, fold_vd1v.ravel(), tprofile),
            SourceTerm(lambda mu: 1.0, profile, fold_ghost.ravel(), tprofile),
            SourceTerm(lambda mu: mu[1] - rf, profile, fold_conv.ravel(), tprofile),
        ],
        n_params=5,
        dim=n_h,
        poles=[lambda mu: -rf + 0.0j],
    )

    if feller_box is not None:
        lo, hi = feller_box.lower, feller_box.upper
        if 2.0 * lo[2] * lo[3] <= hi[0] ** 2:
            warnings.warn(
                "variance process may touch zero inside the box "
                "(2*kappa*eta <= sigma^2 at some corner)",
                stacklevel=2,
            )

    payoff = np.repeat(np.maximum(0.0, s - strike), n_v)
    mesh = MeshInfo(
        bounds=((0.0, s_max), (0.0, v_max)),
        spacing=(ds, dv),
        shape=(n_s, n_v),
        axes=(s, v),
    )
    return DiscretizedModel(
        name="heston",
        operator=operator,
        source=source,
        initial_terms=[InitialTerm(lambda mu: 1.0, payoff)],
        mesh=mesh,
        notes={"strike": strike, "s_max": s_max, "v_max": v_max, "rate_foreign": rf},
    )


def advection(n_h=1000):
    """First-order upwind transport on ``[0, 1]`` with homogeneous inflow.

    ``u' = -mu * U u`` with the forward-difference bidiagonal ``U``; the
    initial value is a unit step placed at 0.2 and the source vanishes.  The
    stated outflow value at the right end cannot influence upwind interior
    nodes and is therefore not discretized.
    """
    if n_h < 2:
        raise ValueError("need at least 2 points")
    dx = 1.0 / n_h
    upwind = sp.diags([np.full(n_h, 1.0 / dx), np.full(n_h - 1, -1.0 / dx)],
                      offsets=[0, -1], format="csr")
    operator = AffineOperator(
        terms=[OperatorTerm(lambda mu: mu[0], -upwind,
                            grad=lambda mu: np.array([1.0]))],
        n_params=1,
    )
    source = AffineSource(terms=[], n_params=1, dim=n_h, poles=[])
    idx = np.arange(1, n_h + 1)
    step0 = np.where(idx >= 0.2 * n_h - 1e-9, 1.0, 0.0)
    x = idx * dx
    mesh = MeshInfo(bounds=((0.0, 1.0),), spacing=(dx,), shape=(n_h,), axes=(x,))
    return DiscretizedModel(
        name="advection",
        operator=operator,
        source=source,
        initial_terms=[InitialTerm(lambda mu: 1.0, step0)],
        mesh=mesh,
    )


def from_matrices(matrices, coeffs=None, grads=None, u0=None, source_terms=None,
                  poles=(), n_params=1, name="custom"):
    """Wrap explicit matrices/vectors as a model; convenient for small tests."""
    mats = [sp.csr_matrix(np.atleast_2d(np.asarray(m, dtype=float))) for m in matrices]
    if coeffs is None:
        coeffs = [lambda mu: 1.0] * len(mats)
        grads = [lambda mu, _p=n_params: np.zeros(_p)] * len(mats)
    terms = []
    for k, mat in enumerate(mats):
        terms.append(OperatorTerm(coeffs[k], mat, grads[k] if grads else None))
    operator = AffineOperator(terms, n_params=n_params)
    dim = operator.dim
    src = AffineSource(source_terms or [], n_params=n_params, dim=dim, poles=list(poles))
    if u0 is None:
        u0 = np.ones(dim)
    mesh = MeshInfo(bounds=((0.0, 1.0),), spacing=(1.0,), shape=(dim,),
                    axes=(np.arange(dim, dtype=float),))
    return DiscretizedModel(
        name=name,
        operator=operator,
        source=src,
        initial_terms=[InitialTerm(lambda mu: 1.0, np.asarray(u0, dtype=float))],
        mesh=mesh,
    )


@dataclass(frozen=True)
class Trajectory:
    """Dense output of a reference stepper, including the initial state."""

    times: np.ndarray
    states: np.ndarray
    stepper: str
    dt: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must increase strictly from 0")

    def at(self, t):
        """State at time ``t`` (must be on the step grid up to round-off)."""
        k = int(round(t / self.dt))
        if not (0 <= k < self.times.size and abs(self.times[k] - t) <= 1e-9 * max(1.0, t)):
            raise ValueError(f"t={t} is not on the trajectory grid")
        return self.states[:, k]

    def near(self, t):
        """State at the step closest to ``t``."""
        k = min(max(int(round(t / self.dt)), 0), self.times.size - 1)
        return self.states[:, k]


def step_reference(model, mu, stepper, dt, t_end):
    """Reference integration with one factorization reused across steps.

    ``stepper`` is ``"crank-nicolson"`` (implicit, source at step midpoints),
    ``"backward-euler"`` (implicit, source at step endpoints) or
    ``"forward-euler"`` (explicit, source at left endpoints; at unit CFL the
    upwind transport step is an exact one-cell shift, which the implicit
    variants smear).
    """
    check_positive(dt, "dt")
    mu = as_parameter(mu, model.n_params)
    a = model.operator.assemble(mu).tocsc()
    eye = sp.identity(model.dim, format="csc")
    n_steps = int(round(t_end / dt))
    lu = None
    if stepper == "crank-nicolson":
        lhs = (eye - 0.5 * dt * a).tocsc()
        rhs_mat = (eye + 0.5 * dt * a).tocsr()
    elif stepper == "backward-euler":
        lhs = (eye - dt * a).tocsc()
        rhs_mat = None
    elif stepper == "forward-euler":
        lhs = None
        rhs_mat = (eye + dt * a).tocsr()
    else:
        raise ValueError(f"unknown stepper {stepper!r}")
    if lhs is not None:
        try:
            lu = spla.splu(lhs)
        except RuntimeError as exc:
            raise SingularStepError(
                f"stepping matrix factorization failed: {exc}") from exc

    has_source = bool(model.source.terms)
    states = np.empty((model.dim, n_steps + 1))
    states[:, 0] = model.initial_value(mu)
    t = 0.0
    for k in range(n_steps):
        if stepper == "crank-nicolson":
            rhs = rhs_mat @ states[:, k]
            if has_source:
                rhs = rhs + dt * model.time_source(t + 0.5 * dt, mu)
        elif stepper == "backward-euler":
            rhs = states[:, k].copy()
            if has_source:
                rhs = rhs + dt * model.time_source(t + dt, mu)
        else:
            rhs = rhs_mat @ states[:, k]
            if has_source:
                rhs = rhs + dt * model.time_source(t, mu)
        states[:, k + 1] = lu.solve(rhs) if lu is not None else rhs
        t += dt
    times = dt * np.arange(n_steps + 1)
    return Trajectory(times=times, states=states, stepper=stepper, dt=dt)


def heaviside_snapshot_matrices(mu_samples, t_samples, x_grid, z_nodes):
    """Step-profile snapshot families in the time and transform domains.

    Time-domain columns sample ``H(mu * t - x)`` over all ``(mu, t)`` pairs;
    transform-domain columns sample ``exp(-x * z / mu) / (|mu| * z)`` over all
    ``(mu, z)`` pairs.  Columns are indexed parameter-major.
    """
    mu_samples = np.asarray(mu_samples, dtype=float)
    if np.any(mu_samples <= 0):
        raise ValueError("velocities must be positive")
    t_samples = np.asarray(t_samples, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    z = np.asarray(z_nodes, dtype=complex)

    time_cols = []
    for mu in mu_samples:
        for t in t_samples:
            time_cols.append(np.where(mu * t >= x, 1.0, 0.0))
    lap_cols = []
    for mu in mu_samples:
        for zz in z:
            lap_cols.append(np.exp(-x * zz / mu) / (abs(mu) * zz))
    return np.column_stack(time_cols), np.column_stack(lap_cols)
