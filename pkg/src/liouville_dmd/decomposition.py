"""Finite-rank Liouville operator, eigenfunctions, Liouville modes and the data-driven model.

Given the Gram matrix ``G`` of occupation kernels and the interaction matrix
``I_a``, the operator restricted to the span of the occupation kernels is
represented by ``G^{-1} I_a^T``.  Its eigenvectors give eigenfunctions
``phi_i = sum_j V[j, i] Gamma_j``, the full state observable is expanded
in them with vector coefficients (the Liouville modes) and trajectories are
predicted as ``x(t) ~ sum_i xi_i phi_i(x0) exp(lambda_i t)``.

``G`` is regularised as ``G + eps_hat * I`` with ``eps_hat = eps * trace(G)/M``.
The same regularised matrix is used for the solve, for normalising the
eigenvectors and for the mode projection, so with ``eps = 0`` everything
reduces to the unregularised formulas.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from . import occupation
from ._accurate import dot2, hermitian_forms, sym_matvecs
from .errors import (DegenerateEigenbasisError, DegenerateEigenvectorError, InvalidInputError,
                     NumericRangeError, SingularGramError)
from .kernels import MAX_EXPONENT, KernelSpec
from .quadrature import QuadratureWeights
from .trajectory import Trajectory

log = logging.getLogger(__name__)

DEFAULT_EPS = 1e-10
# N_i below this multiple of sqrt(trace G) means v_i is G-orthogonal to the data
DEGENERATE_RTOL = 1e-12
_REFINE_STEPS = 8


class Ordering(str, enum.Enum):
    EIGENVALUE = "eigenvalue"
    ENERGY = "energy"


class ModesTranspose(str, enum.Enum):
    PLAIN = "plain"
    CONJUGATE = "conjugate"


def regularization(G, eps: float) -> float:
    """Absolute shift ``eps * trace(G) / M`` added to the Gram diagonal."""
    if eps < 0:
        raise InvalidInputError(f"eps must be >= 0, got {eps}")
    G = np.asarray(G)
    return float(eps * np.trace(G) / G.shape[0])


def _factor(Gr):
    try:
        return scipy.linalg.cho_factor(Gr, lower=True, check_finite=True)
    except np.linalg.LinAlgError:
        raise SingularGramError(
            "Gram matrix is singular even after regularization; increase eps, or use "
            "fewer/longer trajectories"
        ) from None


def _refine(solve, residual, X):
    """Iterative refinement ``X += solve(residual(X))`` until corrections stop shrinking."""
    prev = np.inf
    for _ in range(_REFINE_STEPS):
        D = solve(residual(X))
        size = np.abs(D).max()
        if not np.isfinite(size) or size >= prev:
            break
        X = X + D
        prev = size
        if size <= 1e-17 * np.abs(X).max():
            break
    return X


def _solve_regularized(G, I, eps):
    """``X = (G + eps_hat I)^{-1} I^T`` as an unevaluated sum ``X + X_lo``, plus the factor."""
    G = np.asarray(G, dtype=float)
    I = np.asarray(I, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or I.shape != G.shape:
        raise InvalidInputError(f"G and I must be square and equal in shape, got {G.shape}, {I.shape}")
    M = G.shape[0]
    shift = regularization(G, eps)
    # the rounded shifted matrix only preconditions; residuals use G + shift*I exactly
    factor = _factor(G + shift * np.eye(M))
    B = np.ascontiguousarray(I.T)
    X = _refine(lambda r: scipy.linalg.cho_solve(factor, r),
                lambda X: dot2(-G, X, B, shift=-shift),
                scipy.linalg.cho_solve(factor, B))
    if not np.all(np.isfinite(X)):
        raise SingularGramError("regularized Gram solve produced non-finite values; increase eps")
    X_lo = scipy.linalg.cho_solve(factor, dot2(-G, X, B, shift=-shift))
    return X, X_lo, np.tril(factor[0])


def finite_rank_representation(G, I, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Solve ``(G + eps_hat I) X = I^T`` by Cholesky with iterative refinement.

    Residuals are evaluated in compensated arithmetic, which recovers an
    accurate ``X`` even when ``G + eps_hat I`` has a condition number near
    ``1e12``.  No explicit inverse is formed.

    Parameters
    ----------
    G : ndarray, shape (M, M)
        Symmetric Gram matrix.
    I : ndarray, shape (M, M)
        Interaction matrix (scaled or not).
    eps : float
        Relative regularization.

    Returns
    -------
    ndarray, shape (M, M)
    """
    return _solve_regularized(G, I, eps)[0]


def _whitened(X, X_lo, L):
    """``L^T X L^{-T}``, an exact similarity of ``X`` rounded once at the end.

    When ``G`` is nearly singular ``X`` has entries many orders larger than
    its eigenvalues, and an eigensolver working on ``X`` directly loses most
    of them.  The similarity by the Cholesky factor brings the matrix back to
    the scale of its spectrum.  ``X`` is carried as ``X + X_lo`` because the
    product cancels heavily.
    """
    Lt = np.ascontiguousarray(L.T)
    T = dot2(Lt, X)
    T_lo = dot2(Lt, X, -T) + Lt @ X_lo

    def right_solve(P):
        return scipy.linalg.solve_triangular(L, P.T, lower=True).T

    return _refine(right_solve, lambda Q: dot2(-Q, L.T, T) + T_lo, right_solve(T))


def _conjugate_units(lam):
    # LAPACK returns conjugate pairs of a real matrix adjacently, +imag first
    units, k = [], 0
    while k < lam.size:
        if lam[k].imag > 0 and k + 1 < lam.size and lam[k + 1] == np.conj(lam[k]):
            units.append((k, k + 1))
            k += 2
        else:
            units.append((k,))
            k += 1
    return units


def _order(lam, units, score=None):
    def key(u):
        z = lam[u[0]]
        primary = -abs(z) if score is None else -max(score[i] for i in u)
        return (primary, -abs(z.imag), -z.real, -z.imag, u[0])
    return [i for u in sorted(units, key=key) for i in u]


def eigendecompose(G, I_a, eps: float = DEFAULT_EPS):
    """Eigenpairs of the finite-rank representation, normalised in the Gram inner product.

    Returns
    -------
    eigenvalues : ndarray, shape (M,), complex
        Sorted by descending modulus; conjugate partners are adjacent with the
        positive imaginary part first.
    V : ndarray, shape (M, M), complex
        Column ``i`` is ``v_i / N_i`` with ``N_i = sqrt(v_i^H (G + eps_hat I) v_i)``.
    """
    G = np.asarray(G, dtype=float)
    X, X_lo, L = _solve_regularized(G, I_a, eps)
    lam, Y = np.linalg.eig(_whitened(X, X_lo, L))
    V = scipy.linalg.solve_triangular(L.T, Y.astype(complex), lower=False)
    lam = lam.astype(complex)
    N = np.sqrt(np.maximum(hermitian_forms(G, V, shift=regularization(G, eps)), 0.0))
    # compare against the Euclidean length: the scale of an eigenvector is arbitrary
    floor = DEGENERATE_RTOL * np.sqrt(max(np.trace(G), 0.0))
    bad = np.flatnonzero(N < floor * np.linalg.norm(V, axis=0))
    if bad.size:
        raise DegenerateEigenvectorError(
            f"{bad.size} unit eigenvector(s) have Gram norm below {floor:.3g} "
            f"(eigenvalue {lam[bad[0]]:.6g}); they are orthogonal to the data span"
        )
    V = V / N
    order = _order(lam, _conjugate_units(lam))
    return lam[order], V[:, order]


def liouville_modes(V, G, state_ints, eps: float = DEFAULT_EPS,
                    transpose: ModesTranspose | str = ModesTranspose.PLAIN) -> np.ndarray:
    """Expand the full state observable in the eigenfunctions.

    Solves ``(V^T Gr V) C = V^T S`` with ``Gr = G + eps_hat I`` and returns
    ``xi = C^T``; ``transpose="conjugate"`` uses ``V^H`` in both places.

    Returns
    -------
    ndarray, shape (n, M), complex
        Column ``i`` is the Liouville mode ``xi_i``.
    """
    transpose = ModesTranspose(transpose)
    V = np.asarray(V, dtype=complex)
    G = np.asarray(G, dtype=float)
    S = np.asarray(state_ints, dtype=float)
    if S.ndim != 2 or S.shape[0] != G.shape[0] or V.shape != G.shape:
        raise InvalidInputError("V, G and state integrals have inconsistent shapes")
    Vt = V.T if transpose is ModesTranspose.PLAIN else V.conj().T
    gram = Vt @ sym_matvecs(G, V, shift=regularization(G, eps))
    rhs = Vt @ S
    try:
        # conditioning is checked explicitly below
        with np.errstate(all="raise"), warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            C = scipy.linalg.solve(gram, rhs, check_finite=True)
    except (np.linalg.LinAlgError, FloatingPointError, ValueError):
        raise DegenerateEigenbasisError("V^T G V is singular; the eigenbasis is degenerate") from None
    if np.linalg.cond(gram) * np.finfo(float).eps > 1:
        raise DegenerateEigenbasisError("V^T G V is numerically singular; the eigenbasis is degenerate")
    return C.T


@dataclass(frozen=True)
class Prediction:
    state: np.ndarray
    imag_residual: float
    extrapolated: bool


@dataclass(frozen=True)
class DecompositionModel:
    """A fitted decomposition.

    The trajectories and their quadrature weights are kept because evaluating
    an eigenfunction at a new point needs the occupation kernels.
    """

    eigenvalues: np.ndarray
    V: np.ndarray
    modes: np.ndarray
    a: float
    eps: float
    eps_hat: float
    kernel: KernelSpec
    trajectories: tuple
    weights: tuple
    transpose: ModesTranspose = ModesTranspose.PLAIN
    gram: occupation.GramData | None = dataclasses.field(default=None, repr=False, compare=False)

    @property
    def M(self) -> int:
        return self.eigenvalues.size

    @property
    def dim(self) -> int:
        return self.modes.shape[0]

    @property
    def max_duration(self) -> float:
        return max(t.duration for t in self.trajectories)

    def permuted(self, order) -> "DecompositionModel":
        order = np.asarray(order)
        return dataclasses.replace(self, eigenvalues=self.eigenvalues[order],
                                   V=np.ascontiguousarray(self.V[:, order]),
                                   modes=np.ascontiguousarray(self.modes[:, order]))

    def ordered(self, by: Ordering | str = Ordering.EIGENVALUE, x0=None) -> "DecompositionModel":
        """Reorder modes by eigenvalue modulus or by ``|xi_i| |phi_i(x0)|``."""
        by = Ordering(by)
        lam = self.eigenvalues
        units = _conjugate_units(lam)
        score = None
        if by is Ordering.ENERGY:
            if x0 is None:
                raise InvalidInputError("energy ordering needs an initial condition x0")
            score = mode_energies(self, x0)
        return self.permuted(_order(lam, units, score))


def fit(trajs: Sequence[Trajectory], kernel: KernelSpec, a: float = 1.0, eps: float = DEFAULT_EPS,
        quadrature="auto", transpose: ModesTranspose | str = ModesTranspose.PLAIN,
        n_jobs: int = 1) -> DecompositionModel:
    """Run the whole decomposition on sampled trajectories.

    Parameters
    ----------
    trajs : sequence of Trajectory
        Training trajectories, all of the same state dimension.
    kernel : KernelSpec
    a : float, optional
        Endpoint scaling in ``(0, 1]``; 1 gives the unscaled Liouville operator.
    eps : float, optional
        Relative Gram regularization.
    quadrature : {"auto", "simpson", "trapezoid"}
    transpose : {"plain", "conjugate"}
        Transpose used in the Liouville mode projection.
    n_jobs : int
        Threads for Gram assembly.

    Returns
    -------
    DecompositionModel
    """
    trajs = tuple(trajs)
    weights = tuple(occupation.trajectory_weights(trajs, quadrature))
    data = occupation.assemble(trajs, kernel, a, weights=weights, n_jobs=n_jobs)
    lam, V = eigendecompose(data.G, data.I_a, eps)
    xi = liouville_modes(V, data.G, data.state_integrals, eps, transpose)
    log.debug("fit: M=%d, n=%d, eps_hat=%.3g", data.M, xi.shape[0], regularization(data.G, eps))
    return DecompositionModel(
        eigenvalues=lam, V=np.ascontiguousarray(V), modes=np.ascontiguousarray(xi), a=float(a), eps=float(eps),
        eps_hat=regularization(data.G, eps), kernel=kernel, trajectories=trajs,
        weights=weights, transpose=ModesTranspose(transpose), gram=data,
    )


def _occupation_vector(model, x0):
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.ndim != 1 or x0.size != model.dim:
        raise InvalidInputError(f"x0 has dimension {x0.size}, model has {model.dim}")
    return occupation.occupation_values(model.trajectories, model.kernel, x0,
                                        weights=model.weights)[:, 0]


def eigenfunctions_at(model: DecompositionModel, x0) -> np.ndarray:
    """``phi_i(x0) = sum_j V[j, i] Gamma_j(x0)`` for every eigenfunction."""
    return model.V.T @ _occupation_vector(model, x0)


def mode_energies(model: DecompositionModel, x0) -> np.ndarray:
    """``|xi_i|_2 * |phi_i(x0)|`` per mode."""
    return np.linalg.norm(model.modes, axis=0) * np.abs(eigenfunctions_at(model, x0))


def _check_growth(model, tmax):
    growth = model.eigenvalues.real * tmax
    if growth.size and np.max(growth) > MAX_EXPONENT:
        i = int(np.argmax(growth))
        raise NumericRangeError(
            f"mode {i} (eigenvalue {model.eigenvalues[i]:.6g}) overflows at t={tmax:.6g}"
        )


def predict(model: DecompositionModel, x0, t: float) -> Prediction:
    """Evaluate the data-driven model at time ``t`` from initial state ``x0``.

    The real part of ``sum_i xi_i phi_i(x0) exp(lambda_i t)`` is returned;
    the norm of the discarded imaginary part is reported as a diagnostic.
    """
    t = float(t)
    if t < 0:
        raise InvalidInputError(f"prediction time must be >= 0, got {t}")
    X, resid = _evaluate(model, x0, np.array([t]))
    return Prediction(X[0], float(resid[0]), t > model.max_duration)


def _evaluate(model, x0, times):
    _check_growth(model, np.max(times))
    phi = eigenfunctions_at(model, x0)
    E = np.exp(np.outer(times, model.eigenvalues))
    Z = E @ (phi[:, None] * model.modes.T)
    return Z.real, np.linalg.norm(Z.imag, axis=1)


def reconstruct(model: DecompositionModel, x0, times):
    """Predict at several times.

    Returns
    -------
    traj : Trajectory
        Real part of the model output at ``times``.
    imag_residual : ndarray
        Norm of the imaginary part at each time.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise InvalidInputError("reconstruction needs at least 2 time points")
    if np.any(times < 0):
        raise InvalidInputError("reconstruction times must be >= 0")
    X, resid = _evaluate(model, x0, times)
    return Trajectory(times, X), resid


def spectrum(model: DecompositionModel, x0) -> np.ndarray:
    """Frequency content of the model seen from ``x0``.

    One row per eigenvalue with non-negative imaginary part:
    ``(Im(lambda) / 2 pi, |xi_i| |phi_i(x0)|)``, the magnitude doubled for
    complex eigenvalues to account for the conjugate partner.  Rows are
    sorted by frequency.

    Returns
    -------
    ndarray, shape (K, 2)
    """
    lam = model.eigenvalues
    energy = mode_energies(model, x0)
    keep = np.flatnonzero(lam.imag >= 0)
    freq = lam.imag[keep] / (2 * np.pi)
    mag = energy[keep] * np.where(lam.imag[keep] > 0, 2.0, 1.0)
    order = np.argsort(freq, kind="stable")
    return np.column_stack([freq[order], mag[order]])


def hausdorff(a, b) -> float:
    """Hausdorff distance between two finite sets of complex numbers."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    D = np.abs(a[:, None] - b[None, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))
