"""Occupation kernels and the matrices built from them.

For a trajectory ``gamma`` on ``[0, T]`` the occupation kernel is
``Gamma(x) = int_0^T K(x, gamma(t)) dt``.  Every inner product between
occupation kernels (and between an occupation kernel and a kernel section)
reduces to quadrature along the trajectories, which is all this module does.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from . import quadrature
from .errors import InvalidInputError, SingularGramError
from .kernels import KernelSpec, eval_matrix
from .trajectory import Trajectory

# kernel-matrix entries evaluated per block during Gram assembly
_BLOCK_ENTRIES = 4_000_000


@dataclass(frozen=True)
class GramData:
    """Gram matrix, interaction matrix and state integrals of one data set.

    ``I_a[i, j]`` is ``<K(., a*gamma_j(T_j)) - K(., a*gamma_j(0)), Gamma_i>``
    and ``state_integrals[i]`` is ``int_0^{T_i} gamma_i(t) dt``.
    """

    G: np.ndarray
    I_a: np.ndarray
    state_integrals: np.ndarray
    a: float
    kernel: KernelSpec

    @property
    def M(self) -> int:
        return self.G.shape[0]


def trajectory_weights(trajs: Sequence[Trajectory], rule="auto") -> list[quadrature.QuadratureWeights]:
    return [quadrature.weights(t.times, rule) for t in trajs]


def _check_dims(trajs):
    if not trajs:
        raise InvalidInputError("no trajectories")
    n = trajs[0].dim
    for k, t in enumerate(trajs):
        if t.dim != n:
            raise InvalidInputError(f"trajectory {k} has dimension {t.dim}, expected {n}")
    return n


def _resolve_weights(trajs, rule, weights):
    if weights is None:
        return trajectory_weights(trajs, rule)
    if len(weights) != len(trajs):
        raise InvalidInputError(f"{len(weights)} weight vectors for {len(trajs)} trajectories")
    for t, w in zip(trajs, weights):
        if len(w) != len(t):
            raise InvalidInputError("quadrature weights do not match trajectory samples")
    return list(weights)


def occupation_eval(traj: Trajectory, kernel: KernelSpec, x, rule="auto", weights=None) -> float:
    """``Gamma_traj(x)``, the occupation kernel of ``traj`` evaluated at ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size != traj.dim:
        raise InvalidInputError(f"point has dimension {x.size}, trajectory has {traj.dim}")
    w = weights if weights is not None else quadrature.weights(traj.times, rule)
    return float(w.weights @ eval_matrix(kernel, traj.states, x[None, :])[:, 0])


def occupation_values(trajs: Sequence[Trajectory], kernel: KernelSpec, points,
                      rule="auto", weights=None) -> np.ndarray:
    """Matrix ``V[i, q] = Gamma_i(points[q])``."""
    n = _check_dims(trajs)
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    if points.shape[1] != n:
        raise InvalidInputError(f"points have dimension {points.shape[1]}, trajectories have {n}")
    weights = _resolve_weights(trajs, rule, weights)
    return np.array([w.weights @ eval_matrix(kernel, t.states, points)
                     for t, w in zip(trajs, weights)]).reshape(len(trajs), points.shape[0])


def _gram_row(i, trajs, weights, kernel, groups):
    Si, wi = trajs[i].states, weights[i].weights
    row = np.empty(len(trajs))
    for lo, hi, Y, wy, offsets in groups:
        r = (wi @ eval_matrix(kernel, Si, Y)) * wy
        row[lo:hi] = np.add.reduceat(r, offsets)
    return row


def _column_groups(trajs, weights, rows_hint):
    # batch trajectories so that one kernel block stays below _BLOCK_ENTRIES
    groups, start = [], 0
    while start < len(trajs):
        stop, total = start, 0
        while stop < len(trajs) and (stop == start or (total + len(trajs[stop])) * rows_hint <= _BLOCK_ENTRIES):
            total += len(trajs[stop])
            stop += 1
        Y = np.vstack([t.states for t in trajs[start:stop]])
        wy = np.concatenate([w.weights for w in weights[start:stop]])
        offsets = np.cumsum([0] + [len(t) for t in trajs[start:stop - 1]])
        groups.append((start, stop, Y, wy, offsets))
        start = stop
    return groups


def gram_matrix(trajs: Sequence[Trajectory], kernel: KernelSpec, rule="auto",
                weights=None, n_jobs: int = 1) -> np.ndarray:
    """Gram matrix ``G[i, j] = <Gamma_j, Gamma_i>`` of the occupation kernels.

    Each entry is the tensor-product quadrature ``w_i^T K(S_i, S_j) w_j`` of
    the double integral.  Rows are independent and may be computed by
    ``n_jobs`` threads; the result does not depend on ``n_jobs``.  The matrix
    is symmetrised as ``(G + G.T) / 2``.
    """
    _check_dims(trajs)
    weights = _resolve_weights(trajs, rule, weights)
    groups = _column_groups(trajs, weights, max(len(t) for t in trajs))
    rows = _map(lambda i: _gram_row(i, trajs, weights, kernel, groups), range(len(trajs)), n_jobs)
    G = np.array(rows)
    return (G + G.T) / 2


def interaction_matrix(trajs: Sequence[Trajectory], kernel: KernelSpec, a: float = 1.0,
                       rule="auto", weights=None) -> np.ndarray:
    """Interaction matrix with endpoints scaled by ``a`` (``a = 1`` is unscaled).

    ``I[i, j] = Gamma_i(a * gamma_j(T_j)) - Gamma_i(a * gamma_j(0))``.
    """
    a = float(a)
    if not 0.0 < a <= 1.0:
        raise InvalidInputError(f"scaling parameter a must lie in (0, 1], got {a}")
    _check_dims(trajs)
    weights = _resolve_weights(trajs, rule, weights)
    ends = np.array([t.end for t in trajs])
    starts = np.array([t.start for t in trajs])
    at_ends = occupation_values(trajs, kernel, a * ends, weights=weights)
    at_starts = occupation_values(trajs, kernel, a * starts, weights=weights)
    return at_ends - at_starts


def state_integrals(trajs: Sequence[Trajectory], rule="auto", weights=None) -> np.ndarray:
    """Row ``i`` is ``int_0^{T_i} gamma_i(t)^T dt``."""
    _check_dims(trajs)
    weights = _resolve_weights(trajs, rule, weights)
    return np.array([w.weights @ t.states for t, w in zip(trajs, weights)])


def assemble(trajs: Sequence[Trajectory], kernel: KernelSpec, a: float = 1.0, rule="auto",
             weights=None, n_jobs: int = 1) -> GramData:
    weights = _resolve_weights(trajs, rule, weights)
    return GramData(
        G=gram_matrix(trajs, kernel, weights=weights, n_jobs=n_jobs),
        I_a=interaction_matrix(trajs, kernel, a, weights=weights),
        state_integrals=state_integrals(trajs, weights=weights),
        a=float(a),
        kernel=kernel,
    )


def projection_errors(trajs: Sequence[Trajectory], kernel: KernelSpec, y, eps: float = 1e-10,
                      rule="auto", weights=None) -> np.ndarray:
    """Squared RKHS distance from ``K(., y)`` to the span of the first M occupation kernels.

    Returns ``e[M-1] = K(y, y) - k_M^T G_M^{-1} k_M`` for ``M = 1..len(trajs)``,
    where ``k_M[i] = Gamma_i(y)``.  ``G`` is regularised once as
    ``G + eps * trace(G) / M * I`` for the full set; because the leading block
    of a Cholesky factor is the factor of the leading block, the nested
    errors come from a single factorisation.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    weights = _resolve_weights(trajs, rule, weights)
    G = gram_matrix(trajs, kernel, weights=weights)
    M = G.shape[0]
    k = occupation_values(trajs, kernel, y, weights=weights)[:, 0]
    Gr = G + eps * np.trace(G) / M * np.eye(M)
    try:
        L = scipy.linalg.cholesky(Gr, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularGramError(f"Gram matrix is not positive definite ({exc}); increase eps") from None
    z = scipy.linalg.solve_triangular(L, k, lower=True)
    kyy = float(eval_matrix(kernel, y[None, :], y[None, :])[0, 0])
    return kyy - np.cumsum(z ** 2)


def _map(fn, items, n_jobs):
    items = list(items)
    if n_jobs is None or n_jobs <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))
