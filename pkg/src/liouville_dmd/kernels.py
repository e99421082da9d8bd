"""Positive-definite kernels on R^n."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInputError, NumericRangeError

# exp() of anything larger overflows float64 soon after; refuse early.
MAX_EXPONENT = 700.0


class KernelKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    EXPDOT = "expdot"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and width.

    Parameters
    ----------
    kind : KernelKind or str
        ``"gaussian"`` for ``exp(-|x - y|^2 / mu)`` or ``"expdot"`` for
        ``exp(x.y / mu)``.
    mu : float
        Width, in squared state units. Must be positive.
    """

    kind: KernelKind
    mu: float

    def __post_init__(self):
        try:
            kind = KernelKind(self.kind)
        except ValueError:
            raise InvalidInputError(f"unknown kernel kind {self.kind!r}") from None
        mu = float(self.mu)
        if not np.isfinite(mu) or mu <= 0:
            raise InvalidInputError(f"kernel width mu must be positive, got {self.mu!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def gaussian(cls, mu: float) -> "KernelSpec":
        return cls(KernelKind.GAUSSIAN, mu)

    @classmethod
    def expdot(cls, mu: float) -> "KernelSpec":
        return cls(KernelKind.EXPDOT, mu)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "mu": self.mu}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["kind"], d["mu"])

    def __call__(self, x, y) -> float:
        return eval_kernel(self, x, y)


def _as_points(X, name):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if X.size == 0 else X[None, :]
    if X.ndim != 2:
        raise InvalidInputError(f"{name} must be a 2-D array of points, got shape {X.shape}")
    return X


def _expdot(kernel, dots):
    z = dots / kernel.mu
    if z.size and np.max(z) > MAX_EXPONENT:
        raise NumericRangeError(
            f"exp-dot kernel exponent {np.max(z):.6g} exceeds {MAX_EXPONENT}; "
            "increase mu or rescale the data"
        )
    return np.exp(z)


def eval_kernel(kernel: KernelSpec, x, y) -> float:
    """Evaluate ``K(x, y)`` for two points of equal dimension."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape or x.size == 0:
        raise InvalidInputError(f"points must be vectors of equal dimension, got {x.shape} and {y.shape}")
    if kernel.kind is KernelKind.GAUSSIAN:
        d = x - y
        return float(np.exp(-np.dot(d, d) / kernel.mu))
    return float(_expdot(kernel, np.asarray(np.dot(x, y))))


def eval_matrix(kernel: KernelSpec, X, Y) -> np.ndarray:
    """Kernel matrix between two point sets.

    Parameters
    ----------
    kernel : KernelSpec
    X : array_like, shape (P, n)
    Y : array_like, shape (Q, n)

    Returns
    -------
    ndarray, shape (P, Q)
        Entry ``(p, q)`` is ``K(X[p], Y[q])``.
    """
    X = _as_points(X, "X")
    Y = _as_points(Y, "Y")
    if X.shape[1] != Y.shape[1] and X.shape[0] and Y.shape[0]:
        raise InvalidInputError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if X.shape[0] == 0 or Y.shape[0] == 0:
        return np.zeros((X.shape[0], Y.shape[0]))
    if kernel.kind is KernelKind.GAUSSIAN:
        # cdist works on differences directly, so K(x, x) == 1 exactly
        return np.exp(-cdist(X, Y, "sqeuclidean") / kernel.mu)
    return _expdot(kernel, X @ Y.T)
