"""Composite quadrature weights for sampled integrands.

Every integral the decomposition needs is a weighted sum over trajectory
samples, so the rules here only ever produce weight vectors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# max |h_k - mean(h)| / mean(h) for a grid to count as uniform
UNIFORM_RTOL = 1e-9


class Rule(str, enum.Enum):
    AUTO = "auto"
    SIMPSON = "simpson"
    TRAPEZOID = "trapezoid"


class RuleUsed(str, enum.Enum):
    SIMPSON = "simpson"
    TRAPEZOID = "trapezoid"
    SIMPSON_TRAPEZOID_TAIL = "simpson+trapezoid-tail"


@dataclass(frozen=True)
class QuadratureWeights:
    weights: np.ndarray
    rule_used: RuleUsed

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def _trapezoid(times):
    h = np.diff(times)
    w = np.zeros(times.size)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def _uniform_gap_violation(times):
    h = np.diff(times)
    dev = np.abs(h - h.mean()) / h.mean()
    k = int(np.argmax(dev))
    return (k, dev[k]) if dev[k] >= UNIFORM_RTOL else None


def _simpson(times):
    n_int = times.size - 1
    m = n_int if n_int % 2 == 0 else n_int - 1
    w = np.zeros(times.size)
    h = (times[m] - times[0]) / m
    w[0:m + 1:2] = 2 * h / 3
    w[1:m:2] = 4 * h / 3
    w[0] = w[m] = h / 3
    if m < n_int:
        tail = times[-1] - times[-2]
        w[-2] += tail / 2
        w[-1] += tail / 2
        return w, RuleUsed.SIMPSON_TRAPEZOID_TAIL
    return w, RuleUsed.SIMPSON


def weights(times, rule="auto") -> QuadratureWeights:
    """Quadrature weights for integrating over ``[times[0], times[-1]]``.

    Parameters
    ----------
    times : array_like
        Strictly increasing sample times, at least two.
    rule : {"auto", "simpson", "trapezoid"}
        ``"simpson"`` needs a uniform grid; with an odd number of intervals
        the last one is covered by a trapezoid.  ``"auto"`` picks Simpson
        whenever the grid is uniform with at least two intervals, otherwise
        the trapezoid rule.

    Returns
    -------
    QuadratureWeights
    """
    rule = Rule(rule)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise InvalidInputError("quadrature needs at least 2 time points")
    if not np.all(np.diff(times) > 0):
        raise InvalidInputError("quadrature times must be strictly increasing")

    if rule is Rule.TRAPEZOID or times.size == 2:
        return QuadratureWeights(_trapezoid(times), RuleUsed.TRAPEZOID)
    bad = _uniform_gap_violation(times)
    if bad is not None:
        if rule is Rule.SIMPSON:
            k, dev = bad
            raise InvalidInputError(
                f"Simpson rule needs uniform spacing; gap {k} "
                f"[{times[k]:.17g}, {times[k + 1]:.17g}] deviates by {dev:.3g} (relative)"
            )
        return QuadratureWeights(_trapezoid(times), RuleUsed.TRAPEZOID)
    w, used = _simpson(times)
    return QuadratureWeights(w, used)


def integrate(qw: QuadratureWeights, samples) -> float | np.ndarray:
    """Weighted sum of samples; extra trailing axes are integrated componentwise."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[:1] != (len(qw),):
        raise InvalidInputError(
            f"{samples.shape[0] if samples.ndim else 0} samples for {len(qw)} weights"
        )
    out = np.tensordot(qw.weights, samples, axes=(0, 0))
    return float(out) if out.ndim == 0 else out
