"""Seeded synthetic trajectory sets used for testing and demos."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .trajectory import Trajectory, VectorFieldSpec, simulate

SSVEP_HZ = 12.0
SSVEP_NOISE = 0.05

ODE_SYSTEMS = {
    "oscillator": lambda: VectorFieldSpec.linear([[0.0, 1.0], [-1.0, 0.0]]),
    "decay": lambda: VectorFieldSpec.linear([[-1.0, 0.0], [0.0, -2.0]]),
    "vanderpol": lambda: VectorFieldSpec.van_der_pol(1.0),
}
SIGNAL_SYSTEMS = ("ssvep", "ssvep2")
SYSTEMS = tuple(ODE_SYSTEMS) + SIGNAL_SYSTEMS


def _sample_times(T, dt):
    if not (T > 0 and 0 < dt <= T):
        raise InvalidInputError(f"need T > 0 and 0 < dt <= T, got T={T}, dt={dt}")
    steps = int(np.floor(T / dt * (1 + 1e-12)))
    return np.arange(steps + 1) * dt


def sinusoid_trajectories(count, T, dt, rng, channels=1, freq=SSVEP_HZ, noise=SSVEP_NOISE):
    """``sin(2 pi f t + phase) + noise * N(0, 1)`` with a random phase per trajectory.

    With ``channels=2`` the second channel is the matching cosine, i.e. two
    sensors a quarter period apart.
    """
    t = _sample_times(T, dt)
    out = []
    for _ in range(count):
        phase = rng.uniform(0.0, 2 * np.pi)
        arg = 2 * np.pi * freq * t + phase
        clean = np.sin(arg)[:, None] if channels == 1 else np.column_stack([np.sin(arg), np.cos(arg)])
        out.append(Trajectory(t, clean + noise * rng.standard_normal(clean.shape)))
    return out


def synthesize(system: str, count: int, T: float, dt: float, seed: int = 0) -> list[Trajectory]:
    """Generate ``count`` trajectories of a named system.

    ODE systems start from initial conditions drawn uniformly from the box
    ``[-1, 1]^n`` and are integrated with RK4.  ``ssvep`` and ``ssvep2`` are
    noisy 12 Hz sinusoids with one and two channels.
    """
    if count < 0:
        raise InvalidInputError("count must be >= 0")
    rng = np.random.default_rng(seed)
    if system in ODE_SYSTEMS:
        field = ODE_SYSTEMS[system]()
        return [simulate(field, rng.uniform(-1.0, 1.0, field.dim), T, dt) for _ in range(count)]
    if system in SIGNAL_SYSTEMS:
        return sinusoid_trajectories(count, T, dt, rng, channels=1 if system == "ssvep" else 2)
    raise InvalidInputError(f"unknown system {system!r}; choose from {', '.join(SYSTEMS)}")
