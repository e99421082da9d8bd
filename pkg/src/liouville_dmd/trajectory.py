"""Sampled trajectories: container, CSV I/O, windowing and a reference integrator."""

from __future__ import annotations

import csv
import enum
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError, InvalidInputError, ParseError


class Trajectory:
    """Time-stamped samples ``states[p] = gamma(times[p])`` of one system path.

    Both arrays are stored read-only; ``states`` has shape ``(N + 1, n)``.
    """

    __slots__ = ("times", "states")

    def __init__(self, times, states):
        times = np.array(times, dtype=float)
        states = np.array(states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if times.ndim != 1 or times.size < 2:
            raise InvalidInputError("a trajectory needs at least 2 samples")
        if states.ndim != 2 or states.shape[0] != times.size or states.shape[1] < 1:
            raise InvalidInputError(
                f"states shape {states.shape} does not match {times.size} times"
            )
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(states))):
            raise InvalidInputError("trajectory contains non-finite values")
        if not np.all(np.diff(times) > 0):
            raise InvalidInputError("trajectory times must be strictly increasing")
        times.setflags(write=False)
        states.setflags(write=False)
        self.times = times
        self.states = states

    def __len__(self):
        return self.times.size

    def __repr__(self):
        return f"Trajectory(samples={len(self)}, dim={self.dim}, duration={self.duration:.6g})"

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def start(self) -> np.ndarray:
        return self.states[0]

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]

    def rebased(self) -> "Trajectory":
        """Same samples with the clock shifted so the first time is 0."""
        if self.times[0] == 0.0:
            return self
        return Trajectory(self.times - self.times[0], self.states)


class Layout(str, enum.Enum):
    PER_FILE = "per-file"
    SINGLE = "single"


def _read_rows(path):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot open trajectory file {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(path, 1, "empty file")
        width = len(header)
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise ParseError(path, line, f"expected {width} columns, found {len(row)}")
            try:
                rows.append((line, [float(c) for c in row]))
            except ValueError:
                bad = next(c for c in row if not _is_float(c))
                raise ParseError(path, line, f"non-numeric cell {bad!r}") from None
    return [h.strip() for h in header], rows


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _build(path, rows):
    # rows: list of (line, [t, x1..xn])
    if len(rows) < 2:
        line = rows[0][0] if rows else 2
        raise ParseError(path, line, "a trajectory needs at least 2 samples")
    for (_, prev), (line, cur) in zip(rows, rows[1:]):
        if not cur[0] > prev[0]:
            raise ParseError(path, line, f"non-increasing time {cur[0]!r} after {prev[0]!r}")
    data = np.array([r for _, r in rows])
    if not np.all(np.isfinite(data)):
        line = rows[int(np.argmax(~np.all(np.isfinite(data), axis=1)))][0]
        raise ParseError(path, line, "non-finite value")
    return Trajectory(data[:, 0] - data[0, 0], data[:, 1:])


def read_trajectory_file(path, layout=Layout.PER_FILE) -> list[Trajectory]:
    """Parse one CSV file into one (per-file) or several (single) trajectories."""
    layout = Layout(layout)
    header, rows = _read_rows(path)
    if layout is Layout.PER_FILE:
        if len(header) < 2 or header[0] != "t":
            raise ParseError(path, 1, "header must be 't,x1,...,xn'")
        return [_build(path, rows)]

    if len(header) < 3 or header[:2] != ["traj_id", "t"]:
        raise ParseError(path, 1, "header must be 'traj_id,t,x1,...,xn'")
    groups: dict[int, list] = {}
    order = []
    last_id = None
    for line, vals in rows:
        tid = vals[0]
        if tid != int(tid):
            raise ParseError(path, line, f"traj_id {tid!r} is not an integer")
        tid = int(tid)
        if tid != last_id:
            if tid in groups:
                raise ParseError(path, line, f"rows for traj_id {tid} are not contiguous")
            groups[tid] = []
            order.append(tid)
            last_id = tid
        groups[tid].append((line, vals[1:]))
    return [_build(path, groups[tid]) for tid in order]


def load_trajectories(path, layout=Layout.PER_FILE) -> list[Trajectory]:
    """Load trajectories from a CSV file or a directory of CSV files.

    A directory is read file by file in lexicographic filename order (only
    ``*.csv``).  With ``layout="per-file"`` each file holds one trajectory
    with header ``t,x1,...,xn``; with ``layout="single"`` a file holds many,
    keyed by a leading ``traj_id`` column.  Times are shifted to start at 0.
    """
    return [t for f in trajectory_files(path) for t in read_trajectory_file(f, layout)]


def trajectory_files(path) -> list[Path]:
    path = Path(path)
    if path.is_dir():
        return sorted((p for p in path.iterdir() if p.suffix == ".csv" and p.is_file()),
                      key=lambda p: p.name)
    if not path.exists():
        raise FileNotFoundError(f"no such file or directory: {path}")
    return [path]


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def save_trajectory(traj: Trajectory, path) -> None:
    """Write one trajectory as ``t,x1..xn`` CSV with 17 significant digits."""
    _atomic_write_rows(path, ["t"] + [f"x{k + 1}" for k in range(traj.dim)],
                       ([t, *x] for t, x in zip(traj.times, traj.states)))


def save_trajectories(trajs: Sequence[Trajectory], path) -> None:
    """Write several trajectories into one ``traj_id,t,x1..xn`` CSV."""
    n = trajs[0].dim if trajs else 0
    rows = ([i, t, *x] for i, tr in enumerate(trajs) for t, x in zip(tr.times, tr.states))
    _atomic_write_rows(path, ["traj_id", "t"] + [f"x{k + 1}" for k in range(n)], rows,
                       int_cols=1)


def _atomic_write_rows(path, header, rows, int_cols=0):
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([str(int(v)) for v in row[:int_cols]]
                       + [format_float(v) for v in row[int_cols:]])
    os.replace(tmp, path)


def segment(traj: Trajectory, samples_per_segment: int, stride: int | None = None) -> list[Trajectory]:
    """Cut a trajectory into windows of ``samples_per_segment`` samples.

    Windows start every ``stride`` samples (default: non-overlapping).  When
    windows do not overlap, leftover samples at the end form one shorter
    segment if there are at least two of them and are dropped otherwise.
    Each segment is re-based to start at t = 0.
    """
    L = int(samples_per_segment)
    stride = L if stride is None else int(stride)
    if L < 2:
        raise InvalidInputError(f"segment length must be >= 2, got {samples_per_segment}")
    if stride < 1:
        raise InvalidInputError(f"segment stride must be >= 1, got {stride}")
    n = len(traj)
    if n < L:
        raise InvalidInputError(f"trajectory has {n} samples, fewer than segment length {L}")
    starts = list(range(0, n - L + 1, stride))
    bounds = [(s, s + L) for s in starts]
    tail = starts[-1] + stride
    if stride >= L and n - tail >= 2:
        bounds.append((tail, n))
    return [Trajectory(traj.times[a:b] - traj.times[a], traj.states[a:b]) for a, b in bounds]


def segment_all(trajs: Sequence[Trajectory], samples_per_segment: int | None,
                stride: int | None = None) -> list[Trajectory]:
    if samples_per_segment is None:
        return list(trajs)
    return [s for t in trajs for s in segment(t, samples_per_segment, stride)]


@dataclass(frozen=True)
class VectorFieldSpec:
    """Right-hand side ``f`` of ``dx/dt = f(x)`` for synthetic data.

    Use the constructors :meth:`linear`, :meth:`van_der_pol`,
    :meth:`custom` or :meth:`from_expressions`.
    """

    kind: str
    dim: int
    matrix: np.ndarray | None = None
    mu_vdp: float | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    @classmethod
    def linear(cls, A) -> "VectorFieldSpec":
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise InvalidInputError(f"linear system matrix must be square, got shape {A.shape}")
        A.setflags(write=False)
        return cls("linear", A.shape[0], matrix=A)

    @classmethod
    def van_der_pol(cls, mu: float = 1.0) -> "VectorFieldSpec":
        return cls("vanderpol", 2, mu_vdp=float(mu))

    @classmethod
    def custom(cls, func, dim: int) -> "VectorFieldSpec":
        if dim < 1:
            raise InvalidInputError("dimension must be >= 1")
        return cls("custom", int(dim), func=func)

    @classmethod
    def from_expressions(cls, exprs: Sequence[str]) -> "VectorFieldSpec":
        """Build a field from component expressions in ``x1, ..., xn``.

        >>> VectorFieldSpec.from_expressions(["x2", "-x1"]).rhs([1.0, 0.0])
        array([ 0., -1.])
        """
        import sympy

        n = len(exprs)
        syms = sympy.symbols(f"x1:{n + 1}")
        try:
            parsed = [sympy.sympify(e, locals={str(s): s for s in syms}) for e in exprs]
        except (sympy.SympifyError, SyntaxError, TypeError) as exc:
            raise InvalidInputError(f"cannot parse vector field: {exc}") from None
        extra = set().union(*(p.free_symbols for p in parsed)) - set(syms)
        if extra:
            raise InvalidInputError(f"unknown symbols in vector field: {sorted(map(str, extra))}")
        fn = sympy.lambdify(syms, parsed, "numpy")
        return cls.custom(lambda x: np.array(fn(*x), dtype=float), n)

    def rhs(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return self.matrix @ x
        if self.kind == "vanderpol":
            return np.array([x[1], self.mu_vdp * (1 - x[0] ** 2) * x[1] - x[0]])
        return np.asarray(self.func(x), dtype=float).reshape(self.dim)


def simulate(field: VectorFieldSpec, x0, T: float, dt: float) -> Trajectory:
    """Classical fixed-step RK4 from ``x0``, sampled at ``0, dt, ..., floor(T/dt)*dt``."""
    x = np.array(x0, dtype=float).reshape(-1)
    if x.size != field.dim:
        raise InvalidInputError(f"x0 has dimension {x.size}, field has {field.dim}")
    if not (T > 0 and 0 < dt <= T):
        raise InvalidInputError(f"need T > 0 and 0 < dt <= T, got T={T}, dt={dt}")
    # tolerate T/dt landing a hair below an integer
    steps = int(math.floor(T / dt * (1 + 1e-12)))
    out = np.empty((steps + 1, x.size))
    out[0] = x
    f = field.rhs
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            k1 = f(x)
            k2 = f(x + 0.5 * dt * k1)
            k3 = f(x + 0.5 * dt * k2)
            k4 = f(x + dt * k3)
            x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise DivergenceError((k + 1) * dt)
            out[k + 1] = x
    return Trajectory(np.arange(steps + 1) * dt, out)
