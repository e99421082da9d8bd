"""Command line front end: ``liouville-dmd {decompose,reconstruct,spectrum,synth}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from . import decomposition as dec
from .errors import DataError, InvalidInputError, NumericError
from .kernels import KernelSpec
from .persistence import DataSource, atomic_write_text, load_model, model_to_dict
from .quadrature import Rule
from .synthetic import SYSTEMS, synthesize
from .trajectory import Layout, format_float, read_trajectory_file, save_trajectory, segment_all, trajectory_files

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
LOG_FLOOR = 1e-12

log = logging.getLogger("liouville_dmd")


class UsageError(Exception):
    pass


def _vector(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _t_grid(text):
    """``start:stop:count`` (inclusive linspace) or a comma-separated list."""
    if ":" in text:
        try:
            start, stop, count = text.split(":")
            return np.linspace(float(start), float(stop), int(count))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad time grid {text!r}; use start:stop:count") from None
    return _vector(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liouville-dmd", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="fit a decomposition to trajectory CSV files")
    d.add_argument("input", help="trajectory CSV file or directory of CSV files")
    d.add_argument("--config", help="TOML file of flag defaults (flags win)")
    d.add_argument("--layout", choices=[l.value for l in Layout], default=Layout.PER_FILE.value)
    d.add_argument("--kernel", choices=["gaussian", "expdot"], default="gaussian")
    d.add_argument("--mu", type=float, default=1.0)
    d.add_argument("--scale-a", type=float, default=1.0)
    d.add_argument("--eps", type=float, default=dec.DEFAULT_EPS)
    d.add_argument("--quadrature", choices=[r.value for r in Rule], default=Rule.AUTO.value)
    d.add_argument("--segment-len", type=int, default=None)
    d.add_argument("--segment-stride", type=_positive_int, default=None)
    d.add_argument("--order", choices=[o.value for o in dec.Ordering], default=dec.Ordering.EIGENVALUE.value)
    d.add_argument("--x0", type=_vector, default=None, help="initial state for --order energy")
    d.add_argument("--modes-transpose", choices=[t.value for t in dec.ModesTranspose],
                   default=dec.ModesTranspose.PLAIN.value)
    d.add_argument("--jobs", type=_positive_int, default=1)
    d.add_argument("-o", "--out-dir", default=".")

    r = sub.add_parser("reconstruct", help="evaluate the model along a time grid")
    r.add_argument("model")
    r.add_argument("--x0", type=_vector, required=True)
    r.add_argument("--t-grid", type=_t_grid, required=True, help="start:stop:count or t1,t2,...")
    r.add_argument("-o", "--out-dir", default=".")

    s = sub.add_parser("spectrum", help="frequency/magnitude table of the model")
    s.add_argument("model")
    s.add_argument("--x0", type=_vector, default=None,
                   help="defaults to the first sample of the first training trajectory")
    s.add_argument("--log", action="store_true", help="write log10 magnitudes")
    s.add_argument("-o", "--out-dir", default=".")

    y = sub.add_parser("synth", help="write synthetic trajectory CSV files")
    y.add_argument("system", help=f"one of: {', '.join(SYSTEMS)}")
    y.add_argument("--count", type=int, default=10)
    y.add_argument("--T", type=float, default=1.0)
    y.add_argument("--dt", type=float, default=0.005)
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("-o", "--out-dir", default=".")
    return p


def _apply_config(parser, argv):
    # defaults come from the config file; explicit flags still override them
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or not argv or argv[0] != "decompose":
        return
    try:
        with open(known.config, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {known.config}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"bad config {known.config}: {exc}") from None
    sub = parser._subparsers._group_actions[0].choices["decompose"]
    dests = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in dests or dest in ("help", "config", "input"):
            raise UsageError(f"unknown config key {key!r}")
        action = dests[dest]
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        if action.type is not None and isinstance(value, str):
            value = action.type(value)
        elif action.type is not None:
            value = action.type(str(value)) if action.type in (_vector,) else action.type(value)
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {sorted(action.choices)}")
        defaults[dest] = value
    sub.set_defaults(**defaults)


class _Artifacts:
    """Collects output files; nothing appears unless every write succeeds."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.pending: dict[Path, str] = {}

    def add(self, name, text):
        self.pending[self.out_dir / name] = text

    def commit(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        done = []
        try:
            for path, text in self.pending.items():
                atomic_write_text(path, text)
                done.append(path)
        except BaseException:
            for path in done:
                path.unlink(missing_ok=True)
            raise


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_decompose(args) -> int:
    t0 = time.perf_counter()
    if args.scale_a is not None and not 0 < args.scale_a <= 1:
        raise InvalidInputError(f"--scale-a must lie in (0, 1], got {args.scale_a}")
    if args.order == dec.Ordering.ENERGY.value and args.x0 is None:
        raise UsageError("--order energy requires --x0")
    files = trajectory_files(args.input)
    trajs = [t for f in files for t in read_trajectory_file(f, args.layout)]
    if not trajs:
        raise DataError(f"no trajectories found in {args.input}")
    trajs = segment_all(trajs, args.segment_len, args.segment_stride)
    source = DataSource.from_files(files, layout=Layout(args.layout), segment_len=args.segment_len,
                                   segment_stride=args.segment_stride, quadrature=args.quadrature)
    t_load = time.perf_counter()

    kernel = KernelSpec(args.kernel, args.mu)
    model = dec.fit(trajs, kernel, a=args.scale_a, eps=args.eps, quadrature=args.quadrature,
                    transpose=args.modes_transpose, n_jobs=args.jobs)
    if args.order == dec.Ordering.ENERGY.value:
        model = model.ordered(dec.Ordering.ENERGY, args.x0)
    t_fit = time.perf_counter()

    lam = model.eigenvalues
    out = _Artifacts(args.out_dir)
    out.add("model.json", json.dumps(model_to_dict(model, source), indent=1) + "\n")
    out.add("eigenvalues.csv", _csv_text(
        ["index", "re", "im"],
        [[i + 1, format_float(z.real), format_float(z.imag)] for i, z in enumerate(lam)]))
    header = [f"xi{i + 1}_{part}" for i in range(model.M) for part in ("re", "im")]
    out.add("modes.csv", _csv_text(
        header, [[format_float(v) for z in row for v in (z.real, z.imag)] for row in model.modes]))
    G = model.gram.G
    meta = {
        "command": "decompose",
        "version": __version__,
        "input": str(Path(args.input).resolve()),
        "config": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                   for k, v in sorted(vars(args).items()) if k not in ("func", "command")},
        "M": model.M,
        "n": model.dim,
        "quadrature_rules": [w.rule_used.value for w in model.weights],
        "eps": model.eps,
        "eps_hat": model.eps_hat,
        "normalization": "v^H (G + eps_hat I) v = 1",
        "degenerate_threshold": dec.DEGENERATE_RTOL * float(np.sqrt(max(np.trace(G), 0.0))),
        "endpoints": "raw first/last samples of each trajectory",
        "ordering": args.order,
        "gram_min_eigenvalue": float(np.linalg.eigvalsh(G)[0]),
        "files": source.to_dict()["files"],
        "timings_s": {"load": t_load - t0, "fit": t_fit - t_load, "total": time.perf_counter() - t0},
    }
    out.add("run_meta.json", json.dumps(meta, indent=1) + "\n")
    out.commit()
    log.info("fitted %d occupation kernels -> %s", model.M, args.out_dir)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    model, _ = load_model(args.model)
    traj, resid = dec.reconstruct(model, args.x0, args.t_grid)
    header = ["t"] + [f"x{k + 1}" for k in range(model.dim)] + ["imag_residual"]
    rows = [[format_float(t), *map(format_float, x), format_float(r)]
            for t, x, r in zip(traj.times, traj.states, resid)]
    if traj.times[-1] > model.max_duration:
        log.warning("time grid extends past the longest training trajectory (%.6g s)", model.max_duration)
    out = _Artifacts(args.out_dir)
    out.add("reconstruction.csv", _csv_text(header, rows))
    out.commit()
    return EXIT_OK


def cmd_spectrum(args) -> int:
    model, _ = load_model(args.model)
    x0 = args.x0 if args.x0 is not None else model.trajectories[0].start
    table = dec.spectrum(model, x0)
    mags = np.log10(np.maximum(table[:, 1], LOG_FLOOR)) if args.log else table[:, 1]
    out = _Artifacts(args.out_dir)
    out.add("spectrum.csv", _csv_text(["frequency_hz", "magnitude"],
                                      [[format_float(f), format_float(m)] for f, m in zip(table[:, 0], mags)]))
    out.commit()
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.system not in SYSTEMS:
        raise UsageError(f"unknown system {args.system!r}; choose from {', '.join(SYSTEMS)}")
    trajs = synthesize(args.system, args.count, args.T, args.dt, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(max(args.count - 1, 0))))
    for i, tr in enumerate(trajs):
        save_trajectory(tr, out_dir / f"{args.system}_{i:0{width}d}.csv")
    return EXIT_OK


COMMANDS = {"decompose": cmd_decompose, "reconstruct": cmd_reconstruct,
            "spectrum": cmd_spectrum, "synth": cmd_synth}


@contextmanager
def _numpy_quiet():
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        yield


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"liouville-dmd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        with _numpy_quiet():
            return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"liouville-dmd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"liouville-dmd: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"liouville-dmd: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
