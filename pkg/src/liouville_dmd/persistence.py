"""JSON model files and provenance of the trajectory data behind them."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import occupation
from .decomposition import DecompositionModel, ModesTranspose
from .errors import InvalidInputError, StaleModelError
from .kernels import KernelSpec
from .trajectory import Layout, read_trajectory_file, segment_all

FORMAT = "liouville-dmd-model"
VERSION = 1


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class DataSource:
    """Where a model's trajectories came from and how they were cut up."""

    files: tuple
    layout: Layout = Layout.PER_FILE
    segment_len: int | None = None
    segment_stride: int | None = None
    quadrature: str = "auto"

    @classmethod
    def from_files(cls, files, **kw) -> "DataSource":
        return cls(tuple((str(Path(f).resolve()), sha256_file(f)) for f in files), **kw)

    def to_dict(self) -> dict:
        return {
            "layout": Layout(self.layout).value,
            "segment_len": self.segment_len,
            "segment_stride": self.segment_stride,
            "quadrature": self.quadrature,
            "files": [{"path": p, "sha256": d} for p, d in self.files],
        }

    @classmethod
    def from_dict(cls, d) -> "DataSource":
        return cls(tuple((f["path"], f["sha256"]) for f in d["files"]), Layout(d["layout"]),
                   d["segment_len"], d["segment_stride"], d["quadrature"])

    def verify(self):
        for path, digest in self.files:
            if not Path(path).exists():
                raise FileNotFoundError(f"trajectory file referenced by model is missing: {path}")
            if sha256_file(path) != digest:
                raise StaleModelError(f"{path} changed since the model was written (digest mismatch)")

    def load(self):
        trajs = [t for p, _ in self.files for t in read_trajectory_file(p, self.layout)]
        return segment_all(trajs, self.segment_len, self.segment_stride)


def _cmat(Z):
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    return {"rows": Z.shape[0], "cols": Z.shape[1],
            "re": Z.real.ravel().tolist(), "im": Z.imag.ravel().tolist()}


def _from_cmat(d):
    return (np.array(d["re"], dtype=float) + 1j * np.array(d["im"], dtype=float)).reshape(d["rows"], d["cols"])


def model_to_dict(model: DecompositionModel, source: DataSource) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "M": model.M,
        "n": model.dim,
        "eigenvalues": {"re": model.eigenvalues.real.tolist(), "im": model.eigenvalues.imag.tolist()},
        "V": _cmat(model.V),
        "modes": _cmat(model.modes),
        "a": model.a,
        "eps": model.eps,
        "eps_hat": model.eps_hat,
        "kernel": model.kernel.to_dict(),
        "modes_transpose": model.transpose.value,
        "quadrature_rules": [w.rule_used.value for w in model.weights],
        "data": source.to_dict(),
    }


def save_model(model: DecompositionModel, path, source: DataSource) -> None:
    atomic_write_text(path, json.dumps(model_to_dict(model, source), indent=1) + "\n")


def load_model(path, verify: bool = True) -> tuple[DecompositionModel, DataSource]:
    """Read a model file and re-attach its trajectories.

    Raises
    ------
    StaleModelError
        If a trajectory file's digest no longer matches, or the reloaded data
        no longer lines up with the stored decomposition.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(d, dict) or d.get("format") != FORMAT:
        raise InvalidInputError(f"{path} is not a {FORMAT} file")
    if d.get("version") != VERSION:
        raise InvalidInputError(f"{path} has unsupported model version {d.get('version')!r}")
    try:
        source = DataSource.from_dict(d["data"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"{path} has a malformed data section ({exc})") from None
    if verify:
        source.verify()
    trajs = tuple(source.load())
    weights = tuple(occupation.trajectory_weights(trajs, source.quadrature))
    if len(trajs) != d["M"] or [w.rule_used.value for w in weights] != d["quadrature_rules"]:
        raise StaleModelError(f"trajectories referenced by {path} no longer match the model")
    lam = np.array(d["eigenvalues"]["re"]) + 1j * np.array(d["eigenvalues"]["im"])
    model = DecompositionModel(
        eigenvalues=lam, V=_from_cmat(d["V"]), modes=_from_cmat(d["modes"]), a=d["a"],
        eps=d["eps"], eps_hat=d["eps_hat"], kernel=KernelSpec.from_dict(d["kernel"]),
        trajectories=trajs, weights=weights, transpose=ModesTranspose(d["modes_transpose"]),
    )
    return model, source


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
