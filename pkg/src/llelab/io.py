"""Artifact persistence: trajectory directories, spectrum tables, and
report serialization.

Trajectories persist as a directory holding metadata.json, an index.csv
(time, file, L2 and Linf norms), and one binary file per snapshot.
Snapshot files carry a fixed little-endian header (magic, version,
point count) followed by interleaved float64 re/im pairs.  The layout
is documented in FORMAT.md at the repository root.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from . import __version__ as _tool_version
from .evolve import Trajectory
from .exceptions import MissingArtifactError, ParameterError
from .grid import Grid, l2_norm, lp_norm
from .waves import LleParams, PeriodicWave, wave_from_dict, wave_to_dict

SNAPSHOT_MAGIC = b"LLEB"
SNAPSHOT_VERSION = 1

FLOAT_FMT = "%.17g"


def write_snapshot(path: Path, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=complex)
    inter = np.empty(2 * len(values))
    inter[0::2] = values.real
    inter[1::2] = values.imag
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<IQ", SNAPSHOT_VERSION, len(values)))
        fh.write(inter.astype("<f8").tobytes())


def read_snapshot(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise ParameterError(f"{path}: bad snapshot magic {magic!r}")
        version, n = struct.unpack("<IQ", fh.read(12))
        if version != SNAPSHOT_VERSION:
            raise ParameterError(f"{path}: unsupported snapshot version {version}")
        inter = np.frombuffer(fh.read(16 * n), dtype="<f8")
    return inter[0::2] + 1j * inter[1::2]


def save_trajectory(traj: Trajectory, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": 1,
        "tool_version": _tool_version,
        "n_points": traj.grid.n_points,
        "length": traj.grid.length,
        "params": {
            "alpha": traj.params.alpha,
            "beta": traj.params.beta,
            "f_pump": traj.params.f_pump,
        },
        "linearized": traj.linearized,
        "n_snapshots": len(traj.times),
        "meta": traj.meta,
    }
    if traj.wave is not None:
        meta["wave"] = wave_to_dict(traj.wave)
    with open(directory / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=2)
    rows = []
    for i, (t, state) in enumerate(zip(traj.times, traj.states)):
        fname = f"snapshot_{i:06d}.bin"
        write_snapshot(directory / fname, state)
        rows.append(
            (
                FLOAT_FMT % t,
                fname,
                FLOAT_FMT % l2_norm(traj.grid, state),
                FLOAT_FMT % lp_norm(traj.grid, state, np.inf),
            )
        )
    with open(directory / "index.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "file", "l2", "linf"])
        writer.writerows(rows)
    return directory


def load_trajectory(directory) -> Trajectory:
    directory = Path(directory)
    meta_path = directory / "metadata.json"
    if not meta_path.exists():
        raise MissingArtifactError(f"no metadata.json in {directory}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    grid = Grid(meta["n_points"], meta["length"])
    params = LleParams(**meta["params"])
    wave = wave_from_dict(meta["wave"]) if "wave" in meta else None
    times = []
    states = []
    with open(directory / "index.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            times.append(float(row["time"]))
            states.append(read_snapshot(directory / row["file"]))
    return Trajectory(
        grid,
        params,
        np.array(times),
        np.array(states),
        wave=wave,
        linearized=meta.get("linearized", False),
        meta=meta.get("meta", {}),
    )


def write_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    """Two-dimensional table with fixed float formatting (deterministic
    byte-level output for identical inputs)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(columns[0])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(n):
            writer.writerow(
                [
                    (FLOAT_FMT % c[i]) if isinstance(c[i], (float, np.floating)) else c[i]
                    for c in columns
                ]
            )


def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"missing artifact {path}")
    with open(path) as fh:
        return json.load(fh)


def save_spectrum_csv(path, spectrum) -> None:
    """Flatten a Bloch spectrum to (xi, re, im, branch) rows; branch -1
    marks ordinary eigenvalues and 0 the continued critical curve."""
    rows_xi = []
    rows_re = []
    rows_im = []
    rows_branch = []
    for i, xi in enumerate(spectrum.xi_samples):
        for lam in spectrum.eigenvalues[i]:
            rows_xi.append(float(xi))
            rows_re.append(float(lam.real))
            rows_im.append(float(lam.imag))
            rows_branch.append(-1)
        lam_c = spectrum.critical_curve[i]
        rows_xi.append(float(xi))
        rows_re.append(float(lam_c.real))
        rows_im.append(float(lam_c.imag))
        rows_branch.append(0)
    write_csv(
        path,
        ["xi", "re_lambda", "im_lambda", "branch"],
        [np.array(rows_xi), np.array(rows_re), np.array(rows_im), rows_branch],
    )
