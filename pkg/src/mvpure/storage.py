"""File formats: the MVPM1 binary array container, CSV matrices, and
scenario/epochs directories.

MVPM1 layout (little-endian): 5-byte magic ``MVPM1``, u32 rank, one u64
per dimension, then the float64 payload in row-major order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import UsageError
from .model import Covariance, Epochs, LeadField, Scenario, SourceSet

MAGIC = b"MVPM1"
MAX_RANK = 8

MANIFEST_NAME = "manifest.json"


def write_mvpm(path, array: np.ndarray) -> None:
    a = np.ascontiguousarray(array, dtype=np.float64)
    if a.ndim < 1 or a.ndim > MAX_RANK:
        raise UsageError(f"MVPM1 supports rank 1..{MAX_RANK}, got {a.ndim}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", a.ndim))
        fh.write(struct.pack(f"<{a.ndim}Q", *a.shape))
        fh.write(a.tobytes(order="C"))


def read_mvpm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise UsageError(f"{path}: not an MVPM1 file (bad magic {blob[:5]!r})")
    off = len(MAGIC)
    (rank,) = struct.unpack_from("<I", blob, off)
    off += 4
    if not 1 <= rank <= MAX_RANK:
        raise UsageError(f"{path}: unsupported rank {rank}")
    dims = struct.unpack_from(f"<{rank}Q", blob, off)
    off += 8 * rank
    count = int(np.prod(dims))
    expected = off + 8 * count
    if len(blob) != expected:
        raise UsageError(
            f"{path}: payload size mismatch (dims {dims} need {expected} bytes, file has {len(blob)})"
        )
    data = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
    return data.reshape(dims).copy()


def write_csv_matrix(path, matrix: np.ndarray) -> None:
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2:
        raise UsageError(f"CSV export is for 2-D matrices, got rank {M.ndim}")
    with open(path, "w") as fh:
        for row in M:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")


def read_csv_matrix(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        raise UsageError(f"{path}: empty CSV matrix")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise UsageError(f"{path}: ragged CSV rows")
    return np.asarray(rows, dtype=np.float64)


def load_matrix(path) -> np.ndarray:
    """Read a matrix from .mvpm or .csv based on the file suffix."""
    p = Path(path)
    if p.suffix == ".csv":
        return read_csv_matrix(p)
    return read_mvpm(p)


def save_scenario(directory, scenario: Scenario) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_mvpm(d / "leadfield.mvpm", scenario.leadfield.gains)
    write_mvpm(d / "Q0.mvpm", scenario.Q0)
    write_mvpm(d / "N.mvpm", scenario.N.matrix)
    write_mvpm(d / "R.mvpm", scenario.R.matrix)
    manifest = {
        "leadfield": "leadfield.mvpm",
        "true_sources": list(scenario.true_sources),
        "Q0": "Q0.mvpm",
        "N": "N.mvpm",
        "R": "R.mvpm",
        "seed": scenario.seed,
        "channel_names": list(scenario.leadfield.channel_names),
    }
    with open(d / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(directory) -> Scenario:
    d = Path(directory)
    manifest_path = d / MANIFEST_NAME
    if not manifest_path.exists():
        raise UsageError(f"{d}: no {MANIFEST_NAME}; not a scenario directory")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    missing = [k for k in ("leadfield", "true_sources", "Q0", "N", "R", "seed") if k not in manifest]
    if missing:
        raise UsageError(f"{manifest_path}: manifest is missing fields {missing}")
    gains = read_mvpm(d / manifest["leadfield"])
    names = manifest.get("channel_names") or [f"ch{i:03d}" for i in range(gains.shape[0])]
    leadfield = LeadField(gains=gains, channel_names=tuple(names))
    return Scenario(
        leadfield=leadfield,
        true_sources=SourceSet(tuple(manifest["true_sources"])),
        Q0=read_mvpm(d / manifest["Q0"]),
        N=Covariance(matrix=read_mvpm(d / manifest["N"]), kind="noise"),
        R=Covariance(matrix=read_mvpm(d / manifest["R"]), kind="data"),
        seed=manifest["seed"],
    )


def save_epochs(path, epochs: Epochs) -> None:
    """Write epochs as rank-3 MVPM1 plus a JSON sidecar with sfreq and t0."""
    p = Path(path)
    write_mvpm(p, epochs.data)
    with open(p.with_name(p.name + ".json"), "w") as fh:
        json.dump({"sfreq": epochs.sfreq, "t0": epochs.t0}, fh)
        fh.write("\n")


def load_epochs(path) -> Epochs:
    p = Path(path)
    sidecar = p.with_name(p.name + ".json")
    if not sidecar.exists():
        raise UsageError(f"{p}: missing sidecar {sidecar.name} with sfreq/t0")
    data = read_mvpm(p)
    if data.ndim != 3:
        raise UsageError(f"{p}: epochs must be rank 3, got rank {data.ndim}")
    with open(sidecar) as fh:
        meta = json.load(fh)
    return Epochs(data=data, sfreq=float(meta["sfreq"]), t0=float(meta["t0"]))
