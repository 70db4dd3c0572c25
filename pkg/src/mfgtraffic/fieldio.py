"""Binary field files and the checkpoint index.

A field file is a 32-byte little-endian header followed by Nx*Nx float64
values in row-major order (position index slowest):

    offset  type      content
    0       4 bytes   magic b"MFGF"
    4       uint32    format version (1)
    8       uint32    rows (position nodes)
    12      uint32    cols (speed nodes)
    16      float64   time tag, seconds
    24      uint8     1 = row-major
    25      7 bytes   zero padding

Each artifact directory keeps ``fields/index.csv`` with one line per file:
``field,snapshot,step,time,file``.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import ArtifactError
from .trajectory import TimeGrid, TrajectoryStore

MAGIC = b"MFGF"
VERSION = 1
HEADER = struct.Struct("<4sIIIdB7x")


def write_field(path, values: np.ndarray, time_tag: float) -> None:
    values = np.asarray(values, dtype="<f8")
    if values.ndim != 2:
        raise ValueError("field must be two-dimensional")
    rows, cols = values.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, rows, cols, float(time_tag), 1))
        fh.write(np.ascontiguousarray(values).tobytes(order="C"))


def read_field(path) -> tuple[np.ndarray, float]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ArtifactError(f"cannot read field file {path}: {exc}") from exc
    if len(raw) < HEADER.size:
        raise ArtifactError(f"{path}: truncated header")
    magic, version, rows, cols, t, row_major = HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise ArtifactError(f"{path}: not a version-{VERSION} field file")
    if len(raw) != HEADER.size + 8 * rows * cols:
        raise ArtifactError(f"{path}: size does not match {rows}x{cols} header")
    values = np.frombuffer(raw, dtype="<f8", offset=HEADER.size).reshape(rows, cols)
    if not row_major:
        values = values.T
    return values.astype(float), t


def write_trajectories(directory, stores: dict[str, TrajectoryStore]) -> Path:
    """Write every snapshot of every store; stacked stores get one file per component.

    ``stores`` maps a field name to a store of shape (Nx, Nx), or to
    ``(names, store)`` for a stacked store of shape (len(names), Nx, Nx).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for name, store in stores.items():
        names, store = ((name,), store) if isinstance(store, TrajectoryStore) else store
        for s, (step, t) in enumerate(zip(store.steps, store.times)):
            snap = store.values[s]
            parts = (snap,) if len(names) == 1 else snap
            for comp, arr in zip(names, parts):
                fname = f"{comp}_{s:06d}.bin"
                write_field(directory / fname, arr, t)
                rows.append((comp, s, int(step), repr(float(t)), fname))
    with open(directory / "index.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["field", "snapshot", "step", "time", "file"])
        w.writerows(rows)
    return directory / "index.csv"


def read_index(directory) -> list[dict]:
    path = Path(directory) / "index.csv"
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise ArtifactError(f"missing checkpoint index {path}") from exc


def read_trajectory(directory, name: str, timegrid: TimeGrid) -> TrajectoryStore:
    directory = Path(directory)
    entries = [e for e in read_index(directory) if e["field"] == name]
    if len(entries) != timegrid.n_snapshots:
        raise ArtifactError(
            f"{name}: index lists {len(entries)} snapshots, expected {timegrid.n_snapshots}")
    entries.sort(key=lambda e: int(e["snapshot"]))
    first, _ = read_field(directory / entries[0]["file"])
    store = TrajectoryStore(timegrid, first.shape)
    for e in entries:
        values, _ = read_field(directory / e["file"])
        if values.shape != first.shape:
            raise ArtifactError(f"{e['file']}: shape {values.shape} differs from {first.shape}")
        store.values[int(e["snapshot"])] = values
    return store
