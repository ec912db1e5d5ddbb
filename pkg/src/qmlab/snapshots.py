"""State snapshot export: CSV for inspection, a checksummed binary for round trips.

Binary layout (all integers and floats little-endian)::

    8 bytes   magic  b"QMSNAP01"
    8 bytes   uint64 header length H
    H bytes   UTF-8 JSON header
    16*N      float64 pairs (Re, Im) in C order of the grid

The header holds ``grid`` (``GridSpec.to_dict``), ``params``
(``PhysicsParams.to_dict`` or null), ``dtype`` (``"<f8"``), ``layout``
(``"interleaved_re_im"``), ``count`` and ``sha256`` of the payload bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import IoFailure, SchemaMismatch
from .hilbert import GridSpec, PhysicsParams, WaveFunction, probability_density

MAGIC = b"QMSNAP01"
FORMAT_VERSION = 1
_AXIS_NAMES = ("x", "y", "z")


def csv_header(grid: GridSpec) -> list[str]:
    return [*_AXIS_NAMES[:grid.dim], "re_psi", "im_psi", "rho"]


def write_csv(psi: WaveFunction, path) -> Path:
    """One row per grid point, coordinates first, in C order."""
    path = Path(path)
    grid = psi.grid
    cols = [c.ravel() for c in grid.coords()]
    amp = psi.amplitudes.ravel()
    rho = probability_density(psi).ravel()
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(csv_header(grid))
            for row in zip(*cols, amp.real, amp.imag, rho):
                w.writerow([repr(float(v)) for v in row])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path, grid: GridSpec) -> WaveFunction:
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if data.shape != (grid.n ** grid.dim, grid.dim + 3):
        raise SchemaMismatch(f"{path}: table shape {data.shape} does not fit {grid}")
    amp = (data[:, grid.dim] + 1j * data[:, grid.dim + 1]).reshape(grid.shape)
    return WaveFunction(grid, amp)


def _payload(psi: WaveFunction) -> bytes:
    inter = np.empty(psi.amplitudes.size * 2, dtype="<f8")
    flat = psi.amplitudes.ravel()
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    return inter.tobytes()


def write_binary(psi: WaveFunction, path, params: PhysicsParams | None = None) -> Path:
    path = Path(path)
    payload = _payload(psi)
    header = {
        "format_version": FORMAT_VERSION,
        "grid": psi.grid.to_dict(),
        "params": params.to_dict() if params is not None else None,
        "dtype": "<f8",
        "layout": "interleaved_re_im",
        "count": int(psi.amplitudes.size),
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    try:
        with path.open("wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<Q", len(hbytes)))
            fh.write(hbytes)
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def read_binary(path) -> tuple[WaveFunction, dict]:
    """Read and validate a snapshot; returns the state and its header."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if raw[:8] != MAGIC:
        raise SchemaMismatch(f"{path}: bad magic {raw[:8]!r}")
    if len(raw) < 16:
        raise SchemaMismatch(f"{path}: truncated header")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    try:
        header = json.loads(raw[16:16 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaMismatch(f"{path}: unreadable header") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise SchemaMismatch(f"{path}: format version {header.get('format_version')}")
    payload = raw[16 + hlen:]
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise SchemaMismatch(f"{path}: checksum mismatch")
    g = header["grid"]
    grid = GridSpec(g["dim"], g["n"], g["length"])
    vals = np.frombuffer(payload, dtype="<f8")
    if vals.size != 2 * header["count"] or header["count"] != grid.n ** grid.dim:
        raise SchemaMismatch(f"{path}: payload size does not match grid")
    amp = (vals[0::2] + 1j * vals[1::2]).reshape(grid.shape)
    return WaveFunction(grid, amp), header
