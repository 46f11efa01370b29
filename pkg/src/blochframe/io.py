"""Binary and text artifact formats.

Two small self-describing binary containers are defined:

``BLF1`` (frame fields)
    magic ``BLF1``; little-endian u32 fields version, d, grid_n, n, m,
    region code (0 effective-cell, 1 boundary, 2 full-torus), ndim; then
    ``ndim`` u32 array dimensions; then the payload: for each grid point in
    row-major order, the n x m frame in column-major order, each entry as a
    float64 (re, im) pair.

``WAN1`` (Wannier amplitudes)
    magic ``WAN1``; little-endian u32 fields version, d, grid_n, n, m,
    then the window offset as an i32; payload as above over the lattice
    window, sites in row-major order.

Writers are deterministic (no timestamps, fixed key order in JSON), so
identical inputs produce byte-identical artifacts.
"""

import csv
import hashlib
import json
import struct

import numpy as np

from .cells import CellGeometry
from .errors import UsageError
from .frames import FrameField
from .wannier import WannierSet

__all__ = [
    "save_frames",
    "load_frames",
    "save_wannier",
    "load_wannier",
    "write_wannier_csv",
    "write_json",
    "read_json",
    "file_sha256",
    "jsonable",
]

_REGION_CODES = {"effective-cell": 0, "boundary": 1, "full-torus": 2}
_REGION_NAMES = {v: k for k, v in _REGION_CODES.items()}


def jsonable(obj):
    """Recursively convert numpy containers and scalars to JSON-safe types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path, obj):
    """Write a JSON document with sorted keys and a trailing newline."""
    text = json.dumps(jsonable(obj), indent=2, sort_keys=True)
    with open(path, "w") as fh:
        fh.write(text + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _payload_bytes(data):
    """Serialize grid + (n, m) complex data: frames column-major per point."""
    swapped = np.ascontiguousarray(np.swapaxes(data, -1, -2).astype(np.complex128))
    return swapped.tobytes()


def _payload_array(raw, shape):
    """Inverse of :func:`_payload_bytes` for a known logical shape."""
    swapped_shape = shape[:-2] + (shape[-1], shape[-2])
    flat = np.frombuffer(raw, dtype="<c16")
    if flat.size != int(np.prod(swapped_shape)):
        raise UsageError("artifact payload size does not match its header")
    return np.ascontiguousarray(
        np.swapaxes(flat.reshape(swapped_shape), -1, -2)
    )


def save_frames(path, field, metrics=None):
    """Write a frame field as a ``BLF1`` file plus a JSON sidecar.

    The sidecar (same path with ``.json`` appended) records the header
    fields and any metric dict passed by the caller.
    """
    data = np.asarray(field.data, dtype=complex)
    geometry = field.geometry
    header = struct.pack(
        "<4sIIIIII",
        b"BLF1",
        1,
        geometry.d,
        geometry.grid_n,
        field.n,
        field.m,
        _REGION_CODES[field.region],
    )
    dims = struct.pack("<I", data.ndim) + struct.pack(
        f"<{data.ndim}I", *data.shape
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(dims)
        fh.write(_payload_bytes(data))
    sidecar = {
        "format": "BLF1",
        "version": 1,
        "d": geometry.d,
        "grid_n": geometry.grid_n,
        "n": field.n,
        "m": field.m,
        "region": field.region,
        "metrics": jsonable(metrics or {}),
    }
    write_json(str(path) + ".json", sidecar)


def load_frames(path):
    """Read a ``BLF1`` file back into a frame field."""
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<4sIIIIII"))
        magic, version, d, grid_n, n, m, region_code = struct.unpack(
            "<4sIIIIII", head
        )
        if magic != b"BLF1" or version != 1:
            raise UsageError(f"{path} is not a BLF1 version 1 file")
        (ndim,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
        raw = fh.read()
    geometry = CellGeometry(d, grid_n)
    data = _payload_array(raw, tuple(shape))
    region = _REGION_NAMES.get(region_code)
    if region is None:
        raise UsageError(f"unknown region code {region_code} in {path}")
    return FrameField(geometry, region, data, {})


def save_wannier(path, wset):
    """Write a Wannier set as a ``WAN1`` file."""
    data = np.asarray(wset.data, dtype=complex)
    geometry = wset.geometry
    header = struct.pack(
        "<4sIII",
        b"WAN1",
        1,
        geometry.d,
        geometry.grid_n,
    ) + struct.pack("<IIi", data.shape[-2], data.shape[-1], int(wset.offset))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(_payload_bytes(data))


def load_wannier(path):
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<4sIII"))
        magic, version, d, grid_n = struct.unpack("<4sIII", head)
        n, m, offset = struct.unpack("<IIi", fh.read(12))
        raw = fh.read()
        if magic != b"WAN1" or version != 1:
            raise UsageError(f"{path} is not a WAN1 version 1 file")
    geometry = CellGeometry(d, grid_n)
    shape = (geometry.n_side,) * d + (n, m)
    data = _payload_array(raw, shape)
    return WannierSet(geometry, data, offset, {})


def write_wannier_csv(path, wset):
    """Write amplitudes as CSV rows (gamma per axis, orbital, band, re, im)."""
    d = wset.geometry.d
    gamma = wset.gamma_axis()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"gamma_{j + 1}" for j in range(d)] + ["orbital", "band", "re", "im"]
        )
        for site in np.ndindex(*wset.data.shape[:d]):
            block = wset.data[site]
            site_cols = [int(gamma[c]) for c in site]
            for orb in range(block.shape[0]):
                for band in range(block.shape[1]):
                    val = block[orb, band]
                    writer.writerow(
                        site_cols
                        + [orb, band, f"{val.real:.17g}", f"{val.imag:.17g}"]
                    )
