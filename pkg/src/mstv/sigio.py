"""Signal file formats: CSV (d=1), 16-bit PGM with a JSON sidecar (d=2),
and the raw .tsig container (any d).

PGM stores quantized values; the linear map back to float is recorded in
``<path>.json`` as {"min": lo, "max": hi}. The .tsig layout is a
little-endian header (magic "TSIG", u32 version 1, u32 d, u32 N) followed
by N**d float64 values in row-major order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .grid import TorusSignal

TSIG_MAGIC = b"TSIG"
TSIG_VERSION = 1
PGM_MAXVAL = 65535


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_signal(path, s: TorusSignal) -> None:
    """Write s in the format named by the extension (.csv/.pgm/.tsig)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        if s.d != 1:
            raise ValueError("CSV holds one-dimensional signals only")
        path.write_text("".join(f"{float(v)!r}\n" for v in s.values))
    elif suffix == ".pgm":
        if s.d != 2:
            raise ValueError("PGM holds two-dimensional signals only")
        lo = float(s.values.min())
        hi = float(s.values.max())
        if hi > lo:
            quant = np.rint((s.values - lo) / (hi - lo) * PGM_MAXVAL)
        else:
            quant = np.zeros_like(s.values)
        header = f"P5\n{s.grid_side} {s.grid_side}\n{PGM_MAXVAL}\n".encode()
        path.write_bytes(header + quant.astype(">u2").tobytes())
        _sidecar_path(path).write_text(
            json.dumps({"min": lo, "max": hi}, sort_keys=True) + "\n"
        )
    elif suffix == ".tsig":
        header = struct.pack(
            "<4sIII", TSIG_MAGIC, TSIG_VERSION, s.d, s.grid_side
        )
        path.write_bytes(header + s.values.astype("<f8").tobytes())
    else:
        raise ValueError(f"unsupported signal format {suffix!r}")


def read_signal(path) -> TorusSignal:
    """Read a signal written by write_signal; format from the extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        rows = [line for line in path.read_text().splitlines() if line.strip()]
        values = np.array([float(r) for r in rows])
        return TorusSignal(1, values.size, values)
    if suffix == ".pgm":
        return _read_pgm(path)
    if suffix == ".tsig":
        return _read_tsig(path)
    raise ValueError(f"unsupported signal format {suffix!r}")


def _read_pgm(path: Path) -> TorusSignal:
    raw = path.read_bytes()
    fields, offset = [], 0
    while len(fields) < 4:
        if offset >= len(raw):
            raise ValueError(f"{path}: truncated PGM header")
        chunk = raw[offset : offset + 1]
        if chunk == b"#":
            offset = raw.index(b"\n", offset) + 1
            continue
        if chunk.isspace():
            offset += 1
            continue
        end = offset
        while end < len(raw) and not raw[end : end + 1].isspace():
            end += 1
        fields.append(raw[offset:end])
        offset = end
    if fields[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = (int(f) for f in fields[1:4])
    if width != height:
        raise ValueError(f"{path}: grid must be square, got {width}x{height}")
    if maxval != PGM_MAXVAL:
        raise ValueError(f"{path}: expected maxval {PGM_MAXVAL}, got {maxval}")
    offset += 1  # single whitespace byte after maxval
    quant = np.frombuffer(raw, dtype=">u2", count=width * height, offset=offset)
    quant = quant.reshape(height, width).astype(np.float64)
    sidecar = _sidecar_path(path)
    if sidecar.exists():
        mapping = json.loads(sidecar.read_text())
        lo, hi = float(mapping["min"]), float(mapping["max"])
    else:
        lo, hi = 0.0, float(PGM_MAXVAL)
    values = lo + quant / PGM_MAXVAL * (hi - lo) if hi > lo else np.full_like(quant, lo)
    return TorusSignal(2, width, values)


def _read_tsig(path: Path) -> TorusSignal:
    raw = path.read_bytes()
    header = struct.calcsize("<4sIII")
    if len(raw) < header:
        raise ValueError(f"{path}: truncated container header")
    magic, version, d, side = struct.unpack_from("<4sIII", raw)
    if magic != TSIG_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != TSIG_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    count = side**d
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=header)
    if values.size != count:
        raise ValueError(f"{path}: expected {count} values, file is short")
    return TorusSignal(d, side, values.reshape((side,) * d))
