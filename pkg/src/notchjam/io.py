"""Waveform files and CSV reports.

Waveform file layout (all little-endian)::

    offset  size  field
    0       4     magic b"NWF1"
    4       2     version (uint16, currently 1)
    6       8     N, number of samples (uint64)
    14      8     sample rate in Hz (float64)
    22      1     full-scale flag (uint8, 1 if parts were scaled to [-1, 1])
    23      4     metadata length M in bytes (uint32)
    27      M     metadata, UTF-8 JSON
    27+M    16N   samples as interleaved (Re, Im) float64 pairs

A sidecar ``<file>.json`` repeats the metadata in readable form.
"""

from dataclasses import dataclass, field
import csv
import json
from pathlib import Path
import struct

import numpy as np

from ._validation import check_sequence

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "WaveformFile",
    "FormatError",
    "write_waveform",
    "read_waveform",
    "sidecar_path",
    "write_csv",
    "format_value",
]

MAGIC = b"NWF1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHQdBI")


class FormatError(ValueError):
    """File does not follow the waveform format."""


@dataclass
class WaveformFile:
    samples: np.ndarray
    sample_rate: float
    full_scale: bool = False
    metadata: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    @property
    def n_samples(self):
        return int(self.samples.size)


def sidecar_path(path):
    p = Path(path)
    return p.with_name(p.name + ".json")


def write_waveform(path, c, sample_rate, full_scale=False, metadata=None, sidecar=True):
    """Write ``c`` in the waveform format; returns the path written."""
    c = check_sequence(c)
    if not sample_rate > 0:
        raise ValueError("sample_rate must be positive")
    meta = dict(metadata or {})
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, c.size, float(sample_rate), int(bool(full_scale)), len(meta_bytes))
    # <c16 is exactly the interleaved (Re, Im) float64 layout
    payload = np.ascontiguousarray(c, dtype="<c16")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(meta_bytes)
        fh.write(payload.tobytes())
    if sidecar:
        side = {
            "format": MAGIC.decode(),
            "version": FORMAT_VERSION,
            "n_samples": int(c.size),
            "sample_rate": float(sample_rate),
            "full_scale": bool(full_scale),
            "metadata": meta,
        }
        sidecar_path(path).write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return path


def read_waveform(path):
    """Read a waveform file, checking magic, version and payload size."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n, fs, flag, meta_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    start = _HEADER.size + meta_len
    if len(data) != start + 16 * n:
        raise FormatError(f"{path}: expected {16 * n} payload bytes, found {len(data) - start}")
    try:
        meta = json.loads(data[_HEADER.size : start].decode()) if meta_len else {}
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable metadata ({exc})") from None
    samples = np.frombuffer(data, dtype="<c16", offset=start, count=n).astype(np.complex128)
    return WaveformFile(samples, fs, bool(flag), meta, version)


def format_value(x):
    """Shortest round-trip text for numbers so CSV output is reproducible."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path, header, rows):
    """CSV with a one-line header; floats use shortest round-trip form."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path
