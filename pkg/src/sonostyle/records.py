"""Little-endian binary record files.

Layout::

    8-byte magic
    u32 format version
    u32 header fields (count fixed per file kind)
    repeated records, in writer order:
        u32 name length, UTF-8 name, u32 rank, u32 dims[rank],
        float32 data (C order)
    end of file

Values are stored as float32, so a load followed by a save reproduces the
original bytes exactly.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


class RecordFileError(ValueError):
    """Corrupt or incompatible record file."""


class MagicMismatchError(RecordFileError):
    pass


class VersionMismatchError(RecordFileError):
    pass


class TruncatedRecordError(RecordFileError):
    pass


def encode_records(magic: bytes, header: list[int], records: list[tuple[str, np.ndarray]]) -> bytes:
    if len(magic) != 8:
        raise ValueError("magic must be 8 bytes")
    parts = [magic, struct.pack("<I", FORMAT_VERSION), struct.pack(f"<{len(header)}I", *header)]
    for name, arr in records:
        arr = np.asarray(arr, dtype="<f4")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(parts)


def write_records(path, magic: bytes, header: list[int], records: list[tuple[str, np.ndarray]]) -> None:
    """Write atomically: a partially written file never replaces a good one."""
    data = encode_records(magic, header, records)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def decode_records(buf: bytes, magic: bytes, n_header: int):
    """Return ``(header, [(name, float64 array), ...])``."""
    if buf[:8] != magic:
        raise MagicMismatchError(f"bad magic {buf[:8]!r}, expected {magic!r}")
    pos = 8

    def take(n):
        nonlocal pos
        if pos + n > len(buf):
            raise TruncatedRecordError(f"file truncated at byte {pos}")
        chunk = buf[pos:pos + n]
        pos += n
        return chunk

    (version,) = struct.unpack("<I", take(4))
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"format version {version}, expected {FORMAT_VERSION}")
    header = list(struct.unpack(f"<{n_header}I", take(4 * n_header)))
    records = []
    while pos < len(buf):
        (n,) = struct.unpack("<I", take(4))
        name = take(n).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        count = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(take(4 * count), dtype="<f4").reshape(dims).astype(np.float64)
        records.append((name, arr))
    return header, records


def read_records(path, magic: bytes, n_header: int):
    with open(path, "rb") as fh:
        return decode_records(fh.read(), magic, n_header)
