"""Raster I/O and dataset manifests.

Binary PGM/PPM (maxval 255) is the canonical lossless format: a byte ``v``
loads as ``v/255`` and saves back as ``floor(255*x + 0.5)``, so load/save
round trips are byte-identical. GIF is ingest-only (style galleries ship as
animated GIFs); every frame becomes one manifest entry.
"""

from __future__ import annotations

import csv
import logging
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gif import GifError, decode_gif_frames
from .validation import check_image

logger = logging.getLogger(__name__)

PNM_SUFFIXES = (".pgm", ".ppm", ".pnm")
GIF_SUFFIXES = (".gif",)
SUPPORTED_SUFFIXES = PNM_SUFFIXES + GIF_SUFFIXES


class ImageFormatError(ValueError):
    """File is not a supported raster."""


class BadMagicError(ImageFormatError):
    pass


class TruncatedImageError(ImageFormatError):
    pass


class UnsupportedMaxvalError(ImageFormatError):
    pass


def _parse_pnm_header(buf: bytes):
    magic = buf[:2]
    if magic not in (b"P5", b"P6"):
        raise BadMagicError(f"expected P5 or P6 magic, got {magic!r}")
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and buf[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise TruncatedImageError("incomplete PNM header")
        fields.append(int(buf[start:pos]))
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise TruncatedImageError("PNM header not terminated by whitespace")
    return magic, fields[0], fields[1], fields[2], pos + 1


def decode_pnm(buf: bytes) -> np.ndarray:
    magic, width, height, maxval, offset = _parse_pnm_header(buf)
    if maxval != 255:
        raise UnsupportedMaxvalError(f"maxval {maxval} not supported (only 255)")
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    data = buf[offset:offset + need]
    if len(data) < need:
        raise TruncatedImageError(f"expected {need} pixel bytes, found {len(data)}")
    arr = np.frombuffer(data, dtype=np.uint8).astype(np.float64) / 255.0
    return arr.reshape(height, width, 3) if channels == 3 else arr.reshape(height, width)


def load_pnm(path) -> np.ndarray:
    """Load a binary PGM (gray ``(H, W)``) or PPM (RGB ``(H, W, 3)``)."""
    with open(path, "rb") as fh:
        return decode_pnm(fh.read())


def quantize(img: np.ndarray) -> np.ndarray:
    """Map [0, 1] values to bytes with round-half-up."""
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def encode_pnm(img) -> bytes:
    img = check_image(img)
    h, w = img.shape[:2]
    magic = b"P6" if img.ndim == 3 else b"P5"
    return magic + f"\n{w} {h}\n255\n".encode("ascii") + quantize(img).tobytes()


def save_pnm(img, path) -> None:
    """Write ``img`` as P5 (gray) or P6 (RGB), creating parent directories."""
    data = encode_pnm(img)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def load_image(path, frame: int = 0) -> np.ndarray:
    """Load a PNM image or one frame of a GIF."""
    suffix = Path(path).suffix.lower()
    if suffix in GIF_SUFFIXES:
        frames = decode_gif_frames(path)
        if not 0 <= frame < len(frames):
            raise IndexError(f"{path} has {len(frames)} frames, requested frame {frame}")
        return frames[frame]
    if suffix in PNM_SUFFIXES:
        return load_pnm(path)
    raise ImageFormatError(f"unsupported image suffix {suffix!r}")


# -- manifests -----------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    path: str
    frame: int
    width: int
    height: int


@dataclass
class DatasetManifest:
    role: str
    entries: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def load(self, index: int, root=None) -> np.ndarray:
        e = self.entries[index]
        path = e.path if root is None else os.path.join(root, e.path)
        return load_image(path, e.frame)

    def to_csv(self, path, relative_to=None) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["role", "path", "frame", "width", "height"])
            for e in self.entries:
                p = e.path if relative_to is None else os.path.relpath(e.path, relative_to)
                writer.writerow([self.role, Path(p).as_posix(), e.frame, e.width, e.height])

    @classmethod
    def from_csv(cls, path) -> "DatasetManifest":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        roles = {r["role"] for r in rows}
        if len(roles) > 1:
            raise ValueError(f"manifest {path} mixes roles {sorted(roles)}")
        role = roles.pop() if roles else Path(path).stem
        entries = [ManifestEntry(r["path"], int(r["frame"]), int(r["width"]), int(r["height"])) for r in rows]
        return cls(role, entries)


ROLES = ("content", "style", "pristine")


def build_manifest(directory, role: str) -> DatasetManifest:
    """Enumerate decodable PNM/GIF files under ``directory``, recursively.

    Files are visited in lexicographic path order. GIFs contribute one entry
    per frame. Undecodable files are skipped with a warning.
    """
    if role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}, got {role!r}")
    root = Path(directory)
    if not root.is_dir():
        raise NotADirectoryError(f"manifest directory {directory} does not exist")
    files = sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES)
    manifest = DatasetManifest(role)
    for p in files:
        try:
            if p.suffix.lower() in GIF_SUFFIXES:
                frames = decode_gif_frames(p)
            else:
                frames = [load_pnm(p)]
        except (ImageFormatError, GifError, OSError) as exc:
            warnings.warn(f"skipping undecodable file {p}: {exc}", stacklevel=2)
            logger.warning("skipping undecodable file %s: %s", p, exc)
            manifest.skipped.append(str(p))
            continue
        for k, img in enumerate(frames):
            manifest.entries.append(ManifestEntry(str(p), k, img.shape[1], img.shape[0]))
    return manifest
