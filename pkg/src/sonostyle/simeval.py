"""Similarity between generated pseudo-acoustic images and real ones.

Two measures are combined: cosine similarity of mean-centered resized gray
pixels, and a 64-bit DCT perceptual hash compared by normalized Hamming
distance. The reported average clamps a negative cosine to zero.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .numcore import Tensor, dct2d, resize_bilinear
from .preprocess import LUMA
from .validation import check_image

HASH_BITS = 64


def round_half_up(x: float, places: int = 4) -> Decimal:
    """Decimal rounding half-up, applied to ``x`` at 12 significant digits to absorb float noise."""
    return Decimal(f"{x:.12g}").quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def fmt4(x: float) -> str:
    return str(round_half_up(x, 4))


def _gray(img, side: int) -> np.ndarray:
    """Luma resized to ``side``×``side``; intensities need not be clamped to [0, 1]."""
    arr = check_image(img, bounded=False)
    gray = arr if arr.ndim == 2 else arr @ LUMA
    return resize_bilinear(Tensor(gray[None]), side, side).data[0]


def cosine_similarity(a, b, side: int = 64) -> float:
    """Cosine of the angle between mean-centered ``side``×``side`` gray pixel vectors.

    A zero-norm vector (constant image) yields 0 with a warning.
    """
    if side < 8:
        raise ValueError("side must be at least 8")
    va, vb = _gray(a, side).ravel(), _gray(b, side).ravel()
    if np.ptp(va) == 0 or np.ptp(vb) == 0:
        warnings.warn("constant image in cosine similarity; defined as 0", stacklevel=2)
        return 0.0
    va, vb = va - va.mean(), vb - vb.mean()
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    return float(np.clip(va @ vb / (na * nb), -1.0, 1.0))


def phash(img, side: int = 32) -> np.ndarray:
    """64-bit DCT perceptual hash as a bool array.

    Resize to ``side``×``side`` gray, take the orthonormal 2-D DCT, keep the
    8×8 low-frequency block in raster order, drop DC, and set each of the 63
    remaining bits when its coefficient is strictly above their median. Bit
    64 is always 0. The block is mean-centered first; this only changes DC,
    so a constant image hashes to all zeros exactly.
    """
    g = _gray(img, side)
    coeffs = dct2d(g - g.mean())[:8, :8].ravel()[1:]
    bits = np.zeros(HASH_BITS, dtype=bool)
    bits[:63] = coeffs > np.median(coeffs)
    return bits


def hash_similarity(h1, h2) -> float:
    """``1 - popcount(h1 xor h2) / 64``."""
    h1, h2 = np.asarray(h1, dtype=bool), np.asarray(h2, dtype=bool)
    if h1.shape != (HASH_BITS,) or h2.shape != (HASH_BITS,):
        raise ValueError("digests must have 64 bits")
    return 1.0 - np.count_nonzero(h1 ^ h2) / HASH_BITS


def digest_hex(bits) -> str:
    return np.packbits(np.asarray(bits, dtype=bool)).tobytes().hex()


def average_similarity(cos: float, ph: float) -> float:
    """``(max(cos, 0) + ph) / 2``."""
    if not -1.0 <= cos <= 1.0 or not 0.0 <= ph <= 1.0:
        raise ValueError("cosine must lie in [-1, 1] and phash similarity in [0, 1]")
    return (max(cos, 0.0) + ph) / 2.0


@dataclass(frozen=True)
class SimilarityReport:
    pair_id: str
    cosine: float
    phash: float
    average: float

    @classmethod
    def from_metrics(cls, pair_id: str, cosine: float, ph: float) -> "SimilarityReport":
        return cls(pair_id, cosine, ph, average_similarity(cosine, ph))

    def row(self) -> list[str]:
        return [self.pair_id, fmt4(self.cosine), fmt4(self.phash), fmt4(self.average)]


def evaluate_pair(pseudo, real, pair_id: str = "", side: int = 64) -> SimilarityReport:
    cos = cosine_similarity(pseudo, real, side)
    ph = hash_similarity(phash(pseudo), phash(real))
    return SimilarityReport.from_metrics(pair_id, cos, ph)


SIMILARITY_HEADER = ["pair_id", "cosine", "phash", "average"]


def write_similarity_csv(reports, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SIMILARITY_HEADER)
        for r in reports:
            writer.writerow(r.row())
