"""Optical-image preparation before style transfer.

The pipeline turns a color photograph into a sonar-like content image:
grayscale conversion, trimap-guided foreground matting onto a black
(featureless water) background, Gaussian smoothing and a final bilinear
resize. Multiplicative speckle noise can be injected afterwards.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .imageio import load_pnm
from .numcore import Tensor, resize_bilinear
from .rng import SplitMix64
from .validation import check_gray, check_image, check_same_shape

logger = logging.getLogger(__name__)

LUMA = np.array([0.299, 0.587, 0.114])

BG, UNKNOWN, FG = 0, 1, 2


def to_grayscale(img) -> np.ndarray:
    """Rec.601 luma of an RGB image; grayscale input passes through unchanged."""
    img = check_image(img)
    if img.ndim == 2:
        return img
    return np.clip(img @ LUMA, 0.0, 1.0)


# -- matting -----------------------------------------------------------------

@dataclass
class Trimap:
    """Per-pixel labels: ``FG`` (2), ``BG`` (0) or ``UNKNOWN`` (1)."""

    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.labels.ndim != 2:
            raise ValueError("trimap must be 2-d")
        if not np.isin(self.labels, (BG, UNKNOWN, FG)).all():
            raise ValueError("trimap labels must be BG=0, UNKNOWN=1 or FG=2")

    @property
    def shape(self):
        return self.labels.shape

    @classmethod
    def from_bytes(cls, arr: np.ndarray) -> "Trimap":
        """255 → FG, 0 → BG, anything else → UNKNOWN."""
        arr = np.asarray(arr)
        labels = np.full(arr.shape, UNKNOWN, dtype=np.int8)
        labels[arr == 255] = FG
        labels[arr == 0] = BG
        return cls(labels)

    @classmethod
    def load(cls, path) -> "Trimap":
        img = load_pnm(path)
        if img.ndim != 2:
            raise ValueError(f"trimap {path} must be a PGM")
        return cls.from_bytes(np.round(img * 255).astype(np.int64))


@dataclass
class Matte:
    alpha: np.ndarray
    converged: bool = True
    iterations: int = 0


def solve_alpha_matte(trimap: Trimap, tol: float = 1e-6, max_iter: int = 20000) -> Matte:
    """Harmonic alpha on UNKNOWN pixels with FG=1 / BG=0 Dirichlet data.

    Solves the 4-neighbor discrete Laplace equation by red-black
    Gauss-Seidel sweeps until the largest update falls below ``tol``.
    Neighbors outside the image are ignored (reflecting border). If
    ``max_iter`` sweeps are reached the last iterate is returned with
    ``converged=False``.
    """
    labels = trimap.labels
    unknown = labels == UNKNOWN
    alpha = (labels == FG).astype(np.float64)
    if not unknown.any():
        return Matte(alpha, True, 0)
    if not (labels == FG).any() or not (labels == BG).any():
        raise ValueError("trimap with UNKNOWN pixels needs at least one FG and one BG pixel")

    h, w = labels.shape
    counts = np.zeros((h, w))
    counts[1:, :] += 1
    counts[:-1, :] += 1
    counts[:, 1:] += 1
    counts[:, :-1] += 1
    parity = np.add.outer(np.arange(h), np.arange(w)) % 2
    colors = [unknown & (parity == 0), unknown & (parity == 1)]
    alpha[unknown] = 0.5

    for it in range(1, max_iter + 1):
        worst = 0.0
        for mask in colors:
            nb = np.zeros((h, w))
            nb[1:, :] += alpha[:-1, :]
            nb[:-1, :] += alpha[1:, :]
            nb[:, 1:] += alpha[:, :-1]
            nb[:, :-1] += alpha[:, 1:]
            new = nb[mask] / counts[mask]
            if new.size:
                worst = max(worst, float(np.abs(new - alpha[mask]).max()))
            alpha[mask] = new
        if worst < tol:
            return Matte(alpha, True, it)
    logger.warning("matting did not converge in %d sweeps", max_iter)
    return Matte(alpha, False, max_iter)


def composite_foreground(img, matte: Matte) -> np.ndarray:
    """Blend the image over a black background: ``alpha * img``."""
    img = check_gray(img)
    alpha = matte.alpha if isinstance(matte, Matte) else np.asarray(matte, dtype=np.float64)
    check_same_shape(img, alpha, "image and matte")
    return np.clip(alpha * img, 0.0, 1.0)


# -- smoothing and noise -----------------------------------------------------

def gaussian_taps(sigma: float, radius: int | None = None) -> np.ndarray:
    """Normalized 1-D Gaussian taps of length ``2*radius + 1`` (radius defaults to ceil(3σ))."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return np.ones(1)
    r = int(math.ceil(3 * sigma)) if radius is None else int(radius)
    x = np.arange(-r, r + 1)
    taps = np.exp(-0.5 * (x / sigma) ** 2)
    return taps / taps.sum()


def separable_filter(img: np.ndarray, taps: np.ndarray, mode: str = "symmetric") -> np.ndarray:
    """Convolve rows then columns with symmetric ``taps``, extending borders by ``mode``."""
    r = len(taps) // 2
    if r == 0:
        return img * taps[0]
    padded = np.pad(img, ((0, 0), (r, r)), mode=mode)
    rows = sum(t * padded[:, k:k + img.shape[1]] for k, t in enumerate(taps))
    padded = np.pad(rows, ((r, r), (0, 0)), mode=mode)
    return sum(t * padded[k:k + img.shape[0], :] for k, t in enumerate(taps))


def gaussian_smooth(img, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with radius ceil(3σ).

    Borders are extended by half-sample mirroring, which repeats the edge
    pixel first and keeps the image mean unchanged.
    """
    img = check_gray(img)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return img.copy()
    out = separable_filter(img, gaussian_taps(sigma))
    return np.clip(out, img.min(), img.max())


def add_speckle_noise(img, intensity: float, seed: int) -> np.ndarray:
    """Multiplicative noise ``clip(img * (1 + intensity * n), 0, 1)``, ``n ~ N(0, 1)``."""
    img = check_gray(img)
    if intensity < 0:
        raise ValueError("noise intensity must be non-negative")
    if intensity == 0:
        return img.copy()
    n = SplitMix64(seed).normal(img.size).reshape(img.shape)
    return np.clip(img * (1.0 + intensity * n), 0.0, 1.0)


def resize_image(img, out_h: int, out_w: int) -> np.ndarray:
    """Align-corners bilinear resize of a gray or RGB image."""
    img = check_image(img)
    chw = img[None] if img.ndim == 2 else img.transpose(2, 0, 1)
    out = resize_bilinear(Tensor(chw), out_h, out_w).data
    return out[0] if img.ndim == 2 else out.transpose(1, 2, 0)


def prepare_content(img, trimap: Trimap | None = None, sigma: float = 1.0, target=(256, 256),
                    tol: float = 1e-6, max_iter: int = 20000) -> np.ndarray:
    """Grayscale → (matting + compositing) → smoothing → resize to ``target``."""
    gray = to_grayscale(img)
    if trimap is not None:
        if trimap.shape != gray.shape:
            raise ValueError(f"trimap shape {trimap.shape} != image shape {gray.shape}")
        matte = solve_alpha_matte(trimap, tol=tol, max_iter=max_iter)
        if not matte.alpha.any():
            warnings.warn("matte is zero everywhere; content image is black", stacklevel=2)
        gray = composite_foreground(gray, matte)
    smooth = gaussian_smooth(gray, sigma)
    return resize_image(smooth, int(target[0]), int(target[1]))


class ContentPreparer(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`prepare_content` for batches of images.

    ``transform`` accepts a list of images and an optional parallel list of
    trimaps (``None`` entries skip matting). When ``noise_intensity > 0``
    image ``i`` receives speckle noise seeded with ``seed + i``.
    """

    def __init__(self, sigma: float = 1.0, target_size: int = 256, noise_intensity: float = 0.0, seed: int = 0):
        self.sigma = sigma
        self.target_size = target_size
        self.noise_intensity = noise_intensity
        self.seed = seed

    def fit(self, X=None, y=None):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.target_size < 1:
            raise ValueError("target_size must be positive")
        return self

    def transform(self, X, trimaps=None):
        trimaps = [None] * len(X) if trimaps is None else list(trimaps)
        if len(trimaps) != len(X):
            raise ValueError("need one trimap slot per image")
        out = []
        for i, (img, tri) in enumerate(zip(X, trimaps)):
            prepared = prepare_content(img, tri, self.sigma, (self.target_size, self.target_size))
            if self.noise_intensity > 0:
                prepared = add_speckle_noise(prepared, self.noise_intensity, self.seed + i)
            out.append(prepared)
        return out
