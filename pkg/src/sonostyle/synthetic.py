"""Deterministic synthetic corpora for desk-scale experiments and tests.

* ``fish_image``: a smooth bright ellipse with a tail and stripes on a black
  background, standing in for a matted optical fish photo
* ``sonar_image``: Rayleigh-like speckle over a range-dependent backdrop with
  a few bright arcs, standing in for an acoustic-camera frame
* ``natural_image``: 1/f amplitude-spectrum noise, a standard proxy for
  natural-scene statistics (NIQE/BRISQUE pristine data)

All generators draw from :class:`~sonostyle.rng.SplitMix64`, so a seed fully
determines the output on every platform.
"""

from __future__ import annotations

import numpy as np

from .preprocess import gaussian_smooth
from .rng import SplitMix64


def fish_image(seed: int, side: int = 32) -> np.ndarray:
    rng = SplitMix64(seed)
    cx, cy, length, width, angle, brightness, n_stripes = rng.uniform(7, 0, 1)
    cx, cy = 0.4 + 0.2 * cx, 0.4 + 0.2 * cy
    a, b = 0.25 + 0.1 * length, 0.1 + 0.06 * width
    theta = np.pi * (angle - 0.5) * 0.5
    y, x = (np.mgrid[0:side, 0:side] + 0.5) / side
    u = (x - cx) * np.cos(theta) + (y - cy) * np.sin(theta)
    v = -(x - cx) * np.sin(theta) + (y - cy) * np.cos(theta)
    body = (u / a) ** 2 + (v / b) ** 2 <= 1
    tail = (u < -a * 0.8) & (u > -a * 1.3) & (np.abs(v) <= (-a * 0.8 - u) * 0.9)
    stripes = 0.8 + 0.2 * np.cos(2 * np.pi * (3 + 3 * n_stripes) * u)
    img = np.where(body | tail, (0.55 + 0.35 * brightness) * stripes, 0.0)
    return np.clip(gaussian_smooth(img, 0.7), 0.0, 1.0)


def sonar_image(seed: int, side: int = 32) -> np.ndarray:
    rng = SplitMix64(seed)
    level, slope, n_arcs = rng.uniform(3, 0, 1)
    y, x = (np.mgrid[0:side, 0:side] + 0.5) / side
    backdrop = 0.15 + 0.15 * level + 0.1 * slope * y
    for k in range(1 + int(3 * n_arcs)):
        r0, thick, gain = rng.uniform(3, 0, 1)
        radius = np.hypot(x - 0.5, y + 0.2)
        backdrop = backdrop + (0.3 + 0.3 * gain) * np.exp(-0.5 * ((radius - 0.4 - 0.6 * r0) / (0.01 + 0.02 * thick)) ** 2)
    re, im = rng.normal(2 * side * side).reshape(2, side, side)
    speckle = np.hypot(re, im) / np.sqrt(np.pi / 2) * 0.5 + 0.5
    return np.clip(backdrop * speckle, 0.0, 1.0)


def natural_image(seed: int, side: int = 256, exponent: float = 1.0) -> np.ndarray:
    """Gray image with a ``1/f^exponent`` amplitude spectrum, rescaled to [0.05, 0.95]."""
    rng = SplitMix64(seed)
    noise = rng.normal(side * side).reshape(side, side)
    fy = np.fft.fftfreq(side)[:, None]
    fx = np.fft.rfftfreq(side)[None, :]
    f = np.hypot(fy, fx)
    f[0, 0] = 1.0
    spectrum = np.fft.rfft2(noise) / f ** exponent
    spectrum[0, 0] = 0.0
    img = np.fft.irfft2(spectrum, s=(side, side))
    lo, hi = img.min(), img.max()
    return 0.05 + 0.9 * (img - lo) / (hi - lo)


def desk_corpus(n: int = 8, side: int = 32, seed: int = 0) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """``n`` fish content images and ``n`` sonar style images."""
    contents = [fish_image(seed * 1000 + i, side) for i in range(n)]
    styles = [sonar_image(seed * 1000 + 500 + i, side) for i in range(n)]
    return contents, styles
