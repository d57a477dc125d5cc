"""Input validation for image arrays.

Images are plain numpy arrays: ``(H, W)`` for grayscale or ``(H, W, 3)``
for RGB, float64 values in ``[0, 1]``.
"""

from __future__ import annotations

import numpy as np


def check_image(img, *, name: str = "image", allow_rgb: bool = True, copy: bool = False,
                bounded: bool = True) -> np.ndarray:
    """Validate and return ``img`` as a float64 array, in [0, 1] unless ``bounded=False``."""
    arr = np.array(img, dtype=np.float64, copy=copy) if copy else np.asarray(img, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 3:
        if not allow_rgb:
            raise ValueError(f"{name} must be single-channel, got shape {arr.shape}")
        if arr.shape[2] != 3:
            raise ValueError(f"{name} must have 1 or 3 channels, got shape {arr.shape}")
    elif arr.ndim != 2:
        raise ValueError(f"{name} must be (H, W) or (H, W, 3), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if bounded and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def check_gray(img, *, name: str = "image") -> np.ndarray:
    return check_image(img, name=name, allow_rgb=False)


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ValueError(f"{what} differ in size: {a.shape[:2]} vs {b.shape[:2]}")
