"""Opinion-free quality score: distance to a pristine feature Gaussian."""

from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..records import RecordFileError, read_records, write_records
from ..validation import check_gray
from .nss import N_FEATURES, half_scale, mscn, scale_features

logger = logging.getLogger(__name__)

MAGIC = b"UWIQA\x00\x00\x01"
KIND_NIQE = 1
KIND_REGRESSOR = 2


def block_features(img, patch: int, quantile: float) -> np.ndarray:
    """Features of the sharpest ``patch``×``patch`` blocks of one image.

    The image is cropped to a multiple of ``patch``. A block is kept when its
    mean local deviation (MSCN sigma field) is at least the ``quantile`` of
    all blocks in the image and positive. Half-scale features come from the
    co-located ``patch/2`` block of the downsampled image. Returns
    ``(n_kept, 36)``; blocks whose statistics are degenerate are dropped.
    """
    img = check_gray(img)
    if patch < 4 or patch % 2:
        raise ValueError("patch must be an even integer ≥ 4")
    rows, cols = img.shape[0] // patch, img.shape[1] // patch
    if rows == 0 or cols == 0:
        raise ValueError(f"image {img.shape} smaller than one {patch}×{patch} block")
    img = img[:rows * patch, :cols * patch]
    full = mscn(img)
    half = mscn(half_scale(img)).coef
    sharp = full.sigma.reshape(rows, patch, cols, patch).mean(axis=(1, 3))
    threshold = np.quantile(sharp, quantile)
    q = patch // 2
    min_samples = (q - 1) * (q - 1)
    feats = []
    for r, c in zip(*np.nonzero((sharp >= threshold) & (sharp > 0))):
        b1 = full.coef[r * patch:(r + 1) * patch, c * patch:(c + 1) * patch]
        b2 = half[r * q:(r + 1) * q, c * q:(c + 1) * q]
        try:
            feats.append(scale_features(b1, min_samples, True) + scale_features(b2, min_samples, True))
        except ValueError:
            continue
    return np.array(feats).reshape(-1, N_FEATURES)


def _gaussian(feats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = feats.mean(axis=0)
    cov = np.cov(feats, rowvar=False) if len(feats) > 1 else np.zeros((N_FEATURES, N_FEATURES))
    return mean, (cov + cov.T) / 2


def niqe_distance(mean1, cov1, mean2, cov2) -> float:
    """``sqrt(d^T ((S1 + S2)/2 + r I)^-1 d)`` with ridge ``r = 1e-6 trace / 36``."""
    d = np.asarray(mean1) - np.asarray(mean2)
    if not d.any():
        return 0.0
    pooled = (np.asarray(cov1) + np.asarray(cov2)) / 2
    pooled = pooled + 1e-6 * np.trace(pooled) / N_FEATURES * np.eye(N_FEATURES)
    try:
        sol = np.linalg.solve(pooled, d)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular pooled covariance") from exc
    return float(np.sqrt(max(d @ sol, 0.0)))


class NiqeModel(BaseEstimator):
    """Pristine multivariate Gaussian of block NSS features.

    Parameters
    ----------
    patch : int
        Block side in pixels (16 suits 256×256 images).
    sharpness_quantile : float
        Blocks at or above this quantile of per-image sharpness are kept.

    Attributes
    ----------
    mean_ : (36,) pristine feature mean
    cov_ : (36, 36) pristine feature covariance
    n_blocks_ : number of blocks the model was fit on

    Fitted values are rounded to float32 so a saved and reloaded model
    scores identically.
    """

    def __init__(self, patch: int = 16, sharpness_quantile: float = 0.75):
        self.patch = patch
        self.sharpness_quantile = sharpness_quantile

    def _check_params(self):
        if not 0 <= self.sharpness_quantile <= 1:
            raise ValueError("sharpness_quantile must lie in [0, 1]")

    def fit(self, X, y=None):
        self._check_params()
        if len(X) < 10:
            raise ValueError(f"need at least 10 pristine images, got {len(X)}")
        feats = np.vstack([block_features(img, self.patch, self.sharpness_quantile) for img in X])
        if len(feats) < N_FEATURES:
            raise ValueError(f"insufficient pristine data: {len(feats)} blocks kept, need {N_FEATURES}")
        mean, cov = _gaussian(feats)
        self.mean_ = mean.astype(np.float32).astype(np.float64)
        self.cov_ = cov.astype(np.float32).astype(np.float64)
        self.n_blocks_ = len(feats)
        logger.info("NIQE model fit on %d blocks from %d images", len(feats), len(X))
        return self

    def score(self, img) -> float:
        """NIQE of one image (≥ 0, lower is better)."""
        check_is_fitted(self, "mean_")
        feats = block_features(img, self.patch, self.sharpness_quantile)
        if len(feats) == 0:
            raise ValueError("no usable blocks in test image")
        mean, cov = _gaussian(feats)
        return niqe_distance(self.mean_, self.cov_, mean, cov)

    def score_samples(self, X) -> np.ndarray:
        return np.array([self.score(img) for img in X])

    def save(self, path) -> None:
        check_is_fitted(self, "mean_")
        records = [("sharpness_quantile", np.array([self.sharpness_quantile])), ("mean", self.mean_),
                   ("cov", self.cov_)]
        write_records(path, MAGIC, [KIND_NIQE, self.patch, self.n_blocks_], records)

    @classmethod
    def load(cls, path) -> "NiqeModel":
        (kind, patch, n_blocks), records = read_records(path, MAGIC, 3)
        if kind != KIND_NIQE:
            raise RecordFileError(f"{path} does not hold a NIQE model")
        rec = dict(records)
        model = cls(patch=patch, sharpness_quantile=float(np.float32(rec["sharpness_quantile"][0])))
        model.mean_, model.cov_, model.n_blocks_ = rec["mean"], rec["cov"], n_blocks
        return model
