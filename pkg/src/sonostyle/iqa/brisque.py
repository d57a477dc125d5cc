"""NSS features mapped to a distortion-severity score by ridge regression.

The regressor is trained on a synthetic distortion ladder built from
user-supplied pristine images: every combination of Gaussian blur
``BLUR_LADDER`` and speckle ``SPECKLE_LADDER`` is applied and labelled with
severity ``(i_blur / 4 + i_speckle / 3) / 2`` (its normalized rank), so
lower scores mean better quality.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..preprocess import add_speckle_noise, gaussian_smooth
from ..records import RecordFileError, read_records, write_records
from .niqe import KIND_REGRESSOR, MAGIC
from .nss import N_FEATURES, nss_features

BLUR_LADDER = (0.0, 0.5, 1.0, 2.0, 4.0)
SPECKLE_LADDER = (0.0, 0.05, 0.1, 0.2)


class QualityRegressor(RegressorMixin, BaseEstimator):
    """Closed-form ridge regression on standardized features.

    ``w = (Z^T Z + n * alpha * I)^-1 Z^T (y - mean(y))`` with ``b = mean(y)``,
    where ``Z`` holds z-scored features. Scaling the penalty by the sample
    count ``n`` makes a duplicated dataset yield the identical regressor.
    Features with zero spread get unit scale.
    """

    def __init__(self, alpha: float = 1e-3):
        self.alpha = alpha

    def fit(self, X, y):
        if self.alpha <= 0:
            raise ValueError("ridge penalty alpha must be positive")
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or len(X) != len(y):
            raise ValueError("X must be (n, k) with one target per row")
        if len(X) < X.shape[1]:
            raise ValueError(f"need at least {X.shape[1]} samples, got {len(X)}")
        if np.unique(y).size < 2:
            raise ValueError("severities must take at least two distinct values")
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        Z = (X - mean) / scale
        n, k = Z.shape
        self.mean_, self.scale_ = mean, scale
        self.intercept_ = float(y.mean())
        self.coef_ = np.linalg.solve(Z.T @ Z + n * self.alpha * np.eye(k), Z.T @ (y - self.intercept_))
        return self

    @property
    def raw_coef_(self) -> np.ndarray:
        """Weights on unstandardized features."""
        return self.coef_ / self.scale_

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = np.asarray(X, dtype=np.float64)
        return ((X - self.mean_) / self.scale_) @ self.coef_ + self.intercept_

    def _snap(self) -> None:
        for name in ("mean_", "scale_", "coef_"):
            setattr(self, name, getattr(self, name).astype(np.float32).astype(np.float64))
        self.intercept_ = float(np.float32(self.intercept_))

    def save(self, path) -> None:
        check_is_fitted(self, "coef_")
        records = [("alpha", np.array([self.alpha])), ("mean", self.mean_), ("scale", self.scale_),
                   ("coef", self.coef_), ("intercept", np.array([self.intercept_]))]
        write_records(path, MAGIC, [KIND_REGRESSOR, len(self.coef_)], records)

    @classmethod
    def load(cls, path) -> "QualityRegressor":
        (kind, _), records = read_records(path, MAGIC, 2)
        if kind != KIND_REGRESSOR:
            raise RecordFileError(f"{path} does not hold a quality regressor")
        rec = dict(records)
        reg = cls(alpha=float(np.float32(rec["alpha"][0])))
        reg.mean_, reg.scale_, reg.coef_ = rec["mean"], rec["scale"], rec["coef"]
        reg.intercept_ = float(rec["intercept"][0])
        return reg


def distortion_ladder(img, seed: int = 0):
    """Yield ``(distorted image, severity)`` for every blur × speckle level."""
    nb, ns = len(BLUR_LADDER) - 1, len(SPECKLE_LADDER) - 1
    for bi, blur in enumerate(BLUR_LADDER):
        smooth = gaussian_smooth(img, blur)
        for si, speck in enumerate(SPECKLE_LADDER):
            noisy = add_speckle_noise(smooth, speck, seed + bi * len(SPECKLE_LADDER) + si)
            yield noisy, (bi / nb + si / ns) / 2


class BrisqueScorer(BaseEstimator):
    """Fit a :class:`QualityRegressor` on a synthetic ladder, then score images.

    ``fit(pristine)`` distorts every pristine image along the ladder; image
    ``i`` uses speckle seeds starting at ``seed + 100 * i``.
    """

    def __init__(self, alpha: float = 1e-3, seed: int = 0):
        self.alpha = alpha
        self.seed = seed

    def fit(self, X, y=None):
        feats, sev = [], []
        for i, img in enumerate(X):
            for distorted, s in distortion_ladder(img, self.seed + 100 * i):
                feats.append(nss_features(distorted))
                sev.append(s)
        self.regressor_ = QualityRegressor(self.alpha).fit(np.array(feats), np.array(sev))
        self.regressor_._snap()
        self.train_features_ = np.array(feats)
        self.train_severity_ = np.array(sev)
        return self

    @classmethod
    def from_regressor(cls, regressor: QualityRegressor) -> "BrisqueScorer":
        scorer = cls(alpha=regressor.alpha)
        scorer.regressor_ = regressor
        return scorer

    def score(self, img) -> float:
        check_is_fitted(self, "regressor_")
        return float(self.regressor_.predict(nss_features(img)[None, :])[0])

    def score_samples(self, X) -> np.ndarray:
        return np.array([self.score(img) for img in X])


__all__ = ["BLUR_LADDER", "SPECKLE_LADDER", "N_FEATURES", "BrisqueScorer", "QualityRegressor",
           "distortion_ladder"]
