"""No-reference image quality: MSCN statistics, NIQE and a BRISQUE-style regressor."""

from .brisque import BLUR_LADDER, SPECKLE_LADDER, BrisqueScorer, QualityRegressor, distortion_ladder
from .external import load_external_scores
from .niqe import NiqeModel, block_features, niqe_distance
from .nss import (AggdParams, GgdParams, MscnField, fit_aggd, fit_ggd, invert_shape, mscn, nss_features,
                  pair_products, scale_features)

__all__ = [
    "AggdParams", "BLUR_LADDER", "BrisqueScorer", "GgdParams", "MscnField", "NiqeModel", "QualityRegressor",
    "SPECKLE_LADDER", "block_features", "distortion_ladder", "fit_aggd", "fit_ggd", "invert_shape",
    "load_external_scores", "mscn", "niqe_distance", "nss_features", "pair_products", "scale_features",
]
