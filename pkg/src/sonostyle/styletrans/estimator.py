from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .checkpoint import load_checkpoint, save_checkpoint
from .config import LossWeights, ModelConfig, TrainHyper
from .train import train


class StyleTransfer(BaseEstimator):
    """Estimator facade: ``fit(contents, styles)`` then ``transform(contents, style)``.

    Attributes set by ``fit``: ``model_`` and ``history_`` (per-iteration
    loss dicts).
    """

    def __init__(self, patch_size: int = 4, embed_dim: int = 64, heads: int = 4, enc_layers: int = 2,
                 dec_layers: int = 2, cape_grid: int = 4, image_size: int = 32, lr: float = 2e-3,
                 iterations: int = 300, content_weight: float = 1.0, style_weight: float = 10.0,
                 id1_weight: float = 50.0, id2_weight: float = 1.0, seed: int = 0):
        self.patch_size = patch_size
        self.embed_dim = embed_dim
        self.heads = heads
        self.enc_layers = enc_layers
        self.dec_layers = dec_layers
        self.cape_grid = cape_grid
        self.image_size = image_size
        self.lr = lr
        self.iterations = iterations
        self.content_weight = content_weight
        self.style_weight = style_weight
        self.id1_weight = id1_weight
        self.id2_weight = id2_weight
        self.seed = seed

    def _config(self) -> ModelConfig:
        return ModelConfig(self.patch_size, self.embed_dim, self.heads, self.enc_layers, self.dec_layers,
                           self.cape_grid, self.image_size)

    def _hyper(self) -> TrainHyper:
        w = LossWeights(self.content_weight, self.style_weight, self.id1_weight, self.id2_weight)
        return TrainHyper(lr=self.lr, iterations=self.iterations, weights=w)

    def fit(self, contents, styles, callback=None):
        run = train(contents, styles, self._config(), self._hyper(), self.seed, callback)
        self.model_ = run.model
        self.history_ = run.history
        return self

    def transform(self, contents, style) -> list[np.ndarray]:
        """Stylize every content image with one style image."""
        check_is_fitted(self, "model_")
        return [self.model_.transfer(c, style) for c in contents]

    def save(self, path) -> None:
        check_is_fitted(self, "model_")
        save_checkpoint(self.model_, path)

    @classmethod
    def load(cls, path) -> "StyleTransfer":
        model = load_checkpoint(path)
        est = cls(**model.config.as_dict())
        est.model_ = model
        est.history_ = []
        return est
