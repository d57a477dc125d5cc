from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..numcore import OptimState, Tensor, adam_step, backward
from ..rng import SplitMix64
from .config import ModelConfig, TrainHyper
from .losses import compute_losses
from .model import StyleTransferModel

logger = logging.getLogger(__name__)


@dataclass
class TrainRun:
    """Outcome of :func:`train`; ``history`` holds one loss dict per iteration."""

    seed: int
    iterations: int
    model: StyleTransferModel
    history: list = field(default_factory=list)

    def totals(self) -> np.ndarray:
        return np.array([h["total"] for h in self.history])


def _as_images(images, side: int, what: str) -> list[np.ndarray]:
    out = []
    for i, img in enumerate(images):
        arr = np.asarray(img, dtype=np.float64)
        if arr.shape != (side, side):
            raise ValueError(f"{what} image {i} has shape {arr.shape}, expected ({side}, {side})")
        out.append(arr)
    if not out:
        raise ValueError(f"empty {what} set")
    return out


def train(contents, styles, config: ModelConfig = ModelConfig(), hyper: TrainHyper = TrainHyper(),
          seed: int = 0, callback: Callable | None = None) -> TrainRun:
    """Fit a style-transfer model with Adam, one (content, style) pair per step.

    Parameters
    ----------
    contents, styles : sequences of gray images at ``config.image_size``
    config, hyper : architecture and optimization settings
    seed : drives parameter init and then pair sampling from one SplitMix64
        stream, so a seed fully determines the run
    callback : optional ``callback(iteration, model, losses)`` called after
        each update (iterations count from 1)

    The returned parameters are rounded to float32, the checkpoint precision.

    Raises
    ------
    FloatingPointError
        If a loss is non-finite; the message carries the iteration index.
    """
    contents = _as_images(contents, config.image_size, "content")
    styles = _as_images(styles, config.image_size, "style")
    rng = SplitMix64(seed)
    model = StyleTransferModel.initialize(config, rng)
    state = OptimState(lr=hyper.lr)
    run = TrainRun(seed, hyper.iterations, model)

    for it in range(1, hyper.iterations + 1):
        ci, si = rng.randint(len(contents)), rng.randint(len(styles))
        for p in model.params.values():
            p.zero_grad()
        try:
            losses = compute_losses(model, Tensor(contents[ci]), Tensor(styles[si]), hyper.weights)
        except FloatingPointError as exc:
            raise FloatingPointError(f"iteration {it}: {exc}") from exc
        values = losses.values()
        if not np.isfinite(values["total"]):
            raise FloatingPointError(f"iteration {it}: non-finite loss {values['total']}")
        backward(losses.total)
        adam_step(model.params, state)
        run.history.append(values)
        if it == 1 or it % 50 == 0:
            logger.info("iter %d total %.5f", it, values["total"])
        if callback is not None:
            callback(it, model, values)
    # snap to checkpoint precision so the in-memory and reloaded models agree bit-exactly
    for p in model.params.values():
        p.data = p.data.astype(np.float32).astype(np.float64)
    return run
