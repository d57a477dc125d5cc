"""Transformer style transfer with content-aware positional encoding."""

from .checkpoint import MAGIC, load_checkpoint, save_checkpoint
from .config import LossWeights, ModelConfig, TrainHyper
from .estimator import StyleTransfer
from .losses import LossBreakdown, compute_losses, feature_stats, mse, style_statistics_loss
from .model import (PatchSequence, StyleTransferModel, attention, cape, decoder_forward, encoder_forward,
                    init_parameters, parameter_shapes, patch_embed, pixel_decode, sinusoidal_pe, transfer)
from .train import TrainRun, train

__all__ = [
    "MAGIC", "LossBreakdown", "LossWeights", "ModelConfig", "PatchSequence", "StyleTransfer",
    "StyleTransferModel", "TrainHyper", "TrainRun", "attention", "cape", "compute_losses", "decoder_forward",
    "encoder_forward", "feature_stats", "init_parameters", "load_checkpoint", "mse", "parameter_shapes",
    "patch_embed", "pixel_decode", "save_checkpoint", "sinusoidal_pe", "style_statistics_loss", "train",
    "transfer",
]
