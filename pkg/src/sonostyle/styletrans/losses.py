"""Training objective.

Features come from the model's own content encoder: the level list is the
embedded input (tokens + CAPE) followed by every encoder block output.

* content ``l_c``: MSE between the deepest features of output and content
* style ``l_s``: sum over levels of squared distances between channel-wise
  feature means and standard deviations of output and style
* identity ``l_id1``: pixel MSE of ``transfer(c, c)`` vs ``c`` plus
  ``transfer(s, s)`` vs ``s``
* identity ``l_id2``: feature MSE of the same two pairs, summed over levels

Nothing is detached, so the whole objective is differentiable with respect
to every parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..numcore import Tensor, sqrt
from .config import LossWeights

_STD_EPS = 1e-6


@dataclass
class LossBreakdown:
    content: Tensor
    style: Tensor
    id1: Tensor
    id2: Tensor
    total: Tensor
    weights: LossWeights

    def values(self) -> dict[str, float]:
        return {k: float(getattr(self, k).data) for k in ("total", "content", "style", "id1", "id2")}


def mse(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    diff = a - b
    return (diff * diff).mean()


def feature_stats(feat: Tensor) -> tuple[Tensor, Tensor]:
    """Channel-wise mean and ``sqrt(var + 1e-6)`` over the token axis of ``(N, d)`` features."""
    mu = feat.mean(axis=0)
    centered = feat - mu
    var = (centered * centered).mean(axis=0)
    return mu, sqrt(var + _STD_EPS)


def style_statistics_loss(levels_a, levels_b) -> Tensor:
    """``sum_l ||mu(A_l) - mu(B_l)||^2 + ||sigma(A_l) - sigma(B_l)||^2``."""
    if len(levels_a) != len(levels_b):
        raise ValueError("feature level counts differ")
    total = Tensor(0.0)
    for fa, fb in zip(levels_a, levels_b):
        mu_a, sd_a = feature_stats(fa)
        mu_b, sd_b = feature_stats(fb)
        dm, ds = mu_a - mu_b, sd_a - sd_b
        total = total + (dm * dm).sum() + (ds * ds).sum()
    return total


def _level_mse(levels_a, levels_b) -> Tensor:
    total = Tensor(0.0)
    for fa, fb in zip(levels_a, levels_b):
        total = total + mse(fa, fb)
    return total


def compute_losses(model, content, style, weights: LossWeights = LossWeights(), output=None) -> LossBreakdown:
    """Evaluate all four terms for one (content, style) pair.

    ``output`` defaults to ``model.forward(content, style)``; pass it to score
    an externally produced image.
    """
    c = content if isinstance(content, Tensor) else Tensor(content)
    s = style if isinstance(style, Tensor) else Tensor(style)
    if c.shape != s.shape:
        raise ValueError(f"content {c.shape} and style {s.shape} differ in size")
    feats_c = model.content_levels(c)
    feats_s = model.content_levels(s)
    code_s = model.style_code(s)
    if output is None:
        output = model.decode(feats_c[-1], code_s)
    out = output if isinstance(output, Tensor) else Tensor(output)
    feats_o = model.content_levels(out)

    l_c = mse(feats_o[-1], feats_c[-1])
    l_s = style_statistics_loss(feats_o, feats_s)

    cc = model.decode(feats_c[-1], model.style_code(c))
    ss = model.decode(feats_s[-1], code_s)
    l_id1 = mse(cc, c) + mse(ss, s)
    l_id2 = _level_mse(model.content_levels(cc), feats_c) + _level_mse(model.content_levels(ss), feats_s)

    w = weights
    total = l_c * w.content + l_s * w.style + l_id1 * w.id1 + l_id2 * w.id2
    return LossBreakdown(l_c, l_s, l_id1, l_id2, total, w)
