"""Transformer style-transfer network.

Content and style images are cut into p×p patches and linearly embedded.
Content tokens get a content-aware positional encoding (CAPE): the token
grid is average-pooled to s×s, passed through a learned per-channel linear
map and bilinearly interpolated back to the patch grid, so the encoding
depends on pooled content and relative position rather than absolute
scale. Style tokens get the fixed sinusoidal encoding, which carries no
structure of the style image. Each stream runs through its own pre-norm
self-attention encoder; a decoder mixes them with content tokens as
queries and style tokens as keys/values, and a convolutional pixel decoder
upsamples the result back to an image.

Parameters live in an insertion-ordered dict; that order is the
checkpoint record order:

    patch.w, patch.b, cape.w, cape.b,
    enc_c.{i}.*, enc_s.{i}.*        (ln1, attn.{wq,bq,wk,bk,wv,bv,wo,bo}, ln2, mlp.{w1,b1,w2,b2})
    dec.{i}.*                        (ln1, self.*, ln2, cross.*, ln3, mlp.*)
    pix.{i}.w, pix.{i}.b, pix.out.w, pix.out.b
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..numcore import (Tensor, avg_pool2d, conv2d, gelu, layer_norm, no_grad, resize_bilinear, sigmoid,
                       softmax, upsample_nearest)
from ..rng import SplitMix64
from .config import ModelConfig

_LN_EPS = 1e-5


@dataclass
class PatchSequence:
    tokens: Tensor
    grid: tuple

    def __post_init__(self):
        if self.tokens.shape[0] != self.grid[0] * self.grid[1]:
            raise ValueError(f"{self.tokens.shape[0]} tokens for grid {self.grid}")


# -- parameter construction ----------------------------------------------------

def _pixel_channels(cfg: ModelConfig) -> list[int]:
    n_stages = int(math.log2(cfg.patch_size))
    chans = [cfg.embed_dim]
    for _ in range(n_stages):
        chans.append(max(chans[-1] // 2, 8))
    return chans


def parameter_shapes(cfg: ModelConfig) -> list[tuple[str, tuple]]:
    d, p = cfg.embed_dim, cfg.patch_size
    hidden = cfg.MLP_RATIO * d
    shapes = [("patch.w", (d, 1, p, p)), ("patch.b", (d,)), ("cape.w", (d, d)), ("cape.b", (d,))]

    def attn(prefix):
        out = []
        for k in ("q", "k", "v", "o"):
            out += [(f"{prefix}.w{k}", (d, d)), (f"{prefix}.b{k}", (d,))]
        return out

    def ln(prefix):
        return [(f"{prefix}.g", (d,)), (f"{prefix}.b", (d,))]

    def mlp(prefix):
        return [(f"{prefix}.w1", (d, hidden)), (f"{prefix}.b1", (hidden,)),
                (f"{prefix}.w2", (hidden, d)), (f"{prefix}.b2", (d,))]

    for stream, layers in (("enc_c", cfg.enc_layers), ("enc_s", cfg.enc_layers)):
        for i in range(layers):
            pre = f"{stream}.{i}"
            shapes += ln(f"{pre}.ln1") + attn(f"{pre}.attn") + ln(f"{pre}.ln2") + mlp(f"{pre}.mlp")
    for i in range(cfg.dec_layers):
        pre = f"dec.{i}"
        shapes += (ln(f"{pre}.ln1") + attn(f"{pre}.self") + ln(f"{pre}.ln2") + attn(f"{pre}.cross")
                   + ln(f"{pre}.ln3") + mlp(f"{pre}.mlp"))
    chans = _pixel_channels(cfg)
    for i in range(len(chans) - 1):
        shapes += [(f"pix.{i}.w", (chans[i + 1], chans[i], 3, 3)), (f"pix.{i}.b", (chans[i + 1],))]
    shapes += [("pix.out.w", (1, chans[-1], 3, 3)), ("pix.out.b", (1,))]
    return shapes


def _fan_in(name: str, shape: tuple) -> int:
    if len(shape) == 4:
        return shape[1] * shape[2] * shape[3]
    return shape[0]


def init_parameters(cfg: ModelConfig, rng: SplitMix64) -> dict[str, Tensor]:
    """Uniform(±1/sqrt(fan_in)) weights, zero biases, unit LayerNorm gains, identity CAPE map."""
    params = {}
    for name, shape in parameter_shapes(cfg):
        leaf = name.rsplit(".", 1)[-1]
        if name == "cape.w":
            data = np.eye(shape[0])
        elif len(shape) == 1:
            is_gain = leaf == "g"
            data = np.ones(shape) if is_gain else np.zeros(shape)
        else:
            bound = 1.0 / math.sqrt(_fan_in(name, shape))
            data = rng.uniform(int(np.prod(shape)), -bound, bound).reshape(shape)
        params[name] = Tensor(data, requires_grad=True)
    return params


# -- building blocks -------------------------------------------------------------

def patch_embed(img, params, cfg: ModelConfig) -> PatchSequence:
    """Strided p×p convolution (1 → d channels), flattened in raster order."""
    x = img if isinstance(img, Tensor) else Tensor(np.asarray(img, dtype=np.float64))
    if x.ndim == 2:
        x = x.reshape(1, *x.shape)
    _, h, w = x.shape
    p = cfg.patch_size
    if h % p or w % p:
        raise ValueError(f"image {h}×{w} not divisible by patch size {p}")
    feat = conv2d(x, params["patch.w"], params["patch.b"], stride=p)
    d, hp, wp = feat.shape
    return PatchSequence(feat.reshape(d, hp * wp).transpose(1, 0), (hp, wp))


def _tokens_to_map(tokens: Tensor, grid: tuple) -> Tensor:
    n, d = tokens.shape
    return tokens.transpose(1, 0).reshape(d, grid[0], grid[1])


def _map_to_tokens(fmap: Tensor) -> Tensor:
    d, h, w = fmap.shape
    return fmap.reshape(d, h * w).transpose(1, 0)


def cape(seq: PatchSequence, params, cfg: ModelConfig) -> Tensor:
    """Content-aware positional encoding for a content token grid.

    Pool to ``cape_grid``², apply the learned channel map, interpolate back
    (align-corners bilinear) to the token grid.
    """
    hp, wp = seq.grid
    s = cfg.cape_grid
    if hp != wp or hp % s:
        raise ValueError(f"token grid {seq.grid} must be square and divisible by CAPE grid {s}")
    fmap = _tokens_to_map(seq.tokens, seq.grid)
    k = hp // s
    pooled = fmap if k == 1 else avg_pool2d(fmap, k)
    mapped = _map_to_tokens(pooled) @ params["cape.w"] + params["cape.b"]
    up = resize_bilinear(_tokens_to_map(mapped, pooled.shape[1:]), hp, wp)
    return _map_to_tokens(up)


def sinusoidal_pe(n_tokens: int, d: int) -> np.ndarray:
    """``PE[pos, 2i] = sin(pos / 10000^(2i/d))``, ``PE[pos, 2i+1] = cos(...)``."""
    if d % 2:
        raise ValueError("sinusoidal encoding needs an even dimension")
    pos = np.arange(n_tokens)[:, None]
    freq = 10000.0 ** (np.arange(0, d, 2) / d)
    pe = np.empty((n_tokens, d))
    pe[:, 0::2] = np.sin(pos / freq)
    pe[:, 1::2] = np.cos(pos / freq)
    return pe


def attention(xq: Tensor, xkv: Tensor, params, prefix: str, heads: int, return_probs: bool = False):
    """Multi-head scaled dot-product attention with output projection.

    Scores are scaled by 1/sqrt(d/heads). ``xq`` is ``(N, d)``, ``xkv`` is
    ``(M, d)``; the result is ``(N, d)``.
    """
    n, d = xq.shape
    m = xkv.shape[0]
    if xkv.shape[1] != d:
        raise ValueError(f"query dim {d} != key/value dim {xkv.shape[1]}")
    dh = d // heads
    q = (xq @ params[f"{prefix}.wq"] + params[f"{prefix}.bq"]).reshape(n, heads, dh).transpose(1, 0, 2)
    k = (xkv @ params[f"{prefix}.wk"] + params[f"{prefix}.bk"]).reshape(m, heads, dh).transpose(1, 0, 2)
    v = (xkv @ params[f"{prefix}.wv"] + params[f"{prefix}.bv"]).reshape(m, heads, dh).transpose(1, 0, 2)
    probs = softmax((q @ k.transpose(0, 2, 1)) * (1.0 / math.sqrt(dh)), axis=-1)
    ctx = (probs @ v).transpose(1, 0, 2).reshape(n, d)
    out = ctx @ params[f"{prefix}.wo"] + params[f"{prefix}.bo"]
    return (out, probs) if return_probs else out


def _ln(x: Tensor, params, prefix: str) -> Tensor:
    return layer_norm(x, params[f"{prefix}.g"], params[f"{prefix}.b"], _LN_EPS)


def _mlp(x: Tensor, params, prefix: str) -> Tensor:
    hidden = gelu(x @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"])
    return hidden @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"]


def _check_finite(x: Tensor, where: str) -> Tensor:
    if not np.all(np.isfinite(x.data)):
        raise FloatingPointError(f"non-finite activations after {where}")
    return x


def encoder_forward(x: Tensor, params, stream: str, layers: int, heads: int, return_levels: bool = False):
    """Pre-norm self-attention + MLP blocks with residuals; shape-preserving.

    With ``return_levels`` the input and every block output are returned
    (these are the feature levels used by the losses).
    """
    levels = [x]
    for i in range(layers):
        pre = f"{stream}.{i}"
        h = _ln(x, params, f"{pre}.ln1")
        x = x + attention(h, h, params, f"{pre}.attn", heads)
        x = x + _mlp(_ln(x, params, f"{pre}.ln2"), params, f"{pre}.mlp")
        levels.append(_check_finite(x, f"{pre}"))
    return levels if return_levels else x


def decoder_forward(content: Tensor, style: Tensor, params, layers: int, heads: int) -> Tensor:
    """Self-attention over content, cross-attention content→style, MLP; pre-norm residual."""
    if content.shape[1] != style.shape[1]:
        raise ValueError(f"content dim {content.shape[1]} != style dim {style.shape[1]}")
    x = content
    for i in range(layers):
        pre = f"dec.{i}"
        h = _ln(x, params, f"{pre}.ln1")
        x = x + attention(h, h, params, f"{pre}.self", heads)
        x = x + attention(_ln(x, params, f"{pre}.ln2"), style, params, f"{pre}.cross", heads)
        x = x + _mlp(_ln(x, params, f"{pre}.ln3"), params, f"{pre}.mlp")
        _check_finite(x, pre)
    return x


def pixel_decode(seq: PatchSequence, params, cfg: ModelConfig) -> Tensor:
    """Tokens → feature map → log2(p) × (2× nearest upsample, 3×3 conv, GELU) → 3×3 conv → sigmoid."""
    p = cfg.patch_size
    if p & (p - 1):
        raise ValueError(f"patch size {p} must be a power of 2")
    x = _tokens_to_map(seq.tokens, seq.grid)
    for i in range(int(math.log2(p))):
        x = upsample_nearest(x, 2)
        x = gelu(conv2d(x, params[f"pix.{i}.w"], params[f"pix.{i}.b"], padding=1, pad_mode="replicate"))
    x = conv2d(x, params["pix.out.w"], params["pix.out.b"], padding=1, pad_mode="replicate")
    return sigmoid(x).reshape(x.shape[1], x.shape[2])


# -- model -------------------------------------------------------------------------

class StyleTransferModel:
    """Named parameters plus configuration; the trained artifact."""

    def __init__(self, config: ModelConfig, params: dict[str, Tensor]):
        expected = parameter_shapes(config)
        if [n for n, _ in expected] != list(params):
            raise ValueError("parameter names do not match the configuration")
        for name, shape in expected:
            if params[name].shape != shape:
                raise ValueError(f"parameter {name} has shape {params[name].shape}, expected {shape}")
        self.config = config
        self.params = params

    @classmethod
    def initialize(cls, config: ModelConfig, rng: SplitMix64 | int = 0) -> "StyleTransferModel":
        rng = rng if isinstance(rng, SplitMix64) else SplitMix64(rng)
        return cls(config, init_parameters(config, rng))

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def _check_image(self, img, what: str) -> Tensor:
        x = img if isinstance(img, Tensor) else Tensor(np.asarray(img, dtype=np.float64))
        side = self.config.image_size
        if x.shape != (side, side):
            raise ValueError(f"{what} image must be {side}×{side} grayscale, got {x.shape}")
        return x

    def content_levels(self, img) -> list:
        """Patch-embed + CAPE, then the content encoder; input and every block output."""
        seq = patch_embed(self._check_image(img, "content"), self.params, self.config)
        x = seq.tokens + cape(seq, self.params, self.config)
        return encoder_forward(x, self.params, "enc_c", self.config.enc_layers, self.config.heads,
                               return_levels=True)

    def style_code(self, img) -> Tensor:
        seq = patch_embed(self._check_image(img, "style"), self.params, self.config)
        x = seq.tokens + sinusoidal_pe(seq.tokens.shape[0], self.config.embed_dim)
        return encoder_forward(x, self.params, "enc_s", self.config.enc_layers, self.config.heads)

    def decode(self, content_code: Tensor, style_code: Tensor) -> Tensor:
        cfg = self.config
        mixed = decoder_forward(content_code, style_code, self.params, cfg.dec_layers, cfg.heads)
        return pixel_decode(PatchSequence(mixed, (cfg.grid, cfg.grid)), self.params, cfg)

    def forward(self, content, style) -> Tensor:
        return self.decode(self.content_levels(content)[-1], self.style_code(style))

    def transfer(self, content, style) -> np.ndarray:
        """Stylize ``content`` with ``style``; returns a gray image in [0, 1]."""
        with no_grad():
            return self.forward(content, style).data.copy()


def transfer(content, style, model: StyleTransferModel) -> np.ndarray:
    return model.transfer(content, style)
