from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters.

    ``cape_grid`` is the side of the pooled grid CAPE works on; the patch
    grid side (``image_size // patch_size``) must be a multiple of it.
    """

    patch_size: int = 4
    embed_dim: int = 64
    heads: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    cape_grid: int = 4
    image_size: int = 32

    MLP_RATIO = 2

    def __post_init__(self):
        p, d, s = self.patch_size, self.embed_dim, self.cape_grid
        if min(p, d, self.heads, s, self.image_size) < 1 or min(self.enc_layers, self.dec_layers) < 0:
            raise ValueError(f"invalid model config {self}")
        if p & (p - 1):
            raise ValueError(f"patch size {p} must be a power of 2")
        if d % self.heads:
            raise ValueError(f"embed dim {d} not divisible by {self.heads} heads")
        if d % 2:
            raise ValueError("embed dim must be even for sinusoidal encoding")
        if self.image_size % p:
            raise ValueError(f"image size {self.image_size} not divisible by patch size {p}")
        if self.grid % s:
            raise ValueError(f"patch grid {self.grid} not divisible by CAPE grid {s}")

    @property
    def grid(self) -> int:
        return self.image_size // self.patch_size

    @property
    def n_tokens(self) -> int:
        return self.grid * self.grid

    def header(self) -> list[int]:
        return [self.patch_size, self.embed_dim, self.heads, self.enc_layers, self.dec_layers,
                self.cape_grid, self.image_size]

    @classmethod
    def from_header(cls, fields) -> "ModelConfig":
        p, d, h, le, ld, s, side = fields
        return cls(p, d, h, le, ld, s, side)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LossWeights:
    content: float = 1.0
    style: float = 10.0
    id1: float = 50.0
    id2: float = 1.0


@dataclass(frozen=True)
class TrainHyper:
    lr: float = 2e-3
    iterations: int = 300
    batch: int = 1
    weights: LossWeights = LossWeights()

    def __post_init__(self):
        if self.batch != 1:
            raise ValueError("only batch size 1 is supported")
        if self.lr < 0 or self.iterations < 0:
            raise ValueError("lr and iterations must be non-negative")
