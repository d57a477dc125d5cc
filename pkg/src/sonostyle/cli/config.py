"""Pipeline configuration: ``key = value`` lines under ``[section]`` headers.

``#`` starts a comment. Every key has a default, so an empty file is a
valid configuration. Relative paths resolve against the directory holding
the config file. Errors carry the offending line number.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    pass


def _check(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class PathsSection:
    content_dir: str = "content"
    style_dir: str = "style"
    trimap_dir: str = ""
    pristine_dir: str = ""
    output_dir: str = "out"
    pairs_csv: str = ""
    dbcnn_csv: str = ""


@dataclass(frozen=True)
class PrepareSection:
    sigma: float = 1.0
    target_size: int = 32
    noise_intensity: float = 0.0

    def validate(self):
        _check(self.sigma >= 0, "sigma must be ≥ 0")
        _check(8 <= self.target_size <= 4096, "target_size must lie in [8, 4096]")
        _check(0 <= self.noise_intensity <= 1, "noise_intensity must lie in [0, 1]")


@dataclass(frozen=True)
class ModelSection:
    patch_size: int = 4
    embed_dim: int = 64
    heads: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    cape_grid: int = 4

    def validate(self):
        _check(self.patch_size >= 1 and self.patch_size & (self.patch_size - 1) == 0,
               "patch_size must be a power of 2")
        _check(self.embed_dim >= 2 and self.embed_dim % 2 == 0, "embed_dim must be even and ≥ 2")
        _check(self.heads >= 1 and self.embed_dim % self.heads == 0, "heads must divide embed_dim")
        _check(self.enc_layers >= 0, "enc_layers must be ≥ 0")
        _check(self.dec_layers >= 0, "dec_layers must be ≥ 0")
        _check(self.cape_grid >= 1, "cape_grid must be ≥ 1")


@dataclass(frozen=True)
class TrainSection:
    lr: float = 2e-3
    iterations: int = 300
    checkpoint_every: int = 50
    content_weight: float = 1.0
    style_weight: float = 10.0
    id1_weight: float = 50.0
    id2_weight: float = 1.0
    seed: int = 0

    def validate(self):
        _check(self.lr >= 0, "lr must be ≥ 0")
        _check(self.iterations >= 1, "iterations must be ≥ 1")
        _check(self.checkpoint_every >= 0, "checkpoint_every must be ≥ 0")
        for name in ("content_weight", "style_weight", "id1_weight", "id2_weight"):
            _check(getattr(self, name) >= 0, f"{name} must be ≥ 0")
        _check(0 <= self.seed < 2 ** 64, "seed must be a u64")


@dataclass(frozen=True)
class TransferSection:
    style_policy: str = "round_robin"
    style_id: int = 0
    noise_intensity: float = 0.0

    def validate(self):
        _check(self.style_policy in ("round_robin", "fixed"), "style_policy must be round_robin or fixed")
        _check(self.style_id >= 0, "style_id must be ≥ 0")
        _check(0 <= self.noise_intensity <= 1, "noise_intensity must lie in [0, 1]")


@dataclass(frozen=True)
class EvaluateSection:
    cosine_side: int = 64
    niqe_patch: int = 8
    niqe_quantile: float = 0.5
    ridge: float = 1e-3

    def validate(self):
        _check(self.cosine_side >= 8, "cosine_side must be ≥ 8")
        _check(self.niqe_patch >= 4 and self.niqe_patch % 2 == 0, "niqe_patch must be even and ≥ 4")
        _check(0 <= self.niqe_quantile <= 1, "niqe_quantile must lie in [0, 1]")
        _check(self.ridge > 0, "ridge must be > 0")


SECTIONS = {
    "paths": PathsSection, "prepare": PrepareSection, "model": ModelSection, "train": TrainSection,
    "transfer": TransferSection, "evaluate": EvaluateSection,
}


@dataclass(frozen=True)
class PipelineConfig:
    paths: PathsSection = field(default_factory=PathsSection)
    prepare: PrepareSection = field(default_factory=PrepareSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    transfer: TransferSection = field(default_factory=TransferSection)
    evaluate: EvaluateSection = field(default_factory=EvaluateSection)
    base_dir: str = field(default=".", compare=False)

    def resolve(self, rel: str) -> Path:
        """Path value resolved against the config file's directory."""
        p = Path(rel)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def with_seed(self, seed: int | None) -> "PipelineConfig":
        if seed is None:
            return self
        return replace(self, train=replace(self.train, seed=seed))

    def digest(self) -> str:
        """SHA-256 of the canonical dump (paths as written, not resolved)."""
        return hashlib.sha256(dump_config(self).encode("utf-8")).hexdigest()


def _coerce(raw: str, typ, key: str, lineno: int):
    try:
        if typ in (int, "int"):
            return int(raw, 0) if raw.lower().startswith("0x") else int(raw)
        if typ in (float, "float"):
            return float(raw)
        return raw
    except ValueError as exc:
        tname = typ if isinstance(typ, str) else typ.__name__
        raise ConfigError(f"line {lineno}: {key} expects {tname}, got {raw!r}") from exc


def parse_config_text(text: str, base_dir: str = ".") -> PipelineConfig:
    values: dict[str, dict] = {name: {} for name in SECTIONS}
    lines_of: dict[tuple, int] = {}
    unknown = []
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, raw = (s.strip() for s in line.split("=", 1))
        types = {f.name: f.type for f in fields(SECTIONS[section])}
        if key not in types:
            unknown.append(f"{section}.{key} (line {lineno})")
            continue
        if key in values[section]:
            raise ConfigError(f"line {lineno}: duplicate key {section}.{key}")
        values[section][key] = _coerce(raw, types[key], f"{section}.{key}", lineno)
        lines_of[(section, key)] = lineno
    if unknown:
        raise ConfigError("unknown keys: " + ", ".join(unknown))

    built = {}
    for name, cls in SECTIONS.items():
        sec = cls(**values[name])
        if hasattr(sec, "validate"):
            try:
                sec.validate()
            except ValueError as exc:
                msg = str(exc)
                key = msg.split(" ", 1)[0]
                where = lines_of.get((name, key))
                loc = f"line {where}: " if where else ""
                raise ConfigError(f"{loc}{name}.{msg}") from None
        built[name] = sec
    cfg = PipelineConfig(**built, base_dir=str(base_dir))
    grid = cfg.prepare.target_size // cfg.model.patch_size
    if cfg.prepare.target_size % cfg.model.patch_size or grid % cfg.model.cape_grid:
        raise ConfigError("prepare.target_size must be divisible by model.patch_size, "
                          "and the patch grid by model.cape_grid")
    return cfg


def parse_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: not valid UTF-8") from exc
    return parse_config_text(text, base_dir=str(path.resolve().parent))


def dump_config(cfg: PipelineConfig) -> str:
    """Canonical text form: every section and key, in declaration order."""
    out = []
    for name in SECTIONS:
        sec = getattr(cfg, name)
        out.append(f"[{name}]")
        for f in fields(sec):
            out.append(f"{f.name} = {getattr(sec, f.name)!r}" if f.type in (float, "float")
                       else f"{f.name} = {getattr(sec, f.name)}")
        out.append("")
    return "\n".join(out)
