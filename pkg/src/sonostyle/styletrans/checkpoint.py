"""Model checkpoints in the shared little-endian record format.

Header fields are the architecture (p, d, h, L_e, L_d, s, image side);
records follow the parameter order of :func:`parameter_shapes`.
"""

from __future__ import annotations

import numpy as np

from ..numcore import Tensor
from ..records import RecordFileError, read_records, write_records
from .config import ModelConfig
from .model import StyleTransferModel, parameter_shapes

MAGIC = b"UWSTM\x00\x00\x01"
N_HEADER = 7


def save_checkpoint(model: StyleTransferModel, path) -> None:
    for name, p in model.params.items():
        if not np.all(np.isfinite(p.data)):
            raise ValueError(f"parameter {name} is not finite")
    records = [(name, p.data) for name, p in model.params.items()]
    write_records(path, MAGIC, model.config.header(), records)


def load_checkpoint(path) -> StyleTransferModel:
    header, records = read_records(path, MAGIC, N_HEADER)
    config = ModelConfig.from_header(header)
    expected = [n for n, _ in parameter_shapes(config)]
    names = [n for n, _ in records]
    if names != expected:
        raise RecordFileError(f"checkpoint {path} records do not match the header architecture")
    return StyleTransferModel(config, {n: Tensor(a, requires_grad=True) for n, a in records})
