"""
Binary model container.

Layout (all little-endian):
    4 bytes   magic ``ADVM``
    1 byte    version (1)
    3 x u32   input_dim, hidden_dim, num_classes
    f64[]     W1 (row-major), b1, W2 (row-major), b2
"""
from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..constants import MODEL_MAGIC, MODEL_VERSION
from ..errors import FormatError, InvalidArgumentError
from .network import MlpModel
from .output import atomic_write_bytes

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sBIII")


def encode_model(model: MlpModel) -> bytes:
    header = _HEADER.pack(MODEL_MAGIC, MODEL_VERSION, model.input_dim, model.hidden_dim, model.num_classes)
    blocks = b"".join(p.astype("<f8").tobytes(order="C") for p in model.parameters())
    return header + blocks


def decode_model(data: bytes) -> MlpModel:
    if len(data) < 4 or data[:4] != MODEL_MAGIC:
        raise FormatError(f"bad model magic {data[:4]!r}", 0)
    if len(data) < _HEADER.size:
        raise FormatError("truncated model header", len(data))
    _, version, input_dim, hidden_dim, num_classes = _HEADER.unpack_from(data)
    if version != MODEL_VERSION:
        raise FormatError(f"unsupported model version {version}", 4)
    if min(input_dim, hidden_dim, num_classes) == 0:
        raise FormatError("model dimensions must be positive", 5)

    shapes = [(hidden_dim, input_dim), (hidden_dim,), (num_classes, hidden_dim), (num_classes,)]
    offset = _HEADER.size
    params = []
    for shape in shapes:
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(data):
            raise FormatError(f"truncated parameter block, expected {end - offset} bytes", len(data))
        params.append(np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64))
        offset = end
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after parameters", offset)
    return MlpModel(*params)


def save_model(model: MlpModel, path: Union[str, Path]) -> None:
    atomic_write_bytes(Path(path), encode_model(model))
    logger.debug(f"saved model {model.input_dim}-{model.hidden_dim}-{model.num_classes} to {path}")


def load_model(path: Union[str, Path]) -> MlpModel:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise InvalidArgumentError(f"cannot read model {path}: {e.strerror or e}") from e
    return decode_model(data)
