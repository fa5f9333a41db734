"""
Model checkpoint file: magic, version, serialized ModelConfig, then parameter tensors.
All integers are little-endian u32; tensors are float32 row-major with a shape header.
"""
import json
import logging
import struct
from pathlib import Path
from typing import List, Tuple

import numpy as np

from src.data.formats import BinaryReader
from src.errors import FormatError
from src.models import ModelConfig
from .model import ForgeryLocalizer

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"AVRM"
CHECKPOINT_VERSION = 1
_U32 = struct.Struct("<I")


def save_checkpoint(path: str, model: ForgeryLocalizer) -> None:
    config_bytes = json.dumps(model.config.model_dump(mode="json"), sort_keys=True).encode()
    arrays = model.state_arrays()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(_U32.pack(CHECKPOINT_VERSION))
        fh.write(_U32.pack(len(config_bytes)))
        fh.write(config_bytes)
        fh.write(_U32.pack(len(arrays)))
        for array in arrays:
            fh.write(_U32.pack(array.ndim))
            for dim in array.shape:
                fh.write(_U32.pack(dim))
            fh.write(np.ascontiguousarray(array, dtype="<f4").tobytes())
    logger.debug("Wrote checkpoint %s (%d tensors)", path, len(arrays))


def read_checkpoint(path: str) -> Tuple[ModelConfig, List[np.ndarray]]:
    """Parse a checkpoint into its config and float32 parameter arrays.

    Raises:
        FormatError: bad magic, unsupported version, invalid config or truncation
    """
    try:
        buffer = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read checkpoint: {exc}", path=path) from exc
    reader = BinaryReader(buffer, str(path))
    magic = reader.take(4, "magic")
    if magic != CHECKPOINT_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}", path=path, offset=0)
    (version,) = reader.unpack(_U32, "version")
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", path=path, offset=4)
    (config_len,) = reader.unpack(_U32, "config length")
    config_offset = reader.offset
    try:
        config = ModelConfig.model_validate_json(reader.take(config_len, "config"))
    except ValueError as exc:
        raise FormatError(f"invalid model config: {exc}", path=path, offset=config_offset) from exc

    (count,) = reader.unpack(_U32, "tensor count")
    arrays = []
    for i in range(count):
        (ndim,) = reader.unpack(_U32, f"tensor {i} rank")
        shape = tuple(reader.unpack(_U32, f"tensor {i} shape")[0] for _ in range(ndim))
        arrays.append(reader.floats(int(np.prod(shape)), f"tensor {i} data").reshape(shape))
    reader.expect_end()
    return config, arrays


def load_checkpoint(path: str) -> ForgeryLocalizer:
    config, arrays = read_checkpoint(path)
    model = ForgeryLocalizer(config)
    model.load_arrays(arrays)
    logger.info("Loaded checkpoint %s (%d parameters)", path, model.parameter_count())
    return model
