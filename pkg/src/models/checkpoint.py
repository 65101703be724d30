"""Versioned binary parameter checkpoints.

Layout (little-endian): magic ``BFCK``, u32 version, JSON config block
``{"branch", "frozen", "model"}``, then until end of file one record per parameter:
name (u32 length + UTF-8), u32 rows, u32 cols, rows*cols float64 values.
"""

import logging
from pathlib import Path

from pydantic import ValidationError

from src.binio import BinaryReader, BinaryWriter
from src.errors import FormatError
from src.models.config import ModelConfig
from src.models.params import GeneParams, MainParams, ParamStore

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"BFCK"
CHECKPOINT_VERSION = 1

_BRANCHES: dict[str, type[MainParams] | type[GeneParams]] = {
    MainParams.branch: MainParams,
    GeneParams.branch: GeneParams,
}


def encode_checkpoint(store: ParamStore) -> bytes:
    writer = BinaryWriter()
    writer.header(CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    writer.json_blob(
        {
            "branch": store.branch,
            "frozen": store.frozen,
            "model": store.config.model_dump(mode="json"),
        }
    )
    for name, value in store.items():
        writer.text(name)
        writer.u32(value.shape[0])
        writer.u32(value.shape[1])
        writer.f64_block(value)
    return writer.getvalue()


def decode_checkpoint(data: bytes) -> MainParams | GeneParams:
    """Parse checkpoint bytes.

    Raises:
        FormatError: On bad magic, truncation, an invalid config block or
            parameters that do not match the declared configuration.
        UnsupportedVersionError: On an unknown format version.
    """
    reader = BinaryReader(data)
    reader.header(CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    config_offset = reader.offset
    block = reader.json_blob()
    store_cls = _BRANCHES.get(str(block.get("branch")))
    if store_cls is None:
        raise FormatError(f"unknown parameter branch {block.get('branch')!r}", config_offset)
    try:
        config = ModelConfig.model_validate(block.get("model", {}))
    except ValidationError as err:
        raise FormatError(f"invalid model config block: {err}", config_offset) from err

    values = {}
    while not reader.exhausted:
        record_offset = reader.offset
        name = reader.text()
        rows, cols = reader.u32(), reader.u32()
        if name in values:
            raise FormatError(f"duplicate parameter {name!r}", record_offset)
        values[name] = reader.f64_block(rows * cols, (rows, cols))

    layout = store_cls.layout(config)
    if set(values) != set(layout):
        raise FormatError(
            f"{store_cls.branch} parameters {sorted(values)} do not match config {sorted(layout)}",
            reader.offset,
        )
    for name, shape in layout.items():
        if values[name].shape != shape:
            raise FormatError(
                f"{name}: stored shape {values[name].shape}, config expects {shape}", reader.offset
            )
    return store_cls(config, values, frozen=bool(block.get("frozen", False)))


def save_checkpoint(path: str | Path, store: ParamStore) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_checkpoint(store))
    logger.info(f"Wrote {store.branch} checkpoint to {target}")
    return target


def load_checkpoint(path: str | Path) -> MainParams | GeneParams:
    return decode_checkpoint(Path(path).read_bytes())
