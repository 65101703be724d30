"""Binary dataset files.

Layout (little-endian): magic ``BFDS``, u32 version, JSON header
``{"gen_config", "num_domains", "num_samples"}``, then one record per sample:
id (u32 length + UTF-8), subtype u8, domain u16, n u32, d u32, n*d float64,
G u32, G float64, gene-present flag u8. An absent gene vector is stored as G = 0.
"""

import logging
from pathlib import Path

from pydantic import ValidationError

from src.binio import BinaryReader, BinaryWriter
from src.data.dataset import DATASET_VERSION, Dataset
from src.data.generator import GenConfig
from src.errors import ContractError, FormatError
from src.models.bag import Bag

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"BFDS"


def encode_dataset(dataset: Dataset) -> bytes:
    writer = BinaryWriter()
    writer.header(DATASET_MAGIC, DATASET_VERSION)
    writer.json_blob(
        {
            "gen_config": None
            if dataset.gen_config is None
            else dataset.gen_config.model_dump(mode="json"),
            "num_domains": dataset.num_domains,
            "num_samples": len(dataset),
        }
    )
    for bag in dataset:
        writer.text(bag.sample_id)
        writer.u8(bag.subtype)
        writer.u16(bag.domain)
        writer.u32(bag.n)
        writer.u32(bag.d)
        writer.f64_block(bag.instances)
        if bag.gene_vector is None:
            writer.u32(0)
            writer.u8(0)
        else:
            writer.u32(bag.gene_vector.shape[1])
            writer.f64_block(bag.gene_vector)
            writer.u8(1)
    return writer.getvalue()


def decode_dataset(data: bytes) -> Dataset:
    """Parse dataset bytes.

    Raises:
        FormatError: On bad magic, truncation, trailing bytes or invalid records.
        UnsupportedVersionError: On an unknown format version.
    """
    reader = BinaryReader(data)
    version = reader.header(DATASET_MAGIC, DATASET_VERSION)
    header_offset = reader.offset
    header = reader.json_blob()
    try:
        num_samples = int(header["num_samples"])
        num_domains = int(header["num_domains"])
        raw_config = header.get("gen_config")
        gen_config = None if raw_config is None else GenConfig.model_validate(raw_config)
    except (KeyError, TypeError, ValueError, ValidationError) as err:
        raise FormatError(f"invalid dataset header: {err}", header_offset) from err

    bags = []
    for _ in range(num_samples):
        record_offset = reader.offset
        sample_id = reader.text()
        subtype = reader.u8()
        domain = reader.u16()
        n, d = reader.u32(), reader.u32()
        instances = reader.f64_block(n * d, (n, d))
        gene_len = reader.u32()
        genes = reader.f64_block(gene_len, (gene_len,))
        present = reader.u8()
        if present not in (0, 1) or (present == 1) != (gene_len > 0):
            raise FormatError(
                f"sample {sample_id!r}: gene flag {present} disagrees with length {gene_len}",
                reader.offset - 1,
            )
        try:
            gene_vector = genes if present else None
            bags.append(Bag.create(sample_id, instances, subtype, domain, gene_vector))
        except ContractError as err:
            raise FormatError(f"invalid sample record: {err}", record_offset) from err
    reader.expect_end()

    try:
        return Dataset(
            bags=tuple(bags),
            num_domains=num_domains,
            gen_config=gen_config,
            format_version=version,
        )
    except ContractError as err:
        raise FormatError(f"inconsistent dataset: {err}", header_offset) from err


def write_dataset(path: str | Path, dataset: Dataset) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_dataset(dataset))
    logger.info(f"Wrote {len(dataset)} samples to {target}")
    return target


def read_dataset(path: str | Path) -> Dataset:
    dataset = decode_dataset(Path(path).read_bytes())
    logger.debug(f"Read {len(dataset)} samples from {path}")
    return dataset
