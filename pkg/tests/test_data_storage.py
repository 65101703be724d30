"""Tests for src/data/storage.py - binary dataset files."""

import struct
from pathlib import Path

import pytest

from src.data import (
    DATASET_MAGIC,
    Dataset,
    decode_dataset,
    encode_dataset,
    read_dataset,
    write_dataset,
)
from src.errors import FormatError, UnsupportedVersionError
from src.models import Bag


class TestDatasetFiles:
    """Writing and reading datasets."""

    def test_round_trip_is_bitwise(self, tmp_path: Path, tiny_dataset: Dataset) -> None:
        path = write_dataset(tmp_path / "data" / "dataset.bfds", tiny_dataset)
        restored = read_dataset(path)
        assert restored.same_as(tiny_dataset)
        assert restored.gen_config == tiny_dataset.gen_config
        assert restored.format_version == 1

    def test_encoding_is_deterministic(self, tiny_dataset: Dataset) -> None:
        """Equal datasets should produce identical bytes."""
        assert encode_dataset(tiny_dataset) == encode_dataset(tiny_dataset)
        assert encode_dataset(tiny_dataset)[:4] == DATASET_MAGIC

    def test_bag_without_genes(self, sample_bag: Bag) -> None:
        """An absent gene vector should survive the round trip as absent."""
        bare = Bag.create("bag-2", sample_bag.instances, 0, 2)
        dataset = Dataset(bags=(sample_bag, bare), num_domains=3)
        restored = decode_dataset(encode_dataset(dataset))
        assert restored.bags[0].has_genes
        assert not restored.bags[1].has_genes
        assert restored.same_as(dataset)


class TestDatasetFormatErrors:
    """Malformed dataset files."""

    @pytest.fixture
    def encoded(self, tiny_dataset: Dataset) -> bytes:
        return encode_dataset(tiny_dataset)

    def test_bad_magic(self, encoded: bytes) -> None:
        with pytest.raises(FormatError) as exc_info:
            decode_dataset(b"BFCK" + encoded[4:])
        assert exc_info.value.offset == 0

    def test_unknown_version(self, encoded: bytes) -> None:
        with pytest.raises(UnsupportedVersionError):
            decode_dataset(encoded[:4] + struct.pack("<I", 2) + encoded[8:])

    def test_truncated(self, encoded: bytes) -> None:
        """A cut-off file should report where it ran out."""
        cut = len(encoded) // 2
        with pytest.raises(FormatError) as exc_info:
            decode_dataset(encoded[:cut])
        assert 0 < exc_info.value.offset <= cut

    def test_trailing_bytes(self, encoded: bytes) -> None:
        with pytest.raises(FormatError) as exc_info:
            decode_dataset(encoded + b"\x00")
        assert exc_info.value.offset == len(encoded)

    def test_invalid_header(self, encoded: bytes) -> None:
        header = b'{"num_domains":3}'
        data = encoded[:8] + struct.pack("<I", len(header)) + header
        with pytest.raises(FormatError):
            decode_dataset(data)

    def test_error_message_names_offset(self) -> None:
        with pytest.raises(FormatError) as exc_info:
            decode_dataset(b"BF")
        assert "offset" in str(exc_info.value)
