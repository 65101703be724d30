"""Tests for src/models/checkpoint.py."""

import struct
from pathlib import Path

import numpy as np
import pytest

from src.errors import FormatError, UnsupportedVersionError
from src.models import (
    CHECKPOINT_MAGIC,
    GeneParams,
    MainParams,
    ModelConfig,
    decode_checkpoint,
    encode_checkpoint,
    init_params,
    load_checkpoint,
    save_checkpoint,
)


class TestCheckpointRoundTrip:
    """Saving and loading should preserve every parameter bit."""

    def test_main_round_trip(self, tiny_params: tuple[MainParams, GeneParams]) -> None:
        main, _ = tiny_params
        restored = decode_checkpoint(encode_checkpoint(main))
        assert isinstance(restored, MainParams)
        assert restored.same_as(main)
        assert restored.config == main.config

    def test_frozen_flag_survives(self, tiny_params: tuple[MainParams, GeneParams]) -> None:
        """A frozen gene store should come back frozen."""
        _, gene = tiny_params
        gene.freeze()
        restored = decode_checkpoint(encode_checkpoint(gene))
        assert isinstance(restored, GeneParams)
        assert restored.frozen
        assert restored.same_as(gene)

    def test_gated_store_round_trip(self, tiny_model_config: ModelConfig) -> None:
        main, _ = init_params(tiny_model_config.model_copy(update={"gated": True}), seed=4)
        restored = decode_checkpoint(encode_checkpoint(main))
        assert "U" in restored
        assert restored.same_as(main)

    def test_save_and_load_file(
        self, tmp_path: Path, tiny_params: tuple[MainParams, GeneParams]
    ) -> None:
        main, _ = tiny_params
        path = save_checkpoint(tmp_path / "nested" / "main.bfck", main)
        assert path.read_bytes()[:4] == CHECKPOINT_MAGIC
        assert load_checkpoint(path).same_as(main)


class TestCheckpointErrors:
    """Malformed checkpoints should raise FormatError with an offset."""

    @pytest.fixture
    def encoded(self, tiny_params: tuple[MainParams, GeneParams]) -> bytes:
        return encode_checkpoint(tiny_params[0])

    def test_bad_magic(self, encoded: bytes) -> None:
        with pytest.raises(FormatError) as exc_info:
            decode_checkpoint(b"XXXX" + encoded[4:])
        assert exc_info.value.offset == 0

    def test_unknown_version(self, encoded: bytes) -> None:
        """A future version number should be reported at the version field."""
        data = encoded[:4] + struct.pack("<I", 99) + encoded[8:]
        with pytest.raises(UnsupportedVersionError) as exc_info:
            decode_checkpoint(data)
        assert exc_info.value.offset == 4

    def test_truncated(self, encoded: bytes) -> None:
        with pytest.raises(FormatError) as exc_info:
            decode_checkpoint(encoded[:-3])
        assert exc_info.value.offset > 0

    def test_empty_file(self) -> None:
        with pytest.raises(FormatError):
            decode_checkpoint(b"")

    def test_layout_mismatch(
        self, tiny_model_config: ModelConfig, tiny_params: tuple[MainParams, GeneParams]
    ) -> None:
        """Parameters written for one config must not load under another."""
        main, _ = tiny_params
        other, _ = init_params(tiny_model_config.with_prompts(3), seed=0)
        head = encode_checkpoint(other)
        body = encode_checkpoint(main)
        # Splice the header of the 3-prompt store onto the 2-prompt records.
        header_end = 8 + 4 + struct.unpack("<I", head[8:12])[0]
        body_start = 8 + 4 + struct.unpack("<I", body[8:12])[0]
        with pytest.raises(FormatError):
            decode_checkpoint(head[:header_end] + body[body_start:])

    def test_values_are_little_endian_float64(
        self, tiny_params: tuple[MainParams, GeneParams]
    ) -> None:
        """The last record should end with the raw bytes of the last parameter."""
        main, _ = tiny_params
        last = main.names[-1]
        tail = np.ascontiguousarray(main[last], dtype="<f8").tobytes()
        assert encode_checkpoint(main).endswith(tail)
