"""Little-endian binary record codec for dataset and checkpoint files.

Both file formats share the same layout primitives: a 4-byte magic, a u32
format version, length-prefixed UTF-8 strings and raw float64 blocks.
"""

import json
import struct
from typing import Any

import numpy as np
from numpy.typing import NDArray

from src.errors import FormatError, UnsupportedVersionError

_U8 = struct.Struct("<B")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


class BinaryWriter:
    """Accumulates a binary payload in memory."""

    def __init__(self) -> None:
        self._chunks: list[bytes] = []

    def header(self, magic: bytes, version: int) -> None:
        """Write the magic bytes followed by the format version."""
        self._chunks.append(magic)
        self.u32(version)

    def u8(self, value: int) -> None:
        self._chunks.append(_U8.pack(value))

    def u16(self, value: int) -> None:
        self._chunks.append(_U16.pack(value))

    def u32(self, value: int) -> None:
        self._chunks.append(_U32.pack(value))

    def text(self, value: str) -> None:
        """Write a u32 length prefix followed by UTF-8 bytes."""
        encoded = value.encode("utf-8")
        self.u32(len(encoded))
        self._chunks.append(encoded)

    def json_blob(self, payload: dict[str, Any]) -> None:
        """Write a JSON object as length-prefixed text with sorted keys."""
        self.text(json.dumps(payload, sort_keys=True, separators=(",", ":")))

    def f64_block(self, values: NDArray[np.float64]) -> None:
        self._chunks.append(np.ascontiguousarray(values, dtype="<f8").tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self._chunks)


class BinaryReader:
    """Sequential reader that reports the byte offset of every failure."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self.offset = 0

    def _take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self._data):
            raise FormatError(
                f"truncated file: {what} needs {size} bytes, {len(self._data) - self.offset} left",
                self.offset,
            )
        chunk = self._data[self.offset : end]
        self.offset = end
        return chunk

    def header(self, magic: bytes, supported_version: int) -> int:
        """Check magic and version; return the version read."""
        found = self._take(len(magic), "magic")
        if found != magic:
            raise FormatError(f"bad magic {found!r}, expected {magic!r}", 0)
        version_offset = self.offset
        version = self.u32()
        if version != supported_version:
            raise UnsupportedVersionError(
                f"unsupported format version {version} (supported: {supported_version})",
                version_offset,
            )
        return version

    def u8(self) -> int:
        return int(_U8.unpack(self._take(1, "u8"))[0])

    def u16(self) -> int:
        return int(_U16.unpack(self._take(2, "u16"))[0])

    def u32(self) -> int:
        return int(_U32.unpack(self._take(4, "u32"))[0])

    def text(self) -> str:
        length = self.u32()
        start = self.offset
        raw = self._take(length, "string")
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as err:
            raise FormatError(f"invalid UTF-8 string: {err}", start) from err

    def json_blob(self) -> dict[str, Any]:
        start = self.offset
        raw = self.text()
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError as err:
            raise FormatError(f"invalid JSON header: {err.msg}", start) from err
        if not isinstance(payload, dict):
            raise FormatError("JSON header is not an object", start)
        return payload

    def f64_block(self, count: int, shape: tuple[int, ...]) -> NDArray[np.float64]:
        raw = self._take(8 * count, f"{count} float64 values")
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)

    @property
    def exhausted(self) -> bool:
        return self.offset == len(self._data)

    def expect_end(self) -> None:
        if not self.exhausted:
            raise FormatError(f"{len(self._data) - self.offset} trailing bytes", self.offset)
