"""Little-endian binary readers and writers shared by the IVSQ and IVCK formats.

Every read knows its byte offset so parse failures can say where they happened.
"""

import struct
import zlib
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import FormatError

DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
DTYPE_NAMES = {"float32": 0, "float64": 1}

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def dtype_code(dtype: Union[str, np.dtype]) -> int:
    name = np.dtype(dtype).name
    if name not in DTYPE_NAMES:
        raise FormatError(f"unsupported dtype {name}", offset=0)
    return DTYPE_NAMES[name]


class BinaryReader:
    """Sequential reader over an in-memory buffer."""

    def __init__(self, data: bytes, path: Optional[Union[str, Path]] = None):
        self.data = data
        self.offset = 0
        self.path = str(path) if path is not None else None

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "BinaryReader":
        return cls(Path(path).read_bytes(), path)

    @property
    def remaining(self) -> int:
        return len(self.data) - self.offset

    def fail(self, message: str, offset: Optional[int] = None) -> FormatError:
        return FormatError(message, offset=self.offset if offset is None else offset, path=self.path)

    def read_bytes(self, count: int, what: str) -> bytes:
        if count < 0 or count > self.remaining:
            raise self.fail(f"truncated while reading {what}: need {count} bytes, {self.remaining} remain")
        chunk = self.data[self.offset:self.offset + count]
        self.offset += count
        return chunk

    def expect_magic(self, magic: bytes) -> None:
        start = self.offset
        found = self.read_bytes(len(magic), "magic")
        if found != magic:
            raise self.fail(f"bad magic {found!r}, expected {magic!r}", offset=start)

    def read_u32(self, what: str) -> int:
        return _U32.unpack(self.read_bytes(4, what))[0]

    def read_u64(self, what: str) -> int:
        return _U64.unpack(self.read_bytes(8, what))[0]

    def read_dtype(self) -> np.dtype:
        start = self.offset
        code = self.read_u32("dtype")
        if code not in DTYPE_CODES:
            raise self.fail(f"unknown dtype code {code}", offset=start)
        return DTYPE_CODES[code]

    def read_array(self, dtype: np.dtype, shape: Sequence[int], what: str) -> np.ndarray:
        count = 1
        for dim in shape:
            count *= int(dim)
        nbytes = count * dtype.itemsize
        if nbytes > self.remaining:
            raise self.fail(
                f"{what} needs {nbytes} bytes for shape {tuple(shape)}, only {self.remaining} remain"
            )
        raw = self.read_bytes(nbytes, what)
        return np.frombuffer(raw, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))

    def read_text(self, what: str) -> str:
        length = self.read_u32(f"{what} length")
        start = self.offset
        raw = self.read_bytes(length, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise self.fail(f"{what} is not valid UTF-8", offset=start) from e

    def expect_end(self) -> None:
        if self.remaining:
            raise self.fail(f"{self.remaining} unexpected trailing bytes")


class BinaryWriter:
    """Accumulates little-endian fields in memory."""

    def __init__(self):
        self._parts: List[bytes] = []

    def write_bytes(self, data: bytes) -> None:
        self._parts.append(bytes(data))

    def write_u32(self, value: int) -> None:
        self._parts.append(_U32.pack(value))

    def write_u64(self, value: int) -> None:
        self._parts.append(_U64.pack(value))

    def write_array(self, array: np.ndarray, dtype: Union[str, np.dtype]) -> None:
        little = np.dtype(dtype).newbyteorder("<")
        self._parts.append(np.ascontiguousarray(array, dtype=little).tobytes())

    def write_text(self, text: str) -> None:
        raw = text.encode("utf-8")
        self.write_u32(len(raw))
        self._parts.append(raw)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)

    def save(self, path: Union[str, Path], with_checksum: bool = False) -> int:
        """Write to ``path``, optionally followed by a CRC32 of everything before it."""
        payload = self.getvalue()
        if with_checksum:
            payload += _U32.pack(crc32(payload))
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(payload)
        return len(payload)


def crc32(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def split_checksum(data: bytes, path: Optional[Union[str, Path]] = None) -> Tuple[bytes, int]:
    """Return the body and verify the trailing CRC32 written by :meth:`BinaryWriter.save`."""
    if len(data) < 4:
        raise FormatError("file too short for checksum", offset=len(data), path=str(path) if path else None)
    body, stored = data[:-4], _U32.unpack(data[-4:])[0]
    if crc32(body) != stored:
        raise FormatError("checksum mismatch: payload is corrupt", offset=len(body),
                          path=str(path) if path else None)
    return body, stored
