import struct

import numpy as np

from vano.exceptions import DatasetFormatError


class ByteReader:
    """Cursor over a little-endian byte string that reports where it failed."""

    def __init__(self, data: bytes, source: str):
        self.data = data
        self.offset = 0
        self.source = source

    def take(self, count: int) -> bytes:
        if count < 0 or self.offset + count > len(self.data):
            raise DatasetFormatError(
                f"{self.source}: truncated, needed {count} more bytes", offset=self.offset
            )
        chunk = self.data[self.offset:self.offset + count]
        self.offset += count
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)

    def remaining(self) -> int:
        return len(self.data) - self.offset
