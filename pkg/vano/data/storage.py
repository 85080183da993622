"""VANOFDS1 dataset files.

Little endian: magic (8 bytes); u32 d; u32 m; u32 N; f64 extents (min, max
per axis); f64 grid (m * d, point-major); f64 values (N * m, sample-major);
u32 provenance length + UTF-8 JSON.
"""
import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

from vano.constants import DATASET_MAGIC
from vano.core.binary import ByteReader
from vano.data.dataset import Dataset
from vano.exceptions import DatasetFormatError
from vano.schemas import Provenance


def encode_dataset(ds: Dataset) -> bytes:
    provenance = json.dumps(ds.provenance.model_dump(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    return b"".join([
        DATASET_MAGIC,
        struct.pack("<3I", ds.domain_dim, ds.m, len(ds)),
        np.ascontiguousarray(ds.extents, dtype="<f8").tobytes(),
        np.ascontiguousarray(ds.grid, dtype="<f8").tobytes(),
        np.ascontiguousarray(ds.values, dtype="<f8").tobytes(),
        struct.pack("<I", len(provenance)),
        provenance,
    ])


def save_dataset(ds: Dataset, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_dataset(ds))
    return path


def decode_dataset(data: bytes, source: str = "<bytes>") -> Dataset:
    reader = ByteReader(data, source)
    magic = reader.take(len(DATASET_MAGIC))
    if magic != DATASET_MAGIC:
        raise DatasetFormatError(f"{source}: bad magic {magic!r}, expected {DATASET_MAGIC.decode()!r}", offset=0)

    header_at = reader.offset
    d, m, n = (reader.u32() for _ in range(3))
    if d < 1 or m < 1:
        raise DatasetFormatError(f"{source}: invalid dimensions d={d}, m={m}", offset=header_at)
    if n < 1:
        raise DatasetFormatError(f"{source}: file holds no functions (N=0)", offset=header_at + 8)

    extents = reader.f64(2 * d).reshape(d, 2)
    grid = reader.f64(m * d).reshape(m, d)
    values = reader.f64(n * m).reshape(n, m)
    raw = reader.take(reader.u32())
    if reader.remaining():
        raise DatasetFormatError(f"{source}: {reader.remaining()} trailing bytes", offset=reader.offset)
    try:
        provenance = Provenance.model_validate(json.loads(raw.decode("utf-8")))
    except ValueError as e:
        raise DatasetFormatError(f"{source}: unreadable provenance ({e})", offset=reader.offset - len(raw)) from e
    return Dataset(extents, grid, values, provenance)


def load_dataset(path: Union[str, Path]) -> Dataset:
    path = Path(path)
    return decode_dataset(path.read_bytes(), str(path))
