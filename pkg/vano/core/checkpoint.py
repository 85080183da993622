"""VANOCKP1 checkpoint codec.

Layout (little endian): magic, u32 tensor count, tensors; u32 count, Adam
tensors; u32 length + UTF-8 JSON metadata. A tensor is u32 name length,
name bytes, u32 rank, u32 dims, f64 data in row-major order.
"""
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from vano.constants import CHECKPOINT_MAGIC
from vano.core.binary import ByteReader
from vano.core.optim import AdamState
from vano.core.params import ParamStore
from vano.exceptions import DatasetFormatError

BUFFER_PREFIX = "buffer:"
_ADAM_SCALARS = ("step", "base_lr", "decay_rate", "decay_every", "beta1", "beta2", "eps")

Tensors = List[Tuple[str, np.ndarray]]


@dataclass
class Checkpoint:
    params: ParamStore
    buffers: Dict[str, np.ndarray] = field(default_factory=dict)
    adam: Optional[AdamState] = None
    meta: Dict[str, Any] = field(default_factory=dict)


def encode_tensors(tensors: Tensors) -> bytes:
    chunks = [struct.pack("<I", len(tensors))]
    for name, value in tensors:
        value = np.ascontiguousarray(value, dtype="<f8")
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack("<I", value.ndim))
        chunks.append(struct.pack(f"<{value.ndim}I", *value.shape))
        chunks.append(value.tobytes())
    return b"".join(chunks)


def decode_tensors(reader: ByteReader) -> Tensors:
    tensors = []
    for _ in range(reader.u32()):
        at = reader.offset
        raw_name = reader.take(reader.u32())
        try:
            name = raw_name.decode("utf-8")
        except ValueError as e:
            raise DatasetFormatError(f"{reader.source}: unreadable tensor name ({e})", offset=at + 4) from e
        rank = reader.u32()
        shape = tuple(reader.u32() for _ in range(rank))
        count = int(np.prod(shape, dtype=np.int64))
        tensors.append((name, reader.f64(count).reshape(shape)))
    return tensors


def save_checkpoint(
        path: Union[str, Path],
        params: ParamStore,
        buffers: Optional[Dict[str, np.ndarray]] = None,
        adam: Optional[AdamState] = None,
        meta: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    tensors: Tensors = list(params.items())
    tensors += [(BUFFER_PREFIX + name, np.asarray(value)) for name, value in (buffers or {}).items()]

    adam_tensors: Tensors = []
    if adam is not None:
        adam_tensors = [("adam.m", adam.m), ("adam.v", adam.v)]
        adam_tensors += [(f"adam.{key}", np.asarray(float(getattr(adam, key)))) for key in _ADAM_SCALARS]

    raw_meta = json.dumps(meta or {}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = b"".join([
        CHECKPOINT_MAGIC,
        encode_tensors(tensors),
        encode_tensors(adam_tensors),
        struct.pack("<I", len(raw_meta)),
        raw_meta,
    ])
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(payload)
    tmp.replace(path)
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    reader = ByteReader(path.read_bytes(), str(path))
    magic = reader.take(len(CHECKPOINT_MAGIC))
    if magic != CHECKPOINT_MAGIC:
        raise DatasetFormatError(
            f"{path}: bad magic {magic!r}, expected {CHECKPOINT_MAGIC.decode()!r}", offset=0
        )

    params = ParamStore()
    buffers: Dict[str, np.ndarray] = {}
    for name, value in decode_tensors(reader):
        if name.startswith(BUFFER_PREFIX):
            buffers[name[len(BUFFER_PREFIX):]] = value
        else:
            params.declare(name, value)

    adam = None
    adam_tensors = dict(decode_tensors(reader))
    if adam_tensors:
        try:
            m, v = adam_tensors["adam.m"], adam_tensors["adam.v"]
            scalars = {key: float(adam_tensors[f"adam.{key}"]) for key in _ADAM_SCALARS}
        except KeyError as e:
            raise DatasetFormatError(f"{path}: optimizer state lacks {e}", offset=reader.offset) from e
        if m.shape != params.values.shape or v.shape != m.shape:
            raise DatasetFormatError(f"{path}: optimizer state does not match parameters", offset=reader.offset)
        scalars["step"] = int(scalars["step"])
        scalars["decay_every"] = int(scalars["decay_every"])
        adam = AdamState(m=m.copy(), v=v.copy(), **scalars)

    raw_meta = reader.take(reader.u32())
    if reader.remaining():
        raise DatasetFormatError(f"{path}: {reader.remaining()} trailing bytes", offset=reader.offset)
    try:
        meta = json.loads(raw_meta.decode("utf-8"))
    except ValueError as e:
        raise DatasetFormatError(f"{path}: unreadable metadata ({e})", offset=reader.offset - len(raw_meta)) from e
    if not isinstance(meta, dict):
        raise DatasetFormatError(f"{path}: metadata is not an object", offset=reader.offset - len(raw_meta))
    return Checkpoint(params=params, buffers=buffers, adam=adam, meta=meta)
