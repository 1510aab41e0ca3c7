"""Writer for the MEMF feature-file layout consumed by the classification core.

Layout (little-endian): magic "MEMF", version u16=1, flags u16=0, dim u32,
count u64, then per record id_len u16 + id UTF-8 + dim*f32, then a CRC32
trailer over all preceding bytes. Implemented from the published schema; this
package deliberately does not import the core.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"MEMF"
VERSION = 1


def write_memf(path: str | Path, ids: list[str], vectors: np.ndarray) -> None:
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2 or vectors.shape[0] != len(ids):
        raise ValueError(f"vectors shape {vectors.shape} does not match {len(ids)} ids")
    if vectors.size and not np.all(np.isfinite(vectors)):
        raise ValueError("refusing to write non-finite features")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids")
    dim = vectors.shape[1]
    buf = bytearray()
    buf += struct.pack("<4sHHIQ", MAGIC, VERSION, 0, dim, len(ids))
    for i, meme_id in enumerate(ids):
        raw = meme_id.encode("utf-8")
        buf += struct.pack("<H", len(raw))
        buf += raw
        buf += vectors[i].tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(buf))
