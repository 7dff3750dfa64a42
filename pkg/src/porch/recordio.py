"""Length-prefixed, CRC-checked record files.

Shared framing for the edge outbox and the hub event log: a 5-byte magic
("PODB1") followed by records of [u32 length | payload | u32 CRC32(payload)],
all little-endian. Appends are fsynced so an acknowledged write survives a
crash; a torn tail (partial final record) is detected and truncated away.
"""
from __future__ import annotations

import os
import struct
import zlib
from pathlib import Path

MAGIC = b"PODB1"
_HEADER = struct.Struct("<I")
_CRC = struct.Struct("<I")


class RecordCorrupt(Exception):
    """A complete record failed its CRC check (real corruption, not a torn tail)."""


class RecordFile:
    """Append-only record file. Not thread-safe; callers serialize writes."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = None

    def open_for_append(self) -> None:
        new = not self.path.exists() or self.path.stat().st_size == 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "ab")
        if new:
            self._fh.write(MAGIC)
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def append(self, payload: bytes) -> None:
        if self._fh is None:
            self.open_for_append()
        self._fh.write(_HEADER.pack(len(payload)))
        self._fh.write(payload)
        self._fh.write(_CRC.pack(zlib.crc32(payload)))
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_records(path: str | Path) -> tuple[list[bytes], int]:
    """Load all intact records.

    Returns (payloads, good_length) where good_length is the byte offset of
    the end of the last intact record; anything past it is a torn tail.
    Raises RecordCorrupt if a fully present record has a bad CRC, and
    ValueError if the magic does not match.
    """
    path = Path(path)
    if not path.exists():
        return [], 0
    data = path.read_bytes()
    if len(data) == 0:
        return [], 0
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: bad magic")
    payloads: list[bytes] = []
    offset = len(MAGIC)
    good = offset
    total = len(data)
    while offset < total:
        if offset + _HEADER.size > total:
            break  # torn length prefix
        (length,) = _HEADER.unpack_from(data, offset)
        end = offset + _HEADER.size + length + _CRC.size
        if end > total:
            break  # torn payload/CRC
        payload = data[offset + _HEADER.size : offset + _HEADER.size + length]
        (crc,) = _CRC.unpack_from(data, offset + _HEADER.size + length)
        if crc != zlib.crc32(payload):
            raise RecordCorrupt(f"{path}: CRC mismatch at offset {offset}")
        payloads.append(payload)
        offset = end
        good = end
    return payloads, good


def truncate_to(path: str | Path, length: int) -> None:
    with open(path, "r+b") as fh:
        fh.truncate(length)
