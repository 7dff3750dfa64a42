"""Uncompressed frame container for live-stream segments.

Layout (little-endian): magic "PSEG", u8 version=1, u32 frame count, then per
frame u64 ts_ms, u32 width, u32 height and width*height*3 RGB8 bytes. Version
is explicit so a compressed container can slot in later as version 2.
"""
from __future__ import annotations

import struct
from typing import Sequence

from .model import Frame

MAGIC = b"PSEG"
VERSION = 1
_HEAD = struct.Struct("<4sBI")
_FRAME_HEAD = struct.Struct("<QII")


class BadContainer(ValueError):
    pass


def encode_segment(frames: Sequence[Frame]) -> bytes:
    parts = [_HEAD.pack(MAGIC, VERSION, len(frames))]
    for f in frames:
        parts.append(_FRAME_HEAD.pack(f.ts_ms, f.width, f.height))
        parts.append(f.pixels)
    return b"".join(parts)


def decode_segment(data: bytes) -> list[Frame]:
    """Decode a segment; raises BadContainer unless lengths are self-consistent."""
    if len(data) < _HEAD.size:
        raise BadContainer("truncated header")
    magic, version, count = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadContainer("bad magic")
    if version != VERSION:
        raise BadContainer(f"unsupported version {version}")
    frames: list[Frame] = []
    offset = _HEAD.size
    for i in range(count):
        if offset + _FRAME_HEAD.size > len(data):
            raise BadContainer(f"truncated frame header at index {i}")
        ts_ms, width, height = _FRAME_HEAD.unpack_from(data, offset)
        offset += _FRAME_HEAD.size
        size = width * height * 3
        if width <= 0 or height <= 0:
            raise BadContainer(f"bad dimensions at index {i}")
        if offset + size > len(data):
            raise BadContainer(f"truncated pixels at index {i}")
        frames.append(Frame(width=width, height=height, pixels=data[offset : offset + size],
                            ts_ms=ts_ms, seq=i))
        offset += size
    if offset != len(data):
        raise BadContainer("trailing bytes")
    return frames


def segment_duration_ms(frames: Sequence[Frame], default_ms: int = 2000) -> int:
    """Wall span covered by the frames, padded by one inter-frame gap."""
    if len(frames) < 2:
        return default_ms
    span = frames[-1].ts_ms - frames[0].ts_ms
    gap = span // (len(frames) - 1)
    return int(span + gap)
