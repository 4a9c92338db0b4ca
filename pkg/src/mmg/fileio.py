"""Shared framing for the binary artifact formats.

All three formats (graph snapshot, weight checkpoint, embedding table) are
little-endian, start with a 4-byte magic and a u32 version, and end with a
CRC32 of every preceding byte.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

from .errors import BadMagic, ChecksumMismatch, IoFailure, UnsupportedVersion


def write_framed(path, magic: bytes, version: int, payload: bytes) -> None:
    body = magic + struct.pack("<I", version) + payload
    body += struct.pack("<I", zlib.crc32(body))
    try:
        Path(path).write_bytes(body)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_framed(path, magic: bytes, supported_version: int) -> bytes:
    """Return the payload after checking magic, version and CRC."""
    try:
        body = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(body) < len(magic) + 8:
        raise IoFailure(f"{path}: file too short")
    if body[:len(magic)] != magic:
        raise BadMagic(f"{path}: expected magic {magic!r}")
    (crc_stored,) = struct.unpack("<I", body[-4:])
    if zlib.crc32(body[:-4]) != crc_stored:
        raise ChecksumMismatch(f"{path}: CRC32 mismatch")
    (version,) = struct.unpack_from("<I", body, len(magic))
    if version != supported_version:
        raise UnsupportedVersion(f"{path}: version {version} not supported")
    return body[len(magic) + 4:-4]


class Cursor:
    """Sequential struct reader over a payload."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, fmt: str):
        try:
            out = struct.unpack_from("<" + fmt, self.buf, self.pos)
        except struct.error as exc:
            raise IoFailure(f"truncated payload: {exc}") from exc
        self.pos += struct.calcsize("<" + fmt)
        return out if len(out) > 1 else out[0]

    def take_bytes(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise IoFailure("truncated payload")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def expect_end(self) -> None:
        if self.pos != len(self.buf):
            raise IoFailure(f"{len(self.buf) - self.pos} trailing bytes in payload")
