"""Length-prefixed canonical byte encoding.

Every field is written as a 4-byte big-endian length followed by the raw
bytes. Sequences are written as a 4-byte item count followed by each item
encoded as a field. The encoding is injective, which is what the transaction
ids, certificate signatures and Fiat-Shamir challenges rely on.
"""

from __future__ import annotations

import struct
from typing import Iterable, Iterator

_LEN = struct.Struct(">I")


class DecodeError(ValueError):
    pass


def field(data: bytes) -> bytes:
    return _LEN.pack(len(data)) + data


def fields(*parts: bytes) -> bytes:
    return b"".join(field(p) for p in parts)


def seq(items: Iterable[bytes]) -> bytes:
    items = list(items)
    return _LEN.pack(len(items)) + b"".join(field(i) for i in items)


def u64(n: int) -> bytes:
    return struct.pack(">Q", n)


def u32(n: int) -> bytes:
    return _LEN.pack(n)


class Reader:
    """Cursor over an encoded buffer, mirrors :func:`field` and :func:`seq`."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("truncated input")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _LEN.unpack(self._take(4))[0]

    def field(self) -> bytes:
        return self._take(self.u32())

    def seq(self) -> list[bytes]:
        return [self.field() for _ in range(self.u32())]

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError("trailing bytes")


def iter_fields(data: bytes) -> Iterator[bytes]:
    r = Reader(data)
    while r.pos < len(data):
        yield r.field()
