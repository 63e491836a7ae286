# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""Offset-tracking reader shared by the checkpoint, code and pixmap formats."""

from __future__ import annotations

import struct
from typing import Any

from parthash.exceptions import FormatError


class ByteReader:
    """
    Sequential little-endian reader over an in-memory buffer.

    Every failure raises `FormatError` carrying the byte offset at which the
    problem was found.
    """

    def __init__(self, data: bytes, what: str) -> None:
        self._data = memoryview(data)
        self._what = what
        self.offset = 0

    @property
    def remaining(self) -> int:
        """Number of unread bytes."""
        return len(self._data) - self.offset

    def fail(self, message: str, offset: int | None = None) -> FormatError:
        """Build a `FormatError` for this buffer (the caller raises it)."""
        return FormatError(f"{self._what}: {message}", self.offset if offset is None else offset)

    def read(self, count: int) -> bytes:
        """Read exactly ``count`` bytes."""
        if count < 0 or count > self.remaining:
            msg = f"truncated, wanted {count} bytes, {self.remaining} left"
            raise self.fail(msg)
        chunk = bytes(self._data[self.offset : self.offset + count])
        self.offset += count
        return chunk

    def unpack(self, fmt: str) -> tuple[Any, ...]:
        """Read and unpack one `struct` format (always little-endian)."""
        layout = struct.Struct("<" + fmt)
        return layout.unpack(self.read(layout.size))

    def u8(self) -> int:
        return int(self.unpack("B")[0])

    def u32(self) -> int:
        return int(self.unpack("I")[0])

    def u64(self) -> int:
        return int(self.unpack("Q")[0])

    def expect_magic(self, magic: bytes) -> None:
        """Consume ``magic`` or fail at offset 0."""
        head = bytes(self._data[: len(magic)])
        if head != magic:
            msg = f"bad magic {head!r}, expected {magic!r}"
            raise self.fail(msg, 0)
        self.offset = len(magic)

    def expect_end(self) -> None:
        """Fail when trailing bytes remain."""
        if self.remaining:
            msg = f"{self.remaining} trailing bytes"
            raise self.fail(msg)
