# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
Packed binary codes and Hamming-distance retrieval.

Bit ``i`` of a code lives in bit ``i % 64`` of word ``i // 64``; words are
unsigned 64-bit integers and padding bits past ``bit_length`` are always
zero. Distances are ``popcount(a XOR b)`` via `numpy.bitwise_count`.

Ranking sorts the integer distances (bounded by the code length) with stable
radix passes over 16-bit digits, so a full ranking costs O(n) and ties keep
ascending gallery order. `top_k` first reads the cut-off distance off the
distance histogram and only sorts entries at or below it.

Code files use the ``PDHCODE1`` layout::

    b"PDHCODE1\\n"
    u32 L, u64 n
    n records: u32 id byte length, utf-8 id, ceil(L / 8) code bytes
               (little-endian bit order inside each byte)
"""

from __future__ import annotations

import math
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final

import numpy as np
import structlog
from numpy.typing import NDArray

from parthash.core.binio import ByteReader
from parthash.exceptions import CodeDomainError, DimensionError, FormatError

if TYPE_CHECKING:
    from collections.abc import Sequence

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

WORD_BITS: Final[int] = 64
CODE_FILE_MAGIC: Final[bytes] = b"PDHCODE1\n"
THRESHOLD: Final[float] = 0.5
_DIGIT_BITS: Final[int] = 16
_DIGIT_MASK: Final[int] = (1 << _DIGIT_BITS) - 1

WordArray = NDArray[np.uint64]


def word_count(bit_length: int) -> int:
    return math.ceil(bit_length / WORD_BITS)


def pack_bits(bits: Any) -> WordArray:
    """Pack an ``(n, L)`` boolean matrix into ``(n, ceil(L / 64))`` words."""
    matrix = np.asarray(bits, dtype=bool)
    if matrix.ndim != 2:  # noqa: PLR2004
        msg = f"Expected an (n, L) bit matrix, got shape {matrix.shape}."
        raise DimensionError(msg)
    rows, bit_length = matrix.shape
    packed = np.packbits(matrix, axis=1, bitorder="little")
    padded = np.zeros((rows, word_count(bit_length) * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view("<u8").astype(np.uint64)


def unpack_bits(words: Any, bit_length: int) -> NDArray[np.bool_]:
    """Inverse of `pack_bits`."""
    matrix = np.ascontiguousarray(words, dtype="<u8")
    if matrix.ndim != 2 or matrix.shape[1] != word_count(bit_length):  # noqa: PLR2004
        msg = f"Expected (n, {word_count(bit_length)}) words for {bit_length} bits, got {matrix.shape}."
        raise DimensionError(msg)
    as_bytes = matrix.view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, count=bit_length, bitorder="little").astype(bool)


def _padding_mask(bit_length: int) -> np.uint64:
    used = bit_length % WORD_BITS
    if used == 0:
        return np.uint64(0)
    return ~np.uint64((1 << used) - 1)


def _check_relaxed(relaxed: Any) -> NDArray[np.float64]:
    values = np.asarray(relaxed, dtype=np.float64)
    if values.size and not (np.all(values >= 0.0) and np.all(values <= 1.0)):
        msg = "Relaxed code values must lie in [0, 1]."
        raise CodeDomainError(msg)
    return values


class BitCode:
    """
    One packed binary code.

    Attributes
    ----------
    bit_length (int):
        Number of meaningful bits L.
    words (ndarray[uint64]):
        ``ceil(L / 64)`` read-only words; padding bits are zero.
    """

    __slots__ = ("_bit_length", "_words")

    def __init__(self, bit_length: int, words: Any) -> None:
        if bit_length <= 0:
            msg = f"Code length must be positive, got {bit_length}."
            raise DimensionError(msg)
        array = np.array(words, dtype=np.uint64).reshape(-1)
        if array.size != word_count(bit_length):
            msg = f"{bit_length} bits need {word_count(bit_length)} words, got {array.size}."
            raise DimensionError(msg)
        if array[-1] & _padding_mask(bit_length):
            msg = "Padding bits of a code must be zero."
            raise CodeDomainError(msg)
        array.setflags(write=False)
        self._bit_length = bit_length
        self._words = array

    @classmethod
    def from_bits(cls, bits: Any) -> BitCode:
        vector = np.asarray(bits, dtype=bool).reshape(-1)
        return cls(vector.size, pack_bits(vector[None, :])[0])

    @property
    def bit_length(self) -> int:
        return self._bit_length

    @property
    def words(self) -> WordArray:
        return self._words

    def to_bits(self) -> NDArray[np.bool_]:
        return unpack_bits(self._words[None, :], self._bit_length)[0]

    def to_bytes(self) -> bytes:
        """``ceil(L / 8)`` bytes, little-endian bit order."""
        return self._words.astype("<u8").tobytes()[: math.ceil(self._bit_length / 8)]

    @classmethod
    def from_bytes(cls, data: bytes, bit_length: int) -> BitCode:
        """
        Inverse of `to_bytes`.

        Raises:
            CodeDomainError: If padding bits are set.
        """
        buffer = np.zeros(word_count(bit_length) * 8, dtype=np.uint8)
        buffer[: len(data)] = np.frombuffer(data, dtype=np.uint8)
        return cls(bit_length, buffer.view("<u8"))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitCode):
            return NotImplemented
        return self._bit_length == other.bit_length and np.array_equal(self._words, other.words)

    def __hash__(self) -> int:
        return hash((self._bit_length, self._words.tobytes()))

    def __len__(self) -> int:
        return self._bit_length

    def __str__(self) -> str:
        return "".join("1" if bit else "0" for bit in self.to_bits())

    def __repr__(self) -> str:
        if self._bit_length <= WORD_BITS:
            return f"BitCode({self._bit_length}, {self!s})"
        return f"BitCode({self._bit_length})"


def binarize(relaxed: Any) -> BitCode:
    """
    Threshold a relaxed code: bit ``i`` is 1 iff ``relaxed[i] > 0.5``.

    Raises:
        CodeDomainError: If a value lies outside [0, 1] or is NaN.
    """
    values = _check_relaxed(relaxed).reshape(-1)
    return BitCode.from_bits(values > THRESHOLD)


def binarize_matrix(relaxed: Any) -> WordArray:
    """Row-wise `binarize` of an ``(n, L)`` matrix, returned as packed words."""
    return pack_bits(_check_relaxed(relaxed) > THRESHOLD)


def hamming(a: BitCode, b: BitCode) -> int:
    """
    Number of differing bits.

    Raises:
        DimensionError: If the code lengths differ.
    """
    if a.bit_length != b.bit_length:
        msg = f"Cannot compare codes of {a.bit_length} and {b.bit_length} bits."
        raise DimensionError(msg)
    return int(np.bitwise_count(a.words ^ b.words).sum())


@dataclass(frozen=True)
class Ranking:
    """Gallery indices by ascending distance, ties by ascending index."""

    indices: NDArray[np.int64]
    distances: NDArray[np.int64]

    def __len__(self) -> int:
        return len(self.indices)

    def prefix(self, k: int) -> Ranking:
        return Ranking(self.indices[:k], self.distances[:k])

    @classmethod
    def empty(cls) -> Ranking:
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))


class CodeIndex:
    """
    Immutable gallery of equal-length codes with parallel record ids.

    Safe for any number of concurrent readers.
    """

    def __init__(self, bit_length: int, words: Any, ids: Sequence[str]) -> None:
        matrix = np.array(words, dtype=np.uint64).reshape(-1, word_count(bit_length))
        if matrix.shape[0] != len(ids):
            msg = f"{matrix.shape[0]} codes but {len(ids)} ids."
            raise DimensionError(msg)
        if matrix.size and np.any(matrix[:, -1] & _padding_mask(bit_length)):
            msg = "Padding bits of a code must be zero."
            raise CodeDomainError(msg)
        matrix.setflags(write=False)
        self._bit_length = bit_length
        self._words = matrix
        self._ids = tuple(ids)

    @classmethod
    def from_codes(cls, codes: Sequence[BitCode], ids: Sequence[str]) -> CodeIndex:
        lengths = {code.bit_length for code in codes}
        if len(lengths) > 1:
            msg = f"All codes of an index share one length, got {sorted(lengths)}."
            raise DimensionError(msg)
        if not codes:
            msg = "Use CodeIndex(bit_length, [], []) for an empty index."
            raise DimensionError(msg)
        return cls(lengths.pop(), np.stack([code.words for code in codes]), ids)

    @classmethod
    def from_relaxed(cls, relaxed: Any, ids: Sequence[str]) -> CodeIndex:
        values = np.asarray(relaxed, dtype=np.float64)
        if values.ndim != 2:  # noqa: PLR2004
            msg = f"Expected an (n, L) relaxed code matrix, got {values.shape}."
            raise DimensionError(msg)
        return cls(values.shape[1], binarize_matrix(values), ids)

    @property
    def bit_length(self) -> int:
        return self._bit_length

    @property
    def words(self) -> WordArray:
        return self._words

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    def __len__(self) -> int:
        return self._words.shape[0]

    def code(self, position: int) -> BitCode:
        return BitCode(self._bit_length, self._words[position])

    def distances(self, query: BitCode) -> NDArray[np.int64]:
        """Hamming distance from ``query`` to every gallery code."""
        if query.bit_length != self._bit_length:
            msg = f"Query has {query.bit_length} bits, index has {self._bit_length}."
            raise DimensionError(msg)
        return np.bitwise_count(self._words ^ query.words[None, :]).sum(axis=1, dtype=np.int64)

    def bit_slice(self, start: int, stop: int) -> CodeIndex:
        """
        Bits ``[start, stop)`` of every code as a new index with the same ids.

        Raises:
            DimensionError: If the range is empty or exceeds the code length.
        """
        if not 0 <= start < stop <= self._bit_length:
            msg = f"Bit range [{start}, {stop}) does not fit {self._bit_length}-bit codes."
            raise DimensionError(msg)
        bits = unpack_bits(self._words, self._bit_length)[:, start:stop]
        return CodeIndex(stop - start, pack_bits(bits), self._ids)


def counting_order(keys: NDArray[np.int64], max_key: int) -> NDArray[np.int64]:
    """
    Stable ascending order of non-negative integer keys up to ``max_key``.

    Keys are placed by least-significant-digit passes over 16-bit digits.
    Each pass is numpy's stable radix sort for ``uint16``, so every code
    length costs O(n) per pass and one pass covers ``L <= 65535``.
    """
    keys = np.asarray(keys, dtype=np.int64)
    order = np.arange(keys.size, dtype=np.int64)
    shift = 0
    while True:
        digit = ((keys[order] >> shift) & _DIGIT_MASK).astype(np.uint16)
        order = order[np.argsort(digit, kind="stable")]
        shift += _DIGIT_BITS
        if max_key >> shift == 0:
            return order


def distance_histogram(distances: NDArray[np.int64], bit_length: int) -> NDArray[np.int64]:
    """Count of gallery entries per distance value ``0..L``."""
    return np.bincount(distances, minlength=bit_length + 1).astype(np.int64)


def rank_counting(query: BitCode, index: CodeIndex) -> Ranking:
    """
    Rank the whole index by Hamming distance to ``query``.

    Raises:
        DimensionError: If the query length differs from the index.
    """
    if len(index) == 0:
        if query.bit_length != index.bit_length:
            msg = f"Query has {query.bit_length} bits, index has {index.bit_length}."
            raise DimensionError(msg)
        return Ranking.empty()
    distances = index.distances(query)
    order = counting_order(distances, index.bit_length)
    return Ranking(order, distances[order])


def top_k(query: BitCode, index: CodeIndex, k: int) -> Ranking:
    """
    The first ``min(k, n)`` entries of `rank_counting`.

    Raises:
        DimensionError: If ``k < 1`` or the lengths differ.
    """
    if k < 1:
        msg = f"k must be at least 1, got {k}."
        raise DimensionError(msg)
    if k >= len(index):
        return rank_counting(query, index)
    distances = index.distances(query)
    cumulative = np.cumsum(distance_histogram(distances, index.bit_length))
    cutoff = int(np.searchsorted(cumulative, k))
    candidates = np.flatnonzero(distances <= cutoff)
    order = candidates[counting_order(distances[candidates], index.bit_length)][:k]
    return Ranking(order.astype(np.int64), distances[order])


# --- code files ---


def to_code_file_bytes(index: CodeIndex) -> bytes:
    """Serialise ``index`` in the ``PDHCODE1`` layout."""
    code_bytes = math.ceil(index.bit_length / 8)
    raw = np.ascontiguousarray(index.words, dtype="<u8").view(np.uint8)[:, :code_bytes]
    chunks = [CODE_FILE_MAGIC, struct.pack("<IQ", index.bit_length, len(index))]
    for record_id, row in zip(index.ids, raw, strict=True):
        encoded = record_id.encode("utf-8")
        chunks += [struct.pack("<I", len(encoded)), encoded, row.tobytes()]
    return b"".join(chunks)


def from_code_file_bytes(data: bytes, source: str = "code file") -> CodeIndex:
    """
    Parse a ``PDHCODE1`` buffer.

    Raises:
        FormatError: On bad magic, truncation, bad utf-8 or set padding bits.
    """
    reader = ByteReader(data, source)
    reader.expect_magic(CODE_FILE_MAGIC)
    bit_length = reader.u32()
    if bit_length == 0:
        msg = "code length must be positive"
        raise reader.fail(msg, len(CODE_FILE_MAGIC))
    count = reader.u64()
    code_bytes = math.ceil(bit_length / 8)
    if count * (4 + code_bytes) > reader.remaining:
        msg = f"header announces {count} records, buffer too short"
        raise reader.fail(msg)

    ids: list[str] = []
    buffer = np.zeros((count, word_count(bit_length) * 8), dtype=np.uint8)
    for row in range(count):
        id_offset = reader.offset
        raw_id = reader.read(reader.u32())
        try:
            ids.append(raw_id.decode("utf-8"))
        except UnicodeDecodeError as e:
            msg = f"{source}: record id is not utf-8"
            raise FormatError(msg, id_offset, e) from e
        code_offset = reader.offset
        buffer[row, :code_bytes] = np.frombuffer(reader.read(code_bytes), dtype=np.uint8)
        if bit_length % 8 and buffer[row, code_bytes - 1] >> (bit_length % 8):
            msg = "padding bits set"
            raise reader.fail(msg, code_offset)
    reader.expect_end()
    return CodeIndex(bit_length, buffer.view("<u8").astype(np.uint64), ids)


def write_code_file(index: CodeIndex, path: Path) -> None:
    path.write_bytes(to_code_file_bytes(index))
    log.info("Code file written.", path=str(path), codes=len(index), bits=index.bit_length)


def read_code_file(path: Path) -> CodeIndex:
    """
    Read a ``PDHCODE1`` file.

    Raises:
        FormatError: If the file cannot be read or parsed.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        msg = f"Cannot read code file {path}"
        raise FormatError(msg, None, e) from e
    return from_code_file_bytes(data, str(path))


# --- benchmark ---


@dataclass(frozen=True)
class BenchReport:
    """
    Mean per-query milliseconds of the two retrieval pipelines.

    ``hamming_*`` is packed codes with counting-sort ranking, ``euclidean_*``
    is unpacked float32 vectors with a comparison sort.
    """

    gallery_size: int
    bit_length: int
    repeats: int
    hamming_distance_ms: float
    hamming_sort_ms: float
    euclidean_distance_ms: float
    euclidean_sort_ms: float
    rankings_agree: bool

    @property
    def hamming_total_ms(self) -> float:
        return self.hamming_distance_ms + self.hamming_sort_ms

    @property
    def euclidean_total_ms(self) -> float:
        return self.euclidean_distance_ms + self.euclidean_sort_ms

    @property
    def speedup(self) -> float:
        return self.euclidean_total_ms / self.hamming_total_ms if self.hamming_total_ms > 0 else math.inf


def random_code_index(gallery_size: int, bit_length: int, seed: int) -> CodeIndex:
    """Uniformly random codes, generated directly as words."""
    rng = np.random.default_rng(seed)
    shape = (gallery_size, word_count(bit_length))
    words = rng.integers(0, np.iinfo(np.uint64).max, size=shape, dtype=np.uint64, endpoint=True)
    if gallery_size:
        words[:, -1] &= ~_padding_mask(bit_length)
    return CodeIndex(bit_length, words, [f"g{i}" for i in range(gallery_size)])


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def bench_search(gallery_size: int, bit_length: int, repeats: int, seed: int = 0) -> BenchReport:
    """
    Time both pipelines on the same random gallery and queries.

    Hamming distance between 0/1 vectors equals their squared Euclidean
    distance, so both pipelines must produce the same ranking; the report
    records whether they did.

    Raises:
        DimensionError: If an argument is not positive.
    """
    if min(gallery_size, bit_length, repeats) <= 0:
        msg = "Gallery size, code length and repeats must be positive."
        raise DimensionError(msg)

    index = random_code_index(gallery_size, bit_length, seed)
    queries = random_code_index(repeats, bit_length, seed + 1)
    dense = np.empty((gallery_size, bit_length), dtype=np.float32)
    chunk = 4096
    for start in range(0, gallery_size, chunk):
        dense[start : start + chunk] = unpack_bits(index.words[start : start + chunk], bit_length)
    dense_norms = np.einsum("ij,ij->i", dense, dense)

    totals = np.zeros(4)
    agree = True
    for position in range(repeats):
        query = queries.code(position)

        start = time.perf_counter()
        distances = index.distances(query)
        totals[0] += _elapsed_ms(start)
        start = time.perf_counter()
        order = counting_order(distances, bit_length)
        totals[1] += _elapsed_ms(start)

        query_dense = query.to_bits().astype(np.float32)
        start = time.perf_counter()
        squared = dense_norms + np.float32(query_dense @ query_dense) - np.float32(2.0) * (dense @ query_dense)
        totals[2] += _elapsed_ms(start)
        start = time.perf_counter()
        dense_order = np.argsort(squared, kind="stable")
        totals[3] += _elapsed_ms(start)

        agree = agree and bool(np.array_equal(order, dense_order))

    mean = totals / repeats
    report = BenchReport(
        gallery_size=gallery_size,
        bit_length=bit_length,
        repeats=repeats,
        hamming_distance_ms=float(mean[0]),
        hamming_sort_ms=float(mean[1]),
        euclidean_distance_ms=float(mean[2]),
        euclidean_sort_ms=float(mean[3]),
        rankings_agree=agree,
    )
    log.info(
        "Search benchmark finished.",
        gallery_size=gallery_size,
        bits=bit_length,
        hamming_ms=report.hamming_total_ms,
        euclidean_ms=report.euclidean_total_ms,
        speedup=report.speedup,
        rankings_agree=agree,
    )
    return report
