# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
Cross-camera retrieval metrics: CMC and mean average precision.

For a query ``(identity, camera)`` the gallery splits into *good* records
(same identity, other camera) and *junk* records (same identity, same
camera; distractors too unless they are kept as ranking noise). Junk is
deleted from the ranking, order preserved, before anything is scored.

Queries without any good record are skipped and counted, not scored as 0.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final, Literal

import numpy as np
import structlog
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from parthash.core.dataio import DISTRACTOR_ID
from parthash.core.hamcode import CodeIndex, Ranking, binarize_matrix, rank_counting
from parthash.exceptions import CodeDomainError, DimensionError, EvaluationError, IngestionError

if TYPE_CHECKING:
    from collections.abc import Collection, Sequence

    from parthash.core.dataio import PersonImage
    from parthash.core.netcore import FloatArray

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

SUMMARY_RANKS: Final[tuple[int, ...]] = (1, 5, 10, 20)

PoolingMode = Literal["avg", "max"]


@dataclass(frozen=True)
class GalleryRecord:
    """Labels of one query or gallery image; distractors never match anything."""

    record_id: str
    identity: int
    camera: int
    is_distractor: bool = False

    @classmethod
    def from_image(cls, image: PersonImage) -> GalleryRecord:
        return cls(image.source_id, image.identity, image.camera, image.is_distractor)


class EvalProtocol(BaseModel):
    """
    Scoring options.

    Attributes
    ----------
    max_rank (int):
        Length of the reported CMC curve.
    distractors_as_junk (bool):
        Drop distractors from rankings (dataset convention). When false they
        stay in the ranking as wrong matches, which is how gallery inflation
        is stress-tested.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_rank: int = Field(default=50, ge=1)
    distractors_as_junk: bool = True


@dataclass(frozen=True)
class QueryResult:
    """Score of one query; ``average_precision`` is ``None`` for a skipped query."""

    query_id: str
    average_precision: float | None
    first_good_rank: int | None

    @property
    def skipped(self) -> bool:
        return self.average_precision is None


@dataclass(frozen=True)
class EvalReport:
    """Aggregated metrics over all scored queries."""

    cmc: NDArray[np.float64]
    mean_ap: float
    query_count: int
    skipped: int
    results: tuple[QueryResult, ...] = field(default=(), repr=False)

    @property
    def max_rank(self) -> int:
        return len(self.cmc)

    def rank(self, r: int) -> float:
        """Fraction of scored queries whose first good match is at rank ``<= r``."""
        if r < 1:
            msg = f"Ranks start at 1, got {r}."
            raise EvaluationError(msg)
        if r <= self.max_rank:
            return float(self.cmc[r - 1])
        hits = [res.first_good_rank for res in self.results if not res.skipped]
        if not hits:
            return float(self.cmc[-1])
        return float(np.mean([rank is not None and rank <= r for rank in hits]))

    def summary(self) -> dict[str, float | int]:
        """``rank1, rank5, rank10, rank20, mAP, skipped``."""
        row: dict[str, float | int] = {f"rank{r}": self.rank(r) for r in SUMMARY_RANKS}
        row["mAP"] = self.mean_ap
        row["skipped"] = self.skipped
        return row


# --- per-query scoring ---


@dataclass(frozen=True)
class _GalleryLabels:
    identities: NDArray[np.int64]
    cameras: NDArray[np.int64]
    distractor: NDArray[np.bool_]

    @classmethod
    def of(cls, gallery: Sequence[GalleryRecord]) -> _GalleryLabels:
        return cls(
            identities=np.array([rec.identity for rec in gallery], dtype=np.int64),
            cameras=np.array([rec.camera for rec in gallery], dtype=np.int64),
            distractor=np.array([rec.is_distractor for rec in gallery], dtype=bool),
        )

    def masks(self, identity: int, camera: int, *, distractors_as_junk: bool) -> tuple[NDArray[np.bool_], ...]:
        if identity == DISTRACTOR_ID:
            same = np.zeros(self.identities.shape, dtype=bool)
        else:
            same = (self.identities == identity) & ~self.distractor
        good = same & (self.cameras != camera)
        junk = same & (self.cameras == camera)
        if distractors_as_junk:
            junk |= self.distractor
        return good, junk


def good_junk_split(
    query: tuple[int, int], gallery: Sequence[GalleryRecord], *, distractors_as_junk: bool = True
) -> tuple[frozenset[int], frozenset[int]]:
    """
    Split gallery positions into good and junk sets for one ``(identity, camera)`` query.

    Everything outside both sets is a wrong match.
    """
    identity, camera = query
    good, junk = _GalleryLabels.of(gallery).masks(identity, camera, distractors_as_junk=distractors_as_junk)
    return frozenset(np.flatnonzero(good).tolist()), frozenset(np.flatnonzero(junk).tolist())


def _score_hits(hits: NDArray[np.bool_], good_count: int) -> tuple[float, int | None]:
    positions = np.flatnonzero(hits) + 1
    if positions.size == 0:
        return 0.0, None
    precision = np.arange(1, positions.size + 1) / positions
    return float(precision.sum() / good_count), int(positions[0])


def average_precision(
    ranking: Ranking | Sequence[int] | NDArray[Any], good: Collection[int], junk: Collection[int] = ()
) -> float | None:
    """
    Mean of the precision at each good item's rank, junk removed first.

    Good items missing from the ranking contribute precision 0. Returns
    ``None`` when ``good`` is empty.
    """
    if not good:
        return None
    order = np.asarray(ranking.indices if isinstance(ranking, Ranking) else ranking, dtype=np.int64)
    kept = order[~np.isin(order, np.fromiter(junk, dtype=np.int64))]
    hits = np.isin(kept, np.fromiter(good, dtype=np.int64))
    return _score_hits(hits, len(good))[0]


def _evaluate_query(
    query_id: str,
    identity: int,
    camera: int,
    ranking: Ranking,
    labels: _GalleryLabels,
    protocol: EvalProtocol,
) -> QueryResult:
    good, junk = labels.masks(identity, camera, distractors_as_junk=protocol.distractors_as_junk)
    good_count = int(good.sum())
    if good_count == 0:
        return QueryResult(query_id, None, None)
    order = ranking.indices
    hits = good[order][~junk[order]]
    ap, first = _score_hits(hits, good_count)
    return QueryResult(query_id, ap, first)


# --- aggregation ---


def aggregate(results: Sequence[QueryResult], max_rank: int) -> EvalReport:
    """
    Combine per-query results into CMC and mAP.

    Raises:
        EvaluationError: If every query was skipped.
    """
    scored = [res for res in results if not res.skipped]
    skipped = len(results) - len(scored)
    if not scored:
        msg = f"None of the {len(results)} queries has a good match in the gallery."
        raise EvaluationError(msg)
    first = np.array([res.first_good_rank or 0 for res in scored], dtype=np.int64)
    found = first > 0
    counts = np.bincount(first[found], minlength=max_rank + 1)[1 : max_rank + 1]
    cmc = np.cumsum(counts) / len(scored)
    mean_ap = float(np.mean([res.average_precision for res in scored]))
    return EvalReport(cmc=cmc, mean_ap=mean_ap, query_count=len(scored), skipped=skipped, results=tuple(results))


def evaluate(
    queries: Sequence[GalleryRecord],
    query_codes: CodeIndex,
    gallery: Sequence[GalleryRecord],
    gallery_codes: CodeIndex,
    protocol: EvalProtocol | None = None,
    *,
    workers: int | None = 1,
) -> EvalReport:
    """
    Rank the gallery for every query by Hamming distance and score the rankings.

    Queries are evaluated concurrently on ``workers`` threads; the report
    does not depend on the worker count.

    Raises:
        DimensionError: If codes and records disagree in count or length.
        EvaluationError: If every query was skipped.
    """
    protocol = protocol or EvalProtocol()
    if len(queries) != len(query_codes) or len(gallery) != len(gallery_codes):
        msg = (
            f"Records and codes disagree: {len(queries)} queries / {len(query_codes)} codes, "
            f"{len(gallery)} gallery records / {len(gallery_codes)} codes."
        )
        raise DimensionError(msg)
    if query_codes.bit_length != gallery_codes.bit_length:
        msg = f"Query codes have {query_codes.bit_length} bits, gallery codes {gallery_codes.bit_length}."
        raise DimensionError(msg)

    labels = _GalleryLabels.of(gallery)

    def score(position: int) -> QueryResult:
        query = queries[position]
        ranking = rank_counting(query_codes.code(position), gallery_codes)
        return _evaluate_query(query.record_id, query.identity, query.camera, ranking, labels, protocol)

    log.info("Evaluating.", queries=len(queries), gallery=len(gallery), bits=gallery_codes.bit_length)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(score, range(len(queries))))
    report = aggregate(results, protocol.max_rank)
    log.info("Evaluation finished.", rank1=report.rank(1), mAP=report.mean_ap, skipped=report.skipped)
    return report


# --- multiple-query pooling ---


def pool_queries(relaxed_codes: Sequence[Any] | NDArray[Any], mode: PoolingMode = "avg") -> FloatArray:
    """
    Pool relaxed codes of one identity under one camera into a single vector.

    ``avg`` takes the elementwise mean, ``max`` the elementwise maximum.

    Raises:
        CodeDomainError: If the list is empty or a value lies outside [0, 1].
        DimensionError: If the vectors differ in length.
    """
    if len(relaxed_codes) == 0:
        msg = "Cannot pool an empty list of query codes."
        raise CodeDomainError(msg)
    lengths = {len(code) for code in relaxed_codes}
    if len(lengths) != 1:
        msg = f"Pooled codes must share one length, got {sorted(lengths)}."
        raise DimensionError(msg)
    stacked = np.asarray(relaxed_codes, dtype=np.float64)
    if not np.all((stacked >= 0.0) & (stacked <= 1.0)):
        msg = "Relaxed codes must lie in [0, 1]."
        raise CodeDomainError(msg)
    if mode == "avg":
        return stacked.mean(axis=0)
    if mode == "max":
        return stacked.max(axis=0)
    msg = f"Unknown pooling mode {mode!r}; use 'avg' or 'max'."
    raise CodeDomainError(msg)


def group_queries(queries: Sequence[GalleryRecord]) -> dict[tuple[int, int], list[int]]:
    """Query positions grouped by ``(identity, camera)``, groups in first-seen order."""
    groups: dict[tuple[int, int], list[int]] = defaultdict(list)
    for position, query in enumerate(queries):
        groups[query.identity, query.camera].append(position)
    return dict(groups)


def evaluate_pooled(
    queries: Sequence[GalleryRecord],
    query_relaxed: Any,
    gallery: Sequence[GalleryRecord],
    gallery_codes: CodeIndex,
    mode: PoolingMode = "avg",
    protocol: EvalProtocol | None = None,
    *,
    workers: int | None = 1,
) -> EvalReport:
    """
    Multiple-query evaluation: one pooled, then binarized, query per
    ``(identity, camera)`` group.

    Raises:
        DimensionError: If relaxed codes and records disagree.
        EvaluationError: If every pooled query was skipped.
    """
    if not queries:
        msg = "No queries to evaluate."
        raise EvaluationError(msg)
    relaxed = np.asarray(query_relaxed, dtype=np.float64)
    if relaxed.ndim != 2 or relaxed.shape[0] != len(queries):  # noqa: PLR2004
        msg = f"Expected {len(queries)} relaxed query codes, got an array of shape {relaxed.shape}."
        raise DimensionError(msg)

    groups = group_queries(queries)
    pooled = np.stack([pool_queries(relaxed[members], mode) for members in groups.values()])
    records = [
        GalleryRecord(f"{identity}_c{camera}", identity, camera, queries[members[0]].is_distractor)
        for (identity, camera), members in groups.items()
    ]
    codes = CodeIndex(relaxed.shape[1], binarize_matrix(pooled), [rec.record_id for rec in records])
    log.info("Pooled queries.", mode=mode, queries=len(queries), groups=len(records))
    return evaluate(records, codes, gallery, gallery_codes, protocol, workers=workers)


# --- per-part retrieval ---


@dataclass(frozen=True)
class PartReport:
    """Retrieval scored with the bits ``[start, stop)`` of one part alone."""

    part: int
    start: int
    stop: int
    report: EvalReport

    @property
    def bit_range(self) -> str:
        """Inclusive bit range, e.g. ``"8-15"``."""
        return f"{self.start}-{self.stop - 1}"


def part_ranges(bit_length: int, per_part_bits: int) -> list[tuple[int, int]]:
    """
    Bit ranges ``[k * q, (k + 1) * q)`` of the parts of a concatenated code.

    Raises:
        DimensionError: If ``q`` is not positive or does not divide the code length.
    """
    if per_part_bits < 1 or bit_length % per_part_bits:
        msg = f"{bit_length}-bit codes cannot be split into parts of {per_part_bits} bits."
        raise DimensionError(msg)
    return [(start, start + per_part_bits) for start in range(0, bit_length, per_part_bits)]


def evaluate_per_part(
    queries: Sequence[GalleryRecord],
    query_codes: CodeIndex,
    gallery: Sequence[GalleryRecord],
    gallery_codes: CodeIndex,
    per_part_bits: int,
    protocol: EvalProtocol | None = None,
    *,
    pooling: PoolingMode | Literal["single"] = "single",
    query_relaxed: Any = None,
    workers: int | None = 1,
) -> list[PartReport]:
    """
    Score every part's slice of the codes on its own, ranking by that slice only.

    With ``avg`` or ``max`` pooling the matching columns of ``query_relaxed``
    are pooled per group, as `evaluate_pooled` does for the full code.

    Raises:
        DimensionError: If the code length is not a multiple of ``per_part_bits``
            or pooling is requested without relaxed codes.
        EvaluationError: If every query was skipped.
    """
    ranges = part_ranges(gallery_codes.bit_length, per_part_bits)
    relaxed = None
    if pooling != "single":
        if query_relaxed is None:
            msg = f"{pooling} pooling needs the relaxed query codes."
            raise DimensionError(msg)
        relaxed = np.asarray(query_relaxed, dtype=np.float64)

    reports = []
    for part, (start, stop) in enumerate(ranges):
        gallery_part = gallery_codes.bit_slice(start, stop)
        if relaxed is None:
            report = evaluate(
                queries, query_codes.bit_slice(start, stop), gallery, gallery_part, protocol, workers=workers
            )
        else:
            report = evaluate_pooled(
                queries, relaxed[:, start:stop], gallery, gallery_part, pooling, protocol, workers=workers
            )
        log.debug("Part evaluated.", part=part, bits=(start, stop), mAP=report.mean_ap)
        reports.append(PartReport(part, start, stop, report))
    return reports


# --- label files ---

LABEL_HEADER: Final[tuple[str, ...]] = ("record_id", "identity", "camera", "is_distractor")


def write_labels_csv(records: Sequence[GalleryRecord], path: Path) -> None:
    """Write one ``record_id,identity,camera,is_distractor`` row per record."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(LABEL_HEADER)
        writer.writerows(
            (rec.record_id, rec.identity, rec.camera, str(rec.is_distractor).lower()) for rec in records
        )


def read_labels_csv(path: Path) -> list[GalleryRecord]:
    """
    Read a file written by `write_labels_csv`.

    Raises:
        IngestionError: If the file cannot be read.
        EvaluationError: If the header or a row is malformed.
    """
    try:
        with Path(path).open(encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as e:
        msg = f"Cannot read label file {path}"
        raise IngestionError(msg, e) from e
    if not rows or tuple(rows[0]) != LABEL_HEADER:
        msg = f"{path}: expected header {','.join(LABEL_HEADER)}"
        raise EvaluationError(msg)
    records = []
    for number, row in enumerate(rows[1:], start=2):
        try:
            record_id, identity, camera, distractor = row
            records.append(GalleryRecord(record_id, int(identity), int(camera), distractor == "true"))
        except ValueError as e:
            msg = f"{path}:{number}: malformed label row {row!r}"
            raise EvaluationError(msg, e) from e
    return records


def check_alignment(records: Sequence[GalleryRecord], codes: CodeIndex, what: str) -> None:
    """
    Labels and codes must list the same record ids in the same order.

    Raises:
        EvaluationError: On any difference.
    """
    ids = tuple(rec.record_id for rec in records)
    if ids != codes.ids:
        msg = f"The {what} labels ({len(ids)} records) do not match the {what} codes ({len(codes)} records)."
        raise EvaluationError(msg)
