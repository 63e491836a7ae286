# SPDX-License-Identifier: EUPL-1.2
#
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
PartHash Report Manager Module.

Writes the artefacts of a run into its report directory and renders them
for the terminal:

- ``eval_report.txt`` (text or markdown), ``cmc.csv`` and ``summary.csv``
  for an evaluation, with one extra summary row per part when the parts
  were also scored on their own,
- ``loss.csv`` for the training history of every part,
- ``bench.csv`` for the retrieval timing comparison.

Numbers are written with six decimals so identical runs produce identical
files.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final

import structlog
from rich.table import Table

from parthash.core.evalkit import SUMMARY_RANKS
from parthash.exceptions import DirectoryCreationError, ReportSaveError

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from parthash.config.appcontext import AppContext
    from parthash.core.evalkit import EvalReport, PartReport
    from parthash.core.hamcode import BenchReport
    from parthash.core.triplet import EpochLoss

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)


PART_COLUMNS: Final[tuple[str, ...]] = ("part", "bits", "mAP", "rank-1")


class OutputFormat(StrEnum):
    """Defines the supported output formats for the evaluation report."""

    text = "text"
    markdown = "markdown"


@dataclass(frozen=True)
class BenchRow:
    """Per-query milliseconds of one retrieval pipeline."""

    pipeline: str
    feature_extraction_ms: float
    distance_ms: float
    sorting_ms: float

    @property
    def total_ms(self) -> float:
        return self.feature_extraction_ms + self.distance_ms + self.sorting_ms


def bench_rows(report: BenchReport, feature_extraction_ms: float) -> list[BenchRow]:
    """Split a `BenchReport` into the Hamming and the Euclidean row."""
    return [
        BenchRow("hamming", feature_extraction_ms, report.hamming_distance_ms, report.hamming_sort_ms),
        BenchRow("euclidean", feature_extraction_ms, report.euclidean_distance_ms, report.euclidean_sort_ms),
    ]


def _number(value: float) -> str:
    return f"{value:.6f}"


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


class ReportManager:
    """
    Saves run reports into one directory and formats them for display.

    Attributes
    ----------
    report_dir (Path): Directory all report files are written to.
    output_format (OutputFormat): Format of ``eval_report.txt``.
    """

    EVAL_REPORT_NAME: Final[str] = "eval_report.txt"
    CMC_NAME: Final[str] = "cmc.csv"
    SUMMARY_NAME: Final[str] = "summary.csv"
    LOSS_NAME: Final[str] = "loss.csv"
    BENCH_NAME: Final[str] = "bench.csv"

    report_dir: Path
    output_format: OutputFormat

    def __init__(self, report_dir: Path, output_format: OutputFormat = OutputFormat.text) -> None:
        """
        Initialize the ReportManager and make sure ``report_dir`` exists.

        Raises:
        ------
            DirectoryCreationError: If the directory cannot be created.
        """
        self.report_dir = Path(report_dir)
        self.output_format = OutputFormat(output_format)
        try:
            self.report_dir.mkdir(parents=True, exist_ok=True)
            log.debug("Ensured report directory exists.", path=str(self.report_dir))
        except OSError as e:
            msg = f"Failed to create report directory {self.report_dir}"
            log.exception(msg, path=str(self.report_dir))
            raise DirectoryCreationError(msg, e) from e

    @classmethod
    def from_context(
        cls, context: AppContext, report_dir: Path, output_format: OutputFormat | None = None
    ) -> ReportManager:
        """
        Create a ReportManager whose default format comes from ``output.report_format``.

        An explicit ``output_format`` wins over the settings.
        """
        if output_format is None:
            configured = str(context.settings.get_setting("output", "report_format", OutputFormat.text.value))
            try:
                output_format = OutputFormat(configured.lower())
            except ValueError:
                log.warning("Unknown report format in settings. Using text.", configured=configured)
                output_format = OutputFormat.text
        return cls(report_dir=report_dir, output_format=output_format)

    def _write(self, name: str, text: str) -> Path:
        path = self.report_dir / name
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as e:
            msg = f"Could not write report file {path}"
            log.exception(msg, path=str(path))
            raise ReportSaveError(msg, e) from e
        log.debug("Report file written.", path=str(path))
        return path

    # --- evaluation ---

    def get_eval_summary(
        self,
        report: EvalReport,
        title: str,
        output_format: OutputFormat | None = None,
        parts: Sequence[PartReport] = (),
    ) -> str:
        """Render the evaluation report as plain text or markdown; per-part rows come last."""
        fmt = OutputFormat(output_format or self.output_format)
        rows = [("mAP", _number(report.mean_ap))]
        rows += [(f"rank-{r}", _number(report.rank(r))) for r in SUMMARY_RANKS]
        rows += [("queries scored", str(report.query_count)), ("queries skipped", str(report.skipped))]
        part_rows = [
            (str(part.part), part.bit_range, _number(part.report.mean_ap), _number(part.report.rank(1)))
            for part in parts
        ]

        if fmt == OutputFormat.markdown:
            body = "\n".join(f"| {name} | {value} |" for name, value in rows)
            text = f"## Evaluation: {title}\n\n| metric | value |\n|---|---|\n{body}\n"
            if part_rows:
                lines = "\n".join(f"| {' | '.join(row)} |" for row in part_rows)
                head = f"| {' | '.join(PART_COLUMNS)} |\n|{'---|' * len(PART_COLUMNS)}"
                text += f"\n### Parts alone\n\n{head}\n{lines}\n"
            return text
        width = max(len(name) for name, _ in rows)
        body = "\n".join(f"{name:<{width}}  {value}" for name, value in rows)
        text = f"Evaluation: {title}\n{body}\n"
        if part_rows:
            table = [PART_COLUMNS, *part_rows]
            widths = [max(len(row[column]) for row in table) for column in range(len(PART_COLUMNS))]
            lines = ("  ".join(cell.ljust(w) for cell, w in zip(row, widths, strict=True)).rstrip() for row in table)
            text += "\nParts alone:\n" + "\n".join(lines) + "\n"
        return text

    def cmc_csv(self, report: EvalReport) -> str:
        return _csv_text(("rank", "cmc"), ((r, _number(value)) for r, value in enumerate(report.cmc, start=1)))

    def summary_csv(self, report: EvalReport, parts: Sequence[PartReport] = ()) -> str:
        """One ``full`` row for the whole code, then one ``part_<k>`` row per part."""
        labelled = [("full", report), *((f"part_{part.part}", part.report) for part in parts)]
        rows = [
            [label, *(_number(scored.rank(r)) for r in SUMMARY_RANKS), _number(scored.mean_ap), str(scored.skipped)]
            for label, scored in labelled
        ]
        return _csv_text(("code", *report.summary()), rows)

    def save_eval_report(self, report: EvalReport, title: str, parts: Sequence[PartReport] = ()) -> list[Path]:
        """
        Write ``eval_report.txt``, ``cmc.csv`` and ``summary.csv``.

        ``cmc.csv`` always describes the full code.

        Raises:
        ------
            ReportSaveError: If a file cannot be written.
        """
        paths = [
            self._write(self.EVAL_REPORT_NAME, self.get_eval_summary(report, title, parts=parts)),
            self._write(self.CMC_NAME, self.cmc_csv(report)),
            self._write(self.SUMMARY_NAME, self.summary_csv(report, parts)),
        ]
        log.info("Evaluation report saved.", path=str(self.report_dir), mAP=report.mean_ap, parts=len(parts))
        return paths

    # --- training ---

    def loss_csv(self, histories: Sequence[Sequence[EpochLoss]]) -> str:
        rows = (
            (part, row.epoch, _number(row.mean_loss), _number(row.active_fraction))
            for part, history in enumerate(histories)
            for row in history
        )
        return _csv_text(("part", "epoch", "mean_loss", "active_fraction"), rows)

    def save_loss_history(self, histories: Sequence[Sequence[EpochLoss]]) -> Path:
        """Write one ``loss.csv`` row per (part, epoch)."""
        return self._write(self.LOSS_NAME, self.loss_csv(histories))

    # --- benchmark ---

    def bench_csv(self, rows: Sequence[BenchRow]) -> str:
        return _csv_text(
            ("pipeline", "feature_extraction_ms", "distance_ms", "sorting_ms", "total_ms"),
            (
                (
                    row.pipeline,
                    _number(row.feature_extraction_ms),
                    _number(row.distance_ms),
                    _number(row.sorting_ms),
                    _number(row.total_ms),
                )
                for row in rows
            ),
        )

    def save_bench(self, rows: Sequence[BenchRow]) -> Path:
        return self._write(self.BENCH_NAME, self.bench_csv(rows))


# --- terminal rendering ---


def eval_table(report: EvalReport, title: str) -> Table:
    """Rich table with mAP, the summary ranks and the query tallies."""
    table = Table(title=f"Evaluation: {title}")
    table.add_column("metric", style="cyan")
    table.add_column("value", justify="right", style="green")
    table.add_row("mAP", f"{report.mean_ap:.4f}")
    for r in SUMMARY_RANKS:
        table.add_row(f"rank-{r}", f"{report.rank(r):.4f}")
    table.add_row("queries scored", str(report.query_count))
    table.add_row("queries skipped", str(report.skipped))
    return table


def parts_table(parts: Sequence[PartReport], report: EvalReport) -> Table:
    """Each part's bits alone next to the full concatenated code."""
    table = Table(title="Parts alone")
    for heading in PART_COLUMNS:
        table.add_column(heading, justify="left" if heading == "part" else "right", style="cyan")
    for part in parts:
        table.add_row(str(part.part), part.bit_range, f"{part.report.mean_ap:.4f}", f"{part.report.rank(1):.4f}")
    table.add_row("full", "all", f"{report.mean_ap:.4f}", f"{report.rank(1):.4f}", style="bold green")
    return table


def bench_table(rows: Sequence[BenchRow], report: BenchReport) -> Table:
    """Rich table of per-query milliseconds, one row per pipeline."""
    table = Table(title=f"Retrieval time per query (n={report.gallery_size}, L={report.bit_length})")
    table.add_column("pipeline", style="cyan")
    for heading in ("feature extraction", "distance", "sorting", "total"):
        table.add_column(f"{heading} [ms]", justify="right")
    for row in rows:
        table.add_row(
            row.pipeline,
            f"{row.feature_extraction_ms:.3f}",
            f"{row.distance_ms:.3f}",
            f"{row.sorting_ms:.3f}",
            f"{row.total_ms:.3f}",
        )
    table.caption = f"speed-up {report.speedup:.1f}x, rankings agree: {report.rankings_agree}"
    return table
