# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
The CLI eval Module for typer.

``parthash eval`` scores the code files written by ``encode`` and writes the
evaluation report into ``<output_dir>/eval_<pooling>``. With ``--per-part``
every part's ``per_part_bits`` slice is also ranked and scored on its own.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Annotated

import numpy as np
import structlog
import typer
from rich.console import Console

from parthash.cli.common import exit_for, run_config_for, staged_output
from parthash.cli.encode_app import CODES_DIR, GALLERY_CODES, GALLERY_LABELS, QUERY_CODES, QUERY_LABELS, QUERY_RELAXED
from parthash.cli.options import (
    get_output_dir_option_definition,
    get_run_config_option_definition,
    get_workers_option_definition,
)
from parthash.core.evalkit import (
    check_alignment,
    evaluate,
    evaluate_per_part,
    evaluate_pooled,
    read_labels_csv,
)
from parthash.core.hamcode import read_code_file
from parthash.exceptions import ConfigurationError, EvaluationError, IngestionError
from parthash.reports.report_manager import OutputFormat, ReportManager, eval_table, parts_table

if TYPE_CHECKING:
    from parthash.config.appcontext import AppContext
    from parthash.config.run_config import RunConfig
    from parthash.core.evalkit import EvalReport, PartReport

console = Console()

eval_app = typer.Typer(pretty_exceptions_show_locals=False)

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)


def _load_relaxed(path: Path) -> np.ndarray:
    try:
        return np.load(path, allow_pickle=False)
    except (OSError, ValueError) as e:
        msg = f"Cannot read relaxed query codes {path}"
        raise IngestionError(msg, e) from e


def evaluate_codes(codes_dir: Path, config: RunConfig) -> tuple[EvalReport, list[PartReport]]:
    """
    Evaluate the code files in ``codes_dir`` with the configured pooling.

    The part reports are empty unless ``config.per_part`` is set.

    Raises:
        FormatError: If a code file is malformed.
        ConfigurationError: If ``per_part_bits`` does not divide the code length.
        EvaluationError: If labels and codes do not line up.
    """
    query_codes = read_code_file(codes_dir / QUERY_CODES)
    gallery_codes = read_code_file(codes_dir / GALLERY_CODES)
    queries = read_labels_csv(codes_dir / QUERY_LABELS)
    gallery = read_labels_csv(codes_dir / GALLERY_LABELS)
    check_alignment(queries, query_codes, "query")
    check_alignment(gallery, gallery_codes, "gallery")
    if config.per_part and gallery_codes.bit_length % config.per_part_bits:
        msg = f"per_part_bits={config.per_part_bits} does not divide the {gallery_codes.bit_length}-bit codes."
        raise ConfigurationError(msg)

    relaxed = None
    if config.pooling == "single":
        report = evaluate(queries, query_codes, gallery, gallery_codes, config.protocol, workers=config.workers)
    else:
        relaxed = _load_relaxed(codes_dir / QUERY_RELAXED)
        if relaxed.shape != (len(queries), query_codes.bit_length):
            msg = f"Relaxed query codes have shape {relaxed.shape}, expected {(len(queries), query_codes.bit_length)}."
            raise EvaluationError(msg)
        report = evaluate_pooled(
            queries, relaxed, gallery, gallery_codes, config.pooling, config.protocol, workers=config.workers
        )
    if not config.per_part:
        return report, []

    parts = evaluate_per_part(
        queries,
        query_codes,
        gallery,
        gallery_codes,
        config.per_part_bits,
        config.protocol,
        pooling=config.pooling,
        query_relaxed=relaxed,
        workers=config.workers,
    )
    return report, parts


@eval_app.command("eval")
def eval_command(
    ctx: typer.Context,
    codes_dir: Annotated[
        Path | None,
        typer.Option(
            "--codes",
            exists=True,
            file_okay=False,
            dir_okay=True,
            help="Directory written by 'encode' (default: <output_dir>/codes).",
            rich_help_panel="Data",
        ),
    ] = None,
    run_config: Annotated[Path | None, get_run_config_option_definition()] = None,
    output_dir: Annotated[Path | None, get_output_dir_option_definition()] = None,
    workers: Annotated[int | None, get_workers_option_definition()] = None,
    pooling: Annotated[
        str | None,
        typer.Option("--pooling", "-p", help="Query mode: single, avg or max.", rich_help_panel="Evaluation"),
    ] = None,
    max_rank: Annotated[
        int | None,
        typer.Option("--max-rank", min=1, help="Length of the CMC curve.", rich_help_panel="Evaluation"),
    ] = None,
    keep_distractors: Annotated[
        bool | None,
        typer.Option(
            "--keep-distractors/--drop-distractors",
            help="Keep distractors in rankings as wrong matches instead of dropping them as junk.",
            rich_help_panel="Evaluation",
        ),
    ] = None,
    per_part: Annotated[
        bool,
        typer.Option(
            "--per-part",
            help="Also rank and score every part's bits on their own.",
            rich_help_panel="Evaluation",
        ),
    ] = False,
    bits: Annotated[
        int | None,
        typer.Option(
            "--bits", "-q", min=1, help="Code bits per part, for --per-part.", rich_help_panel="Evaluation"
        ),
    ] = None,
    report_format: Annotated[
        OutputFormat | None,
        typer.Option(
            "--format",
            "-f",
            case_sensitive=False,
            help="Format of eval_report.txt: text or markdown (default from settings).",
            rich_help_panel="Evaluation",
        ),
    ] = None,
) -> None:
    """
    Evaluate query codes against gallery codes with CMC and mAP.

    Args:
    ----
        ctx (typer.Context): The Typer context object, injected automatically.

    Raises:
    ------
        typer.Exit: 2 for configuration (including a ``per_part_bits`` that does
            not divide the code length), 3 for unreadable code files, 5 when
            labels and codes do not line up.
    """
    app_context: AppContext = ctx.obj["app_context"]
    log.info("Starting PartHash in eval mode.")

    overrides = {
        "output_dir": output_dir,
        "workers": workers,
        "pooling": pooling,
        "max_rank": max_rank,
        "distractors_as_junk": None if keep_distractors is None else not keep_distractors,
        "per_part": per_part or None,
        "per_part_bits": bits,
    }
    try:
        config = run_config_for(app_context, run_config, overrides)
        source = codes_dir if codes_dir is not None else config.output_dir / CODES_DIR
        report, parts = evaluate_codes(source, config)
        title = f"{source} ({config.pooling} query)"
        report_name = f"eval_{config.pooling}"
        with staged_output(config.output_dir, "eval") as staging:
            ReportManager.from_context(app_context, staging / report_name, report_format).save_eval_report(
                report, title, parts
            )
    except Exception as e:
        raise exit_for(e, "Evaluation") from e

    console.print(eval_table(report, title))
    if parts:
        console.print(parts_table(parts, report))
    console.print(f"[bold green]Report written to {config.output_dir / report_name}[/bold green]")
