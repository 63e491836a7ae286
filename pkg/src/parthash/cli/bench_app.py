# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
The CLI bench Module for typer.

``parthash bench`` compares per-query retrieval time of packed Hamming codes
with counting-sort ranking against float32 Euclidean distances with a
comparison sort, on a random gallery of ``n`` codes of ``L`` bits. Feature
extraction is timed by encoding images with a bank (``--bank``, or a freshly
initialised default bank). The table goes to the console and ``bench.csv``
to ``<output_dir>/bench``.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import TYPE_CHECKING, Annotated

import numpy as np
import structlog
import typer
from rich.console import Console

from parthash.cli.common import exit_for, staged_output
from parthash.cli.options import (
    get_bank_option_definition,
    get_output_dir_option_definition,
    get_seed_option_definition,
)
from parthash.core.dataio import CHANNELS, IMAGE_HEIGHT, IMAGE_WIDTH
from parthash.core.hamcode import bench_search
from parthash.core.parts import builtin_scheme, encode_relaxed, init_part_bank, load_bank
from parthash.reports.report_manager import ReportManager, bench_rows, bench_table

if TYPE_CHECKING:
    from parthash.core.parts import PartModelBank

console = Console()

bench_app = typer.Typer(pretty_exceptions_show_locals=False)

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

DEFAULT_BENCH_SCHEME = "EQL4"
EXTRACTION_IMAGES = 16


def default_bank(bit_length: int, seed: int) -> PartModelBank:
    """Untrained EQL4 bank with ``L // 4`` bits per part (at least one)."""
    scheme = builtin_scheme(DEFAULT_BENCH_SCHEME)
    return init_part_bank(scheme, max(1, bit_length // scheme.part_count), seed)


def time_extraction(bank: PartModelBank, images: int, seed: int) -> float:
    """Milliseconds per image for encoding ``images`` random images with ``bank``."""
    rng = np.random.default_rng(seed)
    batch = rng.random((images, IMAGE_HEIGHT, IMAGE_WIDTH, CHANNELS))
    start = time.perf_counter()
    encode_relaxed(bank, list(batch))
    return (time.perf_counter() - start) * 1000.0 / images


@bench_app.command("bench")
def bench_command(
    gallery_size: Annotated[
        int, typer.Option("--gallery-size", "-n", min=1, help="Gallery codes.", rich_help_panel="Benchmark")
    ] = 100_000,
    bits: Annotated[int, typer.Option("--bits", "-L", min=1, help="Code length.", rich_help_panel="Benchmark")] = 2048,
    repeats: Annotated[
        int, typer.Option("--repeats", min=1, help="Queries to average over.", rich_help_panel="Benchmark")
    ] = 10,
    bank_dir: Annotated[Path | None, get_bank_option_definition()] = None,
    seed: Annotated[int | None, get_seed_option_definition()] = None,
    output_dir: Annotated[Path, get_output_dir_option_definition()] = Path("runs"),
) -> None:
    """
    Benchmark Hamming retrieval against the real-valued baseline.

    Raises:
    ------
        typer.Exit: 3 for an unreadable bank, 4 for invalid sizes.
    """
    log.info("Starting PartHash in bench mode.", gallery_size=gallery_size, bits=bits, repeats=repeats)
    seed = 0 if seed is None else seed
    try:
        bank = load_bank(bank_dir) if bank_dir is not None else default_bank(bits, seed)
        extraction_ms = time_extraction(bank, EXTRACTION_IMAGES, seed)
        report = bench_search(gallery_size, bits, repeats, seed)
        rows = bench_rows(report, extraction_ms)
        with staged_output(output_dir, "bench") as staging:
            ReportManager(staging / "bench").save_bench(rows)
    except Exception as e:
        raise exit_for(e, "Benchmark") from e

    console.print(bench_table(rows, report))
    if not report.rankings_agree:
        console.print("[bold yellow]Warning:[/bold yellow] Hamming and Euclidean rankings differ.")
