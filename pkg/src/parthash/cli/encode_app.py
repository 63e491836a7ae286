# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
The CLI encode Module for typer.

``parthash encode`` runs a trained bank over the query and gallery sets and
writes, into ``<output_dir>/codes``:

- ``query.pdhcode`` and ``gallery.pdhcode`` (``PDHCODE1`` code files),
- ``query_relaxed.npy`` with the relaxed query codes for pooled evaluation,
- ``query_labels.csv`` and ``gallery_labels.csv``.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Final

import numpy as np
import structlog
import typer
from rich.console import Console

from parthash.cli.common import exit_for, load_split, run_config_for, staged_output
from parthash.cli.options import (
    get_bank_option_definition,
    get_dataset_dir_option_definition,
    get_output_dir_option_definition,
    get_run_config_option_definition,
    get_workers_option_definition,
)
from parthash.core.evalkit import GalleryRecord, write_labels_csv
from parthash.core.hamcode import write_code_file
from parthash.core.parts import encode_batch, load_bank

if TYPE_CHECKING:
    from collections.abc import Sequence

    from parthash.config.appcontext import AppContext
    from parthash.core.dataio import PersonImage
    from parthash.core.parts import PartModelBank

console = Console()

encode_app = typer.Typer(pretty_exceptions_show_locals=False)

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

CODES_DIR: Final[str] = "codes"
QUERY_CODES: Final[str] = "query.pdhcode"
GALLERY_CODES: Final[str] = "gallery.pdhcode"
QUERY_RELAXED: Final[str] = "query_relaxed.npy"
QUERY_LABELS: Final[str] = "query_labels.csv"
GALLERY_LABELS: Final[str] = "gallery_labels.csv"


def encode_set(
    bank: PartModelBank, images: Sequence[PersonImage], directory: Path, name: str, workers: int | None
) -> int:
    """Encode ``images`` and write ``<name>.pdhcode``, ``<name>_labels.csv`` and, for queries, the relaxed codes."""
    encoded = encode_batch(bank, images, workers)
    records = [GalleryRecord.from_image(image) for image in images]
    write_code_file(encoded.index([rec.record_id for rec in records]), directory / f"{name}.pdhcode")
    write_labels_csv(records, directory / f"{name}_labels.csv")
    if name == "query":
        np.save(directory / QUERY_RELAXED, encoded.relaxed, allow_pickle=False)
    log.info("Set encoded.", set=name, images=len(images), bits=bank.code_length)
    return len(images)


@encode_app.command("encode")
def encode_command(
    ctx: typer.Context,
    bank_dir: Annotated[Path, get_bank_option_definition()],
    run_config: Annotated[Path | None, get_run_config_option_definition()] = None,
    output_dir: Annotated[Path | None, get_output_dir_option_definition()] = None,
    dataset_dir: Annotated[Path | None, get_dataset_dir_option_definition()] = None,
    workers: Annotated[int | None, get_workers_option_definition()] = None,
) -> None:
    """
    Encode the query and gallery sets with a trained bank.

    Args:
    ----
        ctx (typer.Context): The Typer context object, injected automatically.
        bank_dir (Path): Bank directory written by ``train``.

    Raises:
    ------
        typer.Exit: 2 for configuration, 3 for unreadable banks or images
            that do not fit the bank's scheme.
    """
    app_context: AppContext = ctx.obj["app_context"]
    log.info("Starting PartHash in encode mode.", bank=str(bank_dir))

    overrides = {"output_dir": output_dir, "dataset_dir": dataset_dir, "workers": workers}
    try:
        config = run_config_for(app_context, run_config, overrides)
        bank = load_bank(bank_dir)
        split = load_split(config)
        with staged_output(config.output_dir, "encode") as staging:
            codes = staging / CODES_DIR
            codes.mkdir()
            queries = encode_set(bank, split.query, codes, "query", config.workers)
            gallery = encode_set(bank, split.gallery, codes, "gallery", config.workers)
    except Exception as e:
        raise exit_for(e, "Encoding") from e

    console.print(
        f"[bold green]Encoded {queries} queries and {gallery} gallery images "
        f"({bank.code_length} bits) into {config.output_dir / CODES_DIR}[/bold green]"
    )
