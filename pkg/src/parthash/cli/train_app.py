# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
The CLI train Module for typer.

``parthash train`` trains one network per part of the configured scheme on
the training split and writes, into the output directory:

- ``bank/`` with ``part_<k>.pdhnet`` checkpoints and ``manifest.txt``,
- ``loss.csv`` with the per-part, per-epoch loss history,
- ``run_config.txt`` with the effective run configuration.
"""

from __future__ import annotations

from pathlib import Path  # noqa: TC003
from typing import TYPE_CHECKING, Annotated

import structlog
import typer
from rich.console import Console

from parthash.cli.common import exit_for, load_split, run_config_for, staged_output
from parthash.cli.options import (
    get_dataset_dir_option_definition,
    get_output_dir_option_definition,
    get_run_config_option_definition,
    get_seed_option_definition,
    get_workers_option_definition,
)
from parthash.config.run_config import write_run_config
from parthash.core.parts import save_bank, train_part_bank
from parthash.reports.report_manager import ReportManager

if TYPE_CHECKING:
    from parthash.config.appcontext import AppContext

console = Console()

train_app = typer.Typer(pretty_exceptions_show_locals=False)

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

BANK_DIR = "bank"
RUN_CONFIG_NAME = "run_config.txt"


@train_app.command("train")
def train_command(
    ctx: typer.Context,
    run_config: Annotated[Path | None, get_run_config_option_definition()] = None,
    output_dir: Annotated[Path | None, get_output_dir_option_definition()] = None,
    dataset_dir: Annotated[Path | None, get_dataset_dir_option_definition()] = None,
    workers: Annotated[int | None, get_workers_option_definition()] = None,
    seed: Annotated[int | None, get_seed_option_definition()] = None,
    scheme: Annotated[
        str | None, typer.Option("--scheme", "-s", help="Partition scheme, e.g. EQL4.", rich_help_panel="Model")
    ] = None,
    bits: Annotated[
        int | None, typer.Option("--bits", "-q", min=1, help="Code bits per part.", rich_help_panel="Model")
    ] = None,
    architecture: Annotated[
        str | None, typer.Option("--architecture", help="Network stack: conv or mlp.", rich_help_panel="Model")
    ] = None,
    share_weights: Annotated[
        bool | None,
        typer.Option(
            "--share-weights/--no-share-weights", help="One network for all parts.", rich_help_panel="Model"
        ),
    ] = None,
    epochs: Annotated[
        int | None, typer.Option("--epochs", "-e", min=0, help="Training epochs.", rich_help_panel="Training")
    ] = None,
    lr: Annotated[float | None, typer.Option("--lr", help="Learning rate.", rich_help_panel="Training")] = None,
    batch_size: Annotated[
        int | None, typer.Option("--batch-size", min=1, help="Triplets per step.", rich_help_panel="Training")
    ] = None,
) -> None:
    """
    Train a part bank and save its checkpoints and loss history.

    Args:
    ----
        ctx (typer.Context): The Typer context object, injected automatically.

    Raises:
    ------
        typer.Exit: With the exit code of the failing stage (2 configuration,
            3 ingestion, 4 numeric); partial outputs are removed.
    """
    app_context: AppContext = ctx.obj["app_context"]
    log.info("Starting PartHash in train mode.")

    overrides = {
        "output_dir": output_dir,
        "dataset_dir": dataset_dir,
        "workers": workers,
        "seed": seed,
        "scheme": scheme,
        "per_part_bits": bits,
        "architecture": architecture,
        "share_weights": share_weights,
        "epochs": epochs,
        "lr": lr,
        "batch_size": batch_size,
    }
    try:
        config = run_config_for(app_context, run_config, overrides)
        split = load_split(config)
        with staged_output(config.output_dir, "train") as staging:
            result = train_part_bank(
                split.train,
                config.partition_scheme,
                config.train,
                per_part_bits=config.per_part_bits,
                architecture=config.architecture,
                hidden=config.hidden,
                share_weights=config.share_weights,
                workers=config.workers,
            )
            save_bank(result.bank, staging / BANK_DIR)
            ReportManager(staging).save_loss_history(result.histories)
            write_run_config(config, staging / RUN_CONFIG_NAME)
    except Exception as e:
        raise exit_for(e, "Training") from e

    final = [history[-1].mean_loss for history in result.histories if history]
    console.print(
        f"[bold green]Trained {config.partition_scheme.part_count}-part bank "
        f"({result.bank.code_length} bits) into {config.output_dir / BANK_DIR}[/bold green]"
    )
    if final:
        console.print(f"Final mean loss per network: {', '.join(f'{loss:.4f}' for loss in final)}")
