# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
The CLI synth Module for typer.

``parthash synth`` writes the synthetic pedestrian set as a Market-style
directory (``bounding_box_train``, ``query``, ``bounding_box_test``) of P6
files, so the other commands can read it with ``--dataset-dir``.
"""

from __future__ import annotations

from pathlib import Path  # noqa: TC003
from typing import TYPE_CHECKING, Annotated

import structlog
import typer
from rich.console import Console

from parthash.cli.common import exit_for, run_config_for, staged_output
from parthash.cli.options import (
    get_output_dir_option_definition,
    get_run_config_option_definition,
    get_seed_option_definition,
)
from parthash.core.dataio import synth_dataset, write_market_dir

if TYPE_CHECKING:
    from parthash.config.appcontext import AppContext

console = Console()

synth_app = typer.Typer(pretty_exceptions_show_locals=False)

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)


@synth_app.command("synth")
def synth_command(
    ctx: typer.Context,
    output_dir: Annotated[Path | None, get_output_dir_option_definition()] = None,
    run_config: Annotated[Path | None, get_run_config_option_definition()] = None,
    seed: Annotated[int | None, get_seed_option_definition()] = None,
    num_ids: Annotated[
        int | None, typer.Option("--num-ids", min=2, help="Identities.", rich_help_panel="Data")
    ] = None,
    images_per_id_per_cam: Annotated[
        int | None,
        typer.Option("--images-per-cam", min=1, help="Images per identity and camera.", rich_help_panel="Data"),
    ] = None,
    num_cams: Annotated[int | None, typer.Option("--num-cams", min=1, help="Cameras.", rich_help_panel="Data")] = None,
    noise_sigma: Annotated[
        float | None, typer.Option("--noise-sigma", min=0.0, help="Pixel noise level.", rich_help_panel="Data")
    ] = None,
    num_distractors: Annotated[
        int | None,
        typer.Option("--num-distractors", min=0, help="Identity-free gallery images.", rich_help_panel="Data"),
    ] = None,
) -> None:
    """
    Write a synthetic Market-style dataset.

    Raises:
    ------
        typer.Exit: 2 for invalid generator parameters.
    """
    app_context: AppContext = ctx.obj["app_context"]
    overrides = {
        "output_dir": output_dir,
        "synth_seed": seed,
        "synth_num_ids": num_ids,
        "synth_images_per_id_per_cam": images_per_id_per_cam,
        "synth_num_cams": num_cams,
        "synth_noise_sigma": noise_sigma,
        "synth_num_distractors": num_distractors,
    }
    try:
        config = run_config_for(app_context, run_config, overrides)
        split = synth_dataset(**config.synth_parameters)
        with staged_output(config.output_dir, "synth") as staging:
            written = write_market_dir(split, staging)
    except Exception as e:
        raise exit_for(e, "Dataset generation") from e

    log.info("Synthetic dataset written.", path=str(config.output_dir), files=len(written))
    console.print(
        f"[bold green]Wrote {len(split.train)} train, {len(split.query)} query and "
        f"{len(split.gallery)} gallery images to {config.output_dir}[/bold green]"
    )
