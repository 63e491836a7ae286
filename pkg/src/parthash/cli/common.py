# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""Helpers shared by the subcommands: error exits, staged outputs, dataset loading."""

from __future__ import annotations

import shutil
from contextlib import contextmanager
from pathlib import Path
from typing import TYPE_CHECKING, Any

import structlog
import typer
from rich.console import Console
from rich.markup import escape

from parthash.config.run_config import load_run_config
from parthash.core.dataio import load_market_dir, synth_dataset
from parthash.exceptions import DirectoryCreationError, PartHashError

if TYPE_CHECKING:
    from collections.abc import Iterator

    from parthash.config.appcontext import AppContext
    from parthash.config.run_config import RunConfig
    from parthash.core.dataio import DatasetSplit

console = Console()

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

STAGING_PREFIX = ".staging-"


def exit_for(error: Exception, action: str) -> typer.Exit:
    """
    Print ``error`` and return the `typer.Exit` carrying its exit code.

    Domain errors exit with their own code, anything else with 1.
    """
    if isinstance(error, PartHashError):
        console.print(f"[bold red]Error:[/bold red] {action} failed: {escape(str(error))}")
        log.exception(f"{action} failed.", exc_info=error, exit_code=error.exit_code)
        return typer.Exit(error.exit_code)
    detail = escape(str(error))
    console.print(f"[bold red]Critical Error:[/bold red] Unexpected error during {action.lower()}. ({detail})")
    log.exception(f"An unexpected error occurred during {action.lower()}.", exc_info=error)
    return typer.Exit(1)


def run_config_for(
    app_context: AppContext, run_config: Path | None, overrides: dict[str, Any]
) -> RunConfig:
    """
    Load the run configuration; ``--workers`` falls back to ``output.workers`` from the settings.

    Raises:
        ConfigurationError: If the file or a flag is invalid.
    """
    if overrides.get("workers") is None and app_context.workers is not None:
        overrides = {**overrides, "workers": app_context.workers}
    return load_run_config(run_config, overrides)


def load_split(config: RunConfig) -> DatasetSplit:
    """The configured Market-style directory, or the synthetic set."""
    if config.dataset_dir is not None:
        split = load_market_dir(config.dataset_dir, workers=config.workers)
        if split.skipped:
            log.warning("Files skipped while loading the dataset.", count=len(split.skipped))
            log.debug("Skipped files.", report=split.skip_report())
        return split
    return synth_dataset(**config.synth_parameters)


@contextmanager
def staged_output(output_dir: Path, command: str) -> Iterator[Path]:
    """
    Yield an empty staging directory inside ``output_dir``.

    On success every entry of the staging directory replaces the entry of the
    same name in ``output_dir``; on failure the staging directory is removed
    and ``output_dir`` keeps its previous contents.

    Raises:
        DirectoryCreationError: If the directories cannot be created.
    """
    root = Path(output_dir)
    staging = root / f"{STAGING_PREFIX}{command}"
    try:
        root.mkdir(parents=True, exist_ok=True)
        if staging.exists():
            shutil.rmtree(staging)
        staging.mkdir()
    except OSError as e:
        msg = f"Cannot prepare output directory {root}"
        raise DirectoryCreationError(msg, e) from e

    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        log.debug("Partial outputs removed.", path=str(staging))
        raise

    for entry in sorted(staging.iterdir()):
        target = root / entry.name
        if target.is_dir():
            shutil.rmtree(target)
        elif target.exists():
            target.unlink()
        entry.replace(target)
    staging.rmdir()
    log.debug("Outputs moved into place.", path=str(root), command=command)
