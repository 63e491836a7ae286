# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
Main entry point for the PartHash application.

The callback handles the global options (settings file, verbosity,
version), initializes settings and logging, and hands an `AppContext` to
the subcommands through ``ctx.obj``.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path  # noqa: TC003
from typing import Annotated

import structlog
import typer
from rich.console import Console

from parthash import __about__
from parthash.cli.bench_app import bench_app
from parthash.cli.encode_app import encode_app
from parthash.cli.eval_app import eval_app
from parthash.cli.options import get_config_option_definition, get_verbose_option_definition
from parthash.cli.synth_app import synth_app
from parthash.cli.train_app import train_app
from parthash.config.appcontext import AppContext
from parthash.config.logging_bootstrap import bootstrap_logging
from parthash.config.logging_manager import VERBOSITY_LEVELS, LoggingManager, LoggingManagerSingleton
from parthash.config.settings_manager import SettingsManager, SettingsManagerSingleton
from parthash.exceptions import ConfigurationError, PartHashError

main_app = typer.Typer(
    name="parthash",
    help="Part-based triplet deep hashing for person re-identification.",
    rich_markup_mode="rich",
    pretty_exceptions_show_locals=False,
)
"""
The main Typer application instance for PartHash.

It provides the global options and dispatches to the subcommands
(synth, train, encode, eval, bench).
"""

main_app.add_typer(synth_app, help="Write a synthetic Market-style dataset.")
main_app.add_typer(train_app, help="Train a part bank.")
main_app.add_typer(encode_app, help="Encode query and gallery sets into code files.")
main_app.add_typer(eval_app, help="Evaluate code files with CMC and mAP.")
main_app.add_typer(bench_app, help="Benchmark Hamming against Euclidean retrieval.")

console = Console()

# structlog must be usable before any callback runs.
bootstrap_logging()


def main_logger() -> structlog.stdlib.BoundLogger:
    """Return the logger used for messages of the startup phase."""
    return structlog.get_logger("main")


def _version_callback(*, value: bool = False) -> None:
    """Display the application version and exit."""
    if value:
        console.print(
            f"[bold blue]{__about__.__app_name__}[/] version: [bold green]{__about__.__version__}[/]",
        )
        sys.exit()


# --- Helper Functions for Initialization ---


def _initialize_settings_manager(config_file: Path | None) -> SettingsManager:
    """
    Initialize the SettingsManager Singleton and return its instance.

    Raises:
    ------
        typer.Exit: With the configuration exit code if the settings cannot be loaded.
    """
    main_logger().debug("Main callback: Initializing SettingsManager...")
    try:
        SettingsManagerSingleton.initialize_from_context(config_path=config_file)
        settings_manager = SettingsManagerSingleton.get_instance()
    except PartHashError as e:
        main_logger().exception("Main callback: Failed to load configuration!", exc_info=e)
        console.print(f"[bold red]Critical Error:[/bold red] Failed to load application configuration: {e}")
        raise typer.Exit(e.exit_code) from e
    else:
        main_logger().info("Main callback: SettingsManager initialized and configuration loaded.")
        for err in SettingsManagerSingleton.get_initialization_errors():
            main_logger().warning("Main callback: SettingsManager setup warning:", error_details=str(err))
        return settings_manager


def _configure_logging_manager(*, app_context: AppContext, verbose: int) -> LoggingManager:
    """
    Configure the LoggingManager Singleton and return its instance.

    Raises:
    ------
        typer.Exit: With the configuration exit code if logging cannot be set up.
    """
    cli_log_level = VERBOSITY_LEVELS.get(min(verbose, max(VERBOSITY_LEVELS)), logging.WARNING)
    main_logger().debug(
        "Main callback: Derived CLI log level.",
        verbose_input=verbose,
        derived_cli_log_level=logging.getLevelName(cli_log_level),
    )
    try:
        LoggingManagerSingleton.initialize_from_context(
            app_context=app_context,
            cli_log_level=cli_log_level,
            enable_console_logging=True,
        )
        logging_manager = LoggingManagerSingleton.get_instance()
    except ConfigurationError as e:
        main_logger().exception("Main callback: Critical logging setup error:", exc_info=e)
        console.print(f"[bold red]Critical Error:[/bold red] Failed to set up logging: {e}")
        raise typer.Exit(e.exit_code) from e
    else:
        main_logger().info("Main callback: Full logging configured.")
        for err in LoggingManagerSingleton.get_initialization_errors():
            main_logger().warning("Main callback: LoggingManager setup warning:", error_details=str(err))
        return logging_manager


@main_app.callback()
def main_callback(
    ctx: typer.Context,
    verbose: Annotated[int, get_verbose_option_definition()] = 0,
    config_file: Annotated[Path | None, get_config_option_definition()] = None,
    _version: Annotated[
        bool | None,
        typer.Option(
            "--version",
            "-V",
            callback=_version_callback,
            is_eager=True,
            help="Show the application version and exit.",
        ),
    ] = None,
) -> None:
    """
    PartHash trains part-based hash networks and retrieves people by Hamming distance.

    Initializes settings and logging and prepares the Typer context for the
    subcommands.

    Args:
    ----
        ctx (typer.Context): The Typer context object.
        verbose (int): Verbosity level (0=warning, 1=info, 2=debug).
        config_file (Path | None): Optional path to a TOML settings file.
        _version (bool | None): Handled by `_version_callback`.
    """
    main_logger().debug("CLI Args", verbose=verbose, config_file=str(config_file) if config_file else None)

    settings_manager = _initialize_settings_manager(config_file)
    app_context = AppContext.create(settings_instance=settings_manager)
    logging_manager = _configure_logging_manager(app_context=app_context, verbose=verbose)

    ctx.ensure_object(dict)
    ctx.obj.update(
        verbose_mode=verbose,
        config_file=config_file,
        settings_manager=settings_manager,
        logging_manager=logging_manager,
        app_context=app_context,
    )
    main_logger().debug("Main callback: All core services initialized.", command=ctx.invoked_subcommand)


def main() -> None:
    """Invoke the Typer application."""
    main_app()


if __name__ == "__main__":
    main()
