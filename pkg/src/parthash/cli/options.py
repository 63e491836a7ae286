# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
The common options definitions for the PartHash application.

These functions return typer.Option objects to be used with Annotated.
"""

from __future__ import annotations

import typer


def get_verbose_option_definition() -> typer.Option:
    """
    Return a typer.Option object for verbosity.

    The Option is for increase the logging Verbosity.
    """
    return typer.Option(
        "-v",
        "--verbose",
        count=True,
        help=(
            "Increase verbosity. Default logging level is WARNING. Use -v to enable INFO messages. "
            "-vv to enable DEBUG messages. Additional -v flags have no further effect."
        ),
        rich_help_panel="Logging",
    )


def get_config_option_definition() -> typer.Option:
    return typer.Option(
        "--config",
        "-c",
        exists=True,
        file_okay=True,
        dir_okay=False,
        readable=True,
        help="Path to the TOML settings file (logging, report format).",
        rich_help_panel="Configuration",
    )


def get_run_config_option_definition() -> typer.Option:
    return typer.Option(
        "--run-config",
        "-r",
        exists=True,
        file_okay=True,
        dir_okay=False,
        readable=True,
        help="Run configuration as key=value lines. Command-line flags override its values.",
        rich_help_panel="Configuration",
    )


def get_output_dir_option_definition() -> typer.Option:
    return typer.Option(
        "--output-dir",
        "-o",
        file_okay=False,
        dir_okay=True,
        help="Directory everything of this run is written to (overrides output_dir).",
        rich_help_panel="Configuration",
    )


def get_dataset_dir_option_definition() -> typer.Option:
    return typer.Option(
        "--dataset-dir",
        "-d",
        exists=True,
        file_okay=False,
        dir_okay=True,
        readable=True,
        help="Market-style dataset directory. Without it the synthetic generator is used.",
        rich_help_panel="Data",
    )


def get_workers_option_definition() -> typer.Option:
    return typer.Option(
        "--workers",
        "-w",
        min=1,
        help="Worker threads for parts, encoding and queries. Results do not depend on it.",
        rich_help_panel="Execution",
    )


def get_bank_option_definition() -> typer.Option:
    return typer.Option(
        "--bank",
        "-b",
        exists=True,
        file_okay=False,
        dir_okay=True,
        readable=True,
        help="Trained part bank directory (as written by 'train').",
        rich_help_panel="Data",
    )


def get_seed_option_definition() -> typer.Option:
    return typer.Option(
        "--seed",
        min=0,
        help="Base seed (overrides seed).",
        rich_help_panel="Training",
    )
