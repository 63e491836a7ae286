# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
Integration tests for the main CLI application.

These tests cover the global options (version, verbosity, settings file)
and the initialization of the settings and logging singletons.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import pytest

from parthash.cli.main import main_app
from parthash.config.logging_manager import LoggingManagerSingleton
from parthash.config.settings_manager import SettingsManagerSingleton
from tests.utils.common import CLI_ENV, clean_cli_output

if TYPE_CHECKING:
    from pathlib import Path

    from typer.testing import CliRunner

BENCH_ARGS = ["bench", "-n", "50", "-L", "8", "--repeats", "1"]


class TestCliMain:
    @pytest.mark.integration
    def test_version(self, runner: CliRunner) -> None:
        result = runner.invoke(main_app, ["--version"], env=CLI_ENV, catch_exceptions=False)
        assert result.exit_code == 0
        assert "PartHash version: 0.1.0" in clean_cli_output(result.output)

    @pytest.mark.integration
    def test_help_lists_the_commands(self, runner: CliRunner) -> None:
        result = runner.invoke(main_app, ["--help"], env=CLI_ENV, catch_exceptions=False)
        output = clean_cli_output(result.output)
        assert result.exit_code == 0
        for command in ("synth", "train", "encode", "eval", "bench"):
            assert command in output

    @pytest.mark.integration
    def test_missing_settings_file_is_a_usage_error(self, runner: CliRunner, tmp_path: Path) -> None:
        result = runner.invoke(main_app, ["-c", str(tmp_path / "absent.toml"), *BENCH_ARGS], env=CLI_ENV)
        assert result.exit_code == 2

    @pytest.mark.integration
    @pytest.mark.usefixtures("isolated_test_env")
    def test_invalid_settings_file(self, runner: CliRunner, tmp_path: Path) -> None:
        broken = tmp_path / "broken.toml"
        broken.write_text("[logger\nlevel = 'INFO'\n", encoding="utf-8")

        args = ["-c", str(broken), *BENCH_ARGS, "-o", str(tmp_path / "out")]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 2
        assert "Failed to load application configuration" in clean_cli_output(result.output)
        assert not (tmp_path / "out").exists()

    @pytest.mark.integration
    @pytest.mark.usefixtures("isolated_test_env")
    def test_verbosity_flags(self, runner: CliRunner, tmp_path: Path) -> None:
        result = runner.invoke(
            main_app, ["-vv", *BENCH_ARGS, "-o", str(tmp_path / "out")], env=CLI_ENV, catch_exceptions=False
        )

        assert result.exit_code == 0
        assert LoggingManagerSingleton.get_instance().effective_log_level == logging.DEBUG

    @pytest.mark.integration
    @pytest.mark.usefixtures("isolated_test_env")
    def test_settings_file_is_applied(self, runner: CliRunner, tmp_path: Path, config_file: Path) -> None:
        args = ["-c", str(config_file), *BENCH_ARGS, "-o", str(tmp_path / "out")]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 0
        settings = SettingsManagerSingleton.get_instance()
        assert settings.get_setting("output", "report_format") == "markdown"
        assert LoggingManagerSingleton.get_instance().effective_log_level == logging.INFO
