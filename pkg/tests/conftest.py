# conftest.py
# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Any

import pytest
import structlog
from typer.testing import CliRunner

from parthash.config.logging_manager import LoggingManagerSingleton
from parthash.config.settings_manager import SettingsManager, SettingsManagerSingleton
from parthash.core.dataio import synth_dataset, write_market_dir
from parthash.core.parts import builtin_scheme, init_part_bank, save_bank
from parthash.core.triplet import TrainConfig

if TYPE_CHECKING:
    from collections.abc import Generator, Iterator

    from pytest_mock import MockerFixture
    from structlog.typing import EventDict

    from parthash.core.dataio import DatasetSplit
    from parthash.core.parts import PartModelBank


# --- Core Logging Setup Fixture ---
# Runs before any application code gets its first logger.
@pytest.fixture(autouse=True)
def structlog_base_config() -> Generator[None, None, None]:
    """
    Set up and tear down a plain structlog configuration for each test function.

    Ensures that structlog.get_logger() returns a concrete BoundLogger, not a LazyProxy.
    """
    structlog.reset_defaults()
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        handler.close()
    root_logger.setLevel(logging.NOTSET)

    test_handler = logging.StreamHandler(sys.stdout)
    test_handler.setFormatter(logging.Formatter("[%(levelname)s] %(name)s: %(message)s"))
    root_logger.addHandler(test_handler)
    root_logger.setLevel(logging.DEBUG)

    structlog.configure(
        processors=[
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )
    yield

    # --- Teardown Phase ---
    structlog.reset_defaults()
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        handler.close()
    root_logger.setLevel(logging.NOTSET)
    logging.disable(logging.NOTSET)


@pytest.fixture(autouse=True)
def cleanup_singletons() -> Iterator[None]:
    """Every test starts and ends without configured settings or logging singletons."""
    SettingsManagerSingleton.reset()
    LoggingManagerSingleton.reset()
    yield
    SettingsManagerSingleton.reset()
    LoggingManagerSingleton.reset()


# --- Logging Assertion Fixtures ---
@pytest.fixture
def caplog_structlog() -> Iterator[list[EventDict]]:
    """
    Capture `structlog` events for the duration of a test.

    Requires `structlog` to be configured beforehand (by `structlog_base_config`).
    """
    with structlog.testing.capture_logs() as captured_events:
        yield captured_events


@pytest.fixture
def assert_log_contains() -> Any:
    """Provide a helper asserting that a `structlog` capture contains a specific entry."""

    def _assert(log: list[EventDict], text: str, level: str | None = None) -> None:
        matches = [
            entry
            for entry in log
            if text in entry["event"] and (level is None or entry["log_level"].lower() == level.lower())
        ]
        assert matches, f"No log entry found with text '{text}' and level '{level}'"

    return _assert


# --- Environment Isolation Fixture ---
@pytest.fixture
def isolated_test_env(mocker: MockerFixture, tmp_path: Path) -> Iterator[dict[str, Path]]:
    """
    Set up an isolated temporary environment.

    - Points the settings search path at directories below ``tmp_path``.
    - Changes the working directory to a fresh sub-directory, so no
      ``parthash.toml`` of the developer interferes with the lookup.
    - Sends the default log directory to ``tmp_path / "logs"``.
    """
    original_cwd = Path.cwd()
    try:
        test_cwd = tmp_path / "test_run_cwd"
        test_cwd.mkdir()
        os.chdir(test_cwd)

        user_config_dir = tmp_path / "mock_user_config" / "parthash"
        user_config_dir.mkdir(parents=True)
        site_config_dir = tmp_path / "mock_site_config" / "parthash"
        log_dir = tmp_path / "logs"

        mocker.patch.object(
            SettingsManager,
            "DEFAULT_SETTINGS_LOCATIONS",
            [
                Path(SettingsManager.CONF_NAME),
                user_config_dir / SettingsManager.CONF_NAME,
                site_config_dir / SettingsManager.CONF_NAME,
            ],
        )
        mocker.patch.dict(SettingsManager.DEFAULT_CONFIG["logger"], {"log_directory": str(log_dir)})

        yield {
            "current_working_dir": test_cwd,
            "user_config_dir": user_config_dir,
            "site_config_dir": site_config_dir,
            "log_dir": log_dir,
        }
    finally:
        os.chdir(original_cwd)


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    """A TOML settings file with INFO logging, markdown reports and two workers."""
    path = tmp_path / "settings" / "parthash.toml"
    path.parent.mkdir()
    log_dir = (tmp_path / "logs").as_posix()
    path.write_text(
        "[logger]\n"
        'level = "INFO"\n'
        f'log_directory = "{log_dir}"\n'
        "\n"
        "[console_handler]\n"
        "enabled = true\n"
        "\n"
        "[output]\n"
        'report_format = "markdown"\n'
        "workers = 2\n",
        encoding="utf-8",
    )
    return path


@pytest.fixture
def runner() -> CliRunner:
    """Typer's CLI test runner."""
    return CliRunner()


# --- Data Fixtures ---
@pytest.fixture
def tiny_split() -> DatasetSplit:
    """
    Six identities, two cameras, two images per identity and camera.

    Identities 1-3 train (12 images); identities 4-6 give 6 queries and 6 gallery images.
    """
    return synth_dataset(num_ids=6, images_per_id_per_cam=2, num_cams=2, noise_sigma=0.02, seed=7)


@pytest.fixture
def dataset_dir(tiny_split: DatasetSplit, tmp_path: Path) -> Path:
    """`tiny_split` written as a Market-style directory."""
    root = tmp_path / "market"
    write_market_dir(tiny_split, root)
    return root


@pytest.fixture
def fast_train_config() -> TrainConfig:
    return TrainConfig(epochs=2, batch_size=8, steps_per_epoch=2, lr=0.05, seed=3)


@pytest.fixture
def mlp_bank() -> PartModelBank:
    """Untrained EQL4 bank of small fully-connected networks, 8 bits per part."""
    return init_part_bank(builtin_scheme("EQL4"), 8, 5, architecture="mlp", hidden=8)


@pytest.fixture
def bank_dir(mlp_bank: PartModelBank, tmp_path: Path) -> Path:
    root = tmp_path / "saved_bank"
    save_bank(mlp_bank, root)
    return root


@pytest.fixture
def run_config_file(tmp_path: Path) -> Path:
    """A small run configuration: tiny synthetic set, EQL4 mlp bank, one short epoch."""
    path = tmp_path / "run.txt"
    path.write_text(
        "# tiny EQL4 run\n"
        "scheme=EQL4\n"
        "per_part_bits=8\n"
        "architecture=mlp\n"
        "hidden=8\n"
        "synth_num_ids=6\n"
        "synth_images_per_id_per_cam=2\n"
        "synth_num_cams=2\n"
        "synth_noise_sigma=0.02\n"
        "synth_seed=7\n"
        "epochs=1\n"
        "batch_size=4\n"
        "steps_per_epoch=2\n"
        "seed=11\n",
        encoding="utf-8",
    )
    return path
