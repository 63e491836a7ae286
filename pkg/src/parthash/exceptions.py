# SPDX-License-Identifier: EUPL-1.2
#
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
Exception hierarchy for PartHash.

Every error carries the CLI exit code it maps to, so the typer commands can
turn any domain failure into the documented process status:
0 success, 2 configuration, 3 ingestion, 4 numeric/training, 5 evaluation.
"""

from __future__ import annotations

from typing import ClassVar


class PartHashError(Exception):
    """Base exception for all PartHash errors."""

    exit_code: ClassVar[int] = 1

    def __init__(self, message: str, original_exception: Exception | None = None) -> None:
        super().__init__(message)
        if original_exception:
            self.__cause__ = original_exception


# Configuration


class ConfigurationError(PartHashError):
    """Raised for invalid run configuration, unknown scheme names or keys."""

    exit_code: ClassVar[int] = 2


class SettingsConfigurationError(ConfigurationError):
    """Raised when the TOML settings file cannot be read or decoded."""


# LoggingManager
class LoggerConfigurationError(ConfigurationError):
    """Base exception for logger configuration errors."""


class InvalidLogLevelError(LoggerConfigurationError):
    """Raised when an invalid log level string is found in the config."""


class LogHandlerError(LoggerConfigurationError):
    """Raised when creating a log handler or its directory fails."""


# Ingestion


class IngestionError(PartHashError):
    """Raised when images or datasets cannot be loaded or have the wrong geometry."""

    exit_code: ClassVar[int] = 3


class FormatError(IngestionError):
    """Raised for malformed binary files (pixmaps, checkpoints, code files)."""

    def __init__(self, message: str, offset: int | None = None, original_exception: Exception | None = None) -> None:
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message, original_exception)
        self.offset = offset


# Numeric / training


class NumericError(PartHashError):
    """Base class for numeric failures in networks, losses and codes."""

    exit_code: ClassVar[int] = 4


class DimensionError(NumericError):
    """Raised when tensor or code shapes disagree."""


class NetworkStateError(NumericError):
    """Raised when backward is requested without a matching recorded forward pass."""


class TrainingDivergenceError(NumericError):
    """Raised when a loss or gradient becomes non-finite."""

    def __init__(self, message: str, epoch: int | None = None, original_exception: Exception | None = None) -> None:
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message, original_exception)
        self.epoch = epoch


class InfeasibleSamplingError(NumericError):
    """Raised when no valid triplet can be drawn from the labels."""


class CodeDomainError(NumericError):
    """Raised when relaxed codes leave [0, 1] or pooling receives no input."""


# Evaluation


class EvaluationError(PartHashError):
    """Raised when labels and codes do not line up for an evaluation run."""

    exit_code: ClassVar[int] = 5


# Reports
class DirectoryCreationError(PartHashError):
    """Raised when an output directory cannot be created."""

    exit_code: ClassVar[int] = 2


class ReportSaveError(PartHashError):
    """Raised when a report file cannot be written."""

    exit_code: ClassVar[int] = 2
