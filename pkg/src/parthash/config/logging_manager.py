# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
The LoggingManager.

Sets up the full structlog pipeline once the settings are known:

- **Console logging** to stderr through `structlog.dev.ConsoleRenderer`.
- **File logging** as JSON lines (`file_handler` section), opt-in.
- **Rotating file logging** (`limited_file_handler` section), opt-in.

The effective level is the more verbose of the configured ``logger.level``
and the ``-v`` count given on the command line. Training loops log one event
per epoch at INFO and one per step at DEBUG, so ``-vv`` is noisy on purpose.
"""

from __future__ import annotations

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Any, ClassVar, Final, Self

import structlog
from rich.console import Console
from structlog.stdlib import ProcessorFormatter

from parthash.__about__ import __app_name__
from parthash.exceptions import InvalidLogLevelError, LogHandlerError

if TYPE_CHECKING:
    from types import TracebackType

    from structlog.typing import Processor

    from parthash.config.appcontext import AppContext


# Console for errors raised while the handlers themselves are being torn down
_error_console = Console(file=sys.stderr)

APP_NAME: Final[str] = __app_name__.lower()
DEFAULT_LOG_FILENAME: Final[str] = f"{APP_NAME}.log"
DEFAULT_LIMITED_LOG_FILENAME: Final[str] = f"limited_{APP_NAME}.log"
DEFAULT_MAX_BYTE: Final[int] = 1024 * 1024
DEFAULT_BACKUP_COUNT: Final[int] = 3

VERBOSITY_LEVELS: dict[int, int] = {
    0: logging.WARNING,
    1: logging.INFO,
    2: logging.DEBUG,
}


class LoggingManager:
    """
    Manage the configuration and lifecycle of the application's logging system.

    Integrates the standard `logging` handlers with `structlog` processors so
    every module-level ``log = structlog.get_logger(__name__)`` renders through
    the same pipeline.
    """

    effective_log_level: int

    def __init__(self) -> None:
        """Create the manager; configuration is deferred to `apply_configuration`."""
        self._internal_errors: list[str] = []
        self.cli_log_level: int | None = None
        self.enable_console_logging: bool = True
        self.log_config: dict[str, Any] = {}
        self.effective_log_level = logging.NOTSET
        self._logger: structlog.stdlib.BoundLogger = structlog.get_logger("LoggingManagerInit")

    @property
    def internal_errors(self) -> list[str]:
        """Return the list of non-fatal configuration errors."""
        return self._internal_errors

    def apply_configuration(
        self,
        *,
        cli_log_level: int | None = None,
        enable_console_logging: bool,
        log_config: dict[str, Any],
    ) -> None:
        """
        Apply the logging configuration.

        Args:
            cli_log_level: Level derived from ``-v`` flags; wins when more verbose.
            enable_console_logging: Force the stderr handler on.
            log_config: The ``logger``, ``console_handler``, ``file_handler`` and
                ``limited_file_handler`` sections of the settings.

        Raises:
            LogHandlerError: If a handler cannot be created.
            InvalidLogLevelError: If the configured level is unknown.
        """
        self._internal_errors.clear()
        self.cli_log_level = cli_log_level
        self.enable_console_logging = enable_console_logging
        self.log_config = log_config

        try:
            self._setup_logging_pipeline()
        except (InvalidLogLevelError, LogHandlerError) as e:
            self._internal_errors.append(f"Critical error during logging configuration: {e}")
            self._logger.exception("Critical error during logging configuration.", exc_info=e)
            raise
        self._logger.debug("Full logging configuration applied.", level=logging.getLevelName(self.effective_log_level))

    def shutdown(self) -> None:
        """Flush and close every handler attached to the root logger."""
        root_logger = logging.getLogger()
        for handler in root_logger.handlers[:]:
            try:
                handler.close()
                root_logger.removeHandler(handler)
            except (OSError, ValueError) as e:
                _error_console.print(
                    f"[bold red]Error[/bold red]: Failed to close log handler {handler.__class__.__name__}: {e}"
                )

    def get_logger(self, name: str | None = None) -> structlog.stdlib.BoundLogger:
        """Return a structlog logger bound to ``name`` (defaults to the app name)."""
        return structlog.get_logger(name or APP_NAME)

    # --- Private Helper Methods for Configuration ---

    def _get_effective_log_level(self, logger_main_settings: dict[str, Any]) -> int:
        """
        Combine the configured level with the CLI level.

        Raises:
            InvalidLogLevelError: If the configured level name is not a logging level.
        """
        level_name = str(logger_main_settings.get("level", "WARNING")).upper()
        configured = logging.getLevelNamesMapping().get(level_name)
        if configured is None:
            msg = f"Invalid log level '{level_name}' in settings."
            raise InvalidLogLevelError(msg)

        if self.cli_log_level is None:
            return configured
        # lower number = more verbose
        return min(configured, self.cli_log_level)

    @staticmethod
    def _shared_processors() -> list[Processor]:
        return [
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
        ]

    def _formatter(self, renderer: Processor) -> ProcessorFormatter:
        return ProcessorFormatter(
            processor=renderer,
            foreign_pre_chain=[*self._shared_processors(), structlog.stdlib.PositionalArgumentsFormatter()],
        )

    def _log_directory(self, logger_main_settings: dict[str, Any]) -> Path:
        log_dir_str = logger_main_settings.get("log_directory")
        if not log_dir_str:
            msg = "Log directory not specified in settings for file handler."
            raise LogHandlerError(msg)
        log_dir = Path(log_dir_str)
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            msg = f"Cannot create log directory {log_dir}."
            raise LogHandlerError(msg, e) from e
        return log_dir

    def _setup_console_handler(self, root_logger: logging.Logger, settings: dict[str, Any]) -> None:
        if not (self.enable_console_logging or settings.get("enabled")):
            return
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(self._formatter(structlog.dev.ConsoleRenderer(colors=bool(settings.get("colors", False)))))
        handler.setLevel(self.effective_log_level)
        root_logger.addHandler(handler)

    def _setup_file_handler(
        self, root_logger: logging.Logger, settings: dict[str, Any], logger_main_settings: dict[str, Any]
    ) -> None:
        if not settings.get("enabled"):
            return
        log_file_path = self._log_directory(logger_main_settings) / settings.get("file_name", DEFAULT_LOG_FILENAME)
        try:
            handler = logging.FileHandler(log_file_path, mode="a", encoding="utf-8")
        except OSError as e:
            msg = "Failed to set up main file handler."
            self._internal_errors.append(f"{msg} {e}")
            raise LogHandlerError(msg, e) from e
        handler.setFormatter(self._formatter(structlog.processors.JSONRenderer()))
        handler.setLevel(self.effective_log_level)
        root_logger.addHandler(handler)

    def _setup_limited_file_handler(
        self, root_logger: logging.Logger, settings: dict[str, Any], logger_main_settings: dict[str, Any]
    ) -> None:
        if not settings.get("enabled"):
            return
        log_file_path = self._log_directory(logger_main_settings) / settings.get(
            "file_name", DEFAULT_LIMITED_LOG_FILENAME
        )
        try:
            handler = logging.handlers.RotatingFileHandler(
                log_file_path,
                maxBytes=settings.get("max_bytes", DEFAULT_MAX_BYTE),
                backupCount=settings.get("backup_count", DEFAULT_BACKUP_COUNT),
                encoding="utf-8",
            )
        except OSError as e:
            msg = "Failed to set up limited file handler."
            self._internal_errors.append(f"{msg} {e}")
            raise LogHandlerError(msg, e) from e
        handler.setFormatter(self._formatter(structlog.processors.JSONRenderer()))
        handler.setLevel(self.effective_log_level)
        root_logger.addHandler(handler)

    def _setup_logging_pipeline(self) -> None:
        root_logger = logging.getLogger()
        for handler in root_logger.handlers[:]:
            root_logger.removeHandler(handler)

        logger_main_settings = self.log_config.get("logger", {})
        self.effective_log_level = self._get_effective_log_level(logger_main_settings)
        root_logger.setLevel(self.effective_log_level)

        structlog.configure(
            processors=[
                structlog.stdlib.filter_by_level,
                *self._shared_processors(),
                ProcessorFormatter.wrap_for_formatter,
            ],
            logger_factory=structlog.stdlib.LoggerFactory(),
            wrapper_class=structlog.stdlib.BoundLogger,
            cache_logger_on_first_use=False,
        )

        self._setup_console_handler(root_logger, self.log_config.get("console_handler", {}))
        self._setup_file_handler(root_logger, self.log_config.get("file_handler", {}), logger_main_settings)
        self._setup_limited_file_handler(
            root_logger, self.log_config.get("limited_file_handler", {}), logger_main_settings
        )

        self._logger = structlog.get_logger("LoggingManager")

    def __enter__(self) -> Self:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: TracebackType | None,
    ) -> None:
        """Exit the runtime context, shutting the handlers down."""
        self.shutdown()


class LoggingManagerSingleton:
    """
    Singleton class for `LoggingManager`.

    Ensures a single instance manages application logging.
    """

    _instance: LoggingManager | None = None
    _initialization_errors: ClassVar[list[str]] = []
    _is_configured: ClassVar[bool] = False

    @classmethod
    def get_instance(cls) -> LoggingManager:
        """
        Return the configured `LoggingManager`.

        Raises:
            RuntimeError: If `initialize_from_context` has not been called yet.
        """
        if cls._instance is None:
            msg = "LoggingManager has not been initialized. Call initialize_from_context first."
            raise RuntimeError(msg)
        return cls._instance

    @classmethod
    def initialize_from_context(
        cls, *, app_context: AppContext, cli_log_level: int | None = None, enable_console_logging: bool = True
    ) -> None:
        """
        Configure logging from the settings held by ``app_context``.

        A second call is ignored and recorded as an initialization error.
        """
        if cls._is_configured:
            cls._initialization_errors.append("LoggingManagerSingleton already configured. Cannot re-configure.")
            return

        if cls._instance is None:
            cls._instance = LoggingManager()

        cls._initialization_errors.clear()
        settings = app_context.settings
        cls._instance.apply_configuration(
            cli_log_level=cli_log_level,
            enable_console_logging=enable_console_logging,
            log_config={
                "logger": settings.get_section("logger"),
                "console_handler": settings.get_section("console_handler"),
                "file_handler": settings.get_section("file_handler"),
                "limited_file_handler": settings.get_section("limited_file_handler"),
            },
        )
        cls._initialization_errors.extend(cls._instance.internal_errors)
        cls._is_configured = True

    @classmethod
    def get_initialization_errors(cls) -> list[str]:
        """Return the unique errors collected during initialization."""
        errors = list(cls._initialization_errors)
        if cls._instance:
            errors.extend(cls._instance.internal_errors)
        return sorted(set(errors))

    @classmethod
    def reset(cls) -> None:
        """Shut down handlers and forget the instance (used by tests)."""
        if cls._instance:
            cls._instance.shutdown()
        cls._instance = None
        cls._initialization_errors.clear()
        cls._is_configured = False
