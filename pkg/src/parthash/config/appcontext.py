# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
PartHash Application Context Module.

The `AppContext` is handed from the typer callback to every subcommand via
``ctx.obj["app_context"]``. It holds the loaded settings; modules log through
their own ``structlog.get_logger(__name__)``.

Usage Example (within a subcommand):

```python
app_context: AppContext = ctx.obj["app_context"]
workers = app_context.settings.get_setting("output", "workers", 0)
```
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from parthash.config.settings_manager import SettingsManager


@dataclass
class AppContext:
    """
    Shared application context.

    Attributes
    ----------
    settings : SettingsManager
        The already loaded settings manager.
    """

    settings: SettingsManager

    @property
    def workers(self) -> int | None:
        """Worker count from ``output.workers``; ``None`` lets the pools decide."""
        value = int(self.settings.get_setting("output", "workers", 0) or 0)
        return value if value > 0 else None

    @classmethod
    def create(cls, settings_instance: SettingsManager) -> AppContext:
        """Create an `AppContext` from an initialized `SettingsManager`."""
        return cls(settings=settings_instance)
