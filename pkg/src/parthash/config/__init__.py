# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
PartHash Configuration Module.

Components of this module:
--------------------------------
- `settings_manager.py`: loads the TOML application settings (logging
  sections, default output directory) from the CLI path, the working
  directory, the platform config directories or the built-in defaults.
- `run_config.py`: the `RunConfig` pydantic model for one experiment, read
  from a flat ``key=value`` file and overridden by CLI flags.
- `logging_bootstrap.py`: minimal structlog setup used until settings load.
- `logging_manager.py`: the full structlog pipeline (console, JSON file,
  rotating file) driven by the settings.
- `appcontext.py`: the `AppContext` handed to every subcommand.
"""
