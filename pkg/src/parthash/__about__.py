# SPDX-License-Identifier: EUPL-1.2
#
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert
#
"""
Metadata about the PartHash package.

This module defines the version number of the PartHash package.
"""

from __future__ import annotations

from typing import Final

__app_name__: Final[str] = "PartHash"
__app_author__: Final[str] = "Jürgen Mülbert"
__app_org_id__: Final[str] = "jmuelbert"
__app_config_name__: Final[str] = "parthash.toml"

"""
The version number of the PartHash package.
"""
__version__ = "0.1.0"
