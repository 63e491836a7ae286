# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""Flat ``key=value`` text files (run configurations, bank manifests)."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

from parthash.exceptions import ConfigurationError

if TYPE_CHECKING:
    from collections.abc import Mapping


def parse_key_value_text(text: str, source: str = "<text>") -> dict[str, str]:
    """
    Parse one ``key=value`` pair per line.

    Blank lines and lines starting with ``#`` are ignored; keys and values
    are stripped.

    Raises:
        ConfigurationError: On a line without ``=``, an empty key or a
            repeated key.
    """
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            msg = f"{source}:{number}: expected 'key=value', got {raw!r}"
            raise ConfigurationError(msg)
        if key in values:
            msg = f"{source}:{number}: duplicate key '{key}'"
            raise ConfigurationError(msg)
        values[key] = value.strip()
    return values


def format_key_value_text(values: Mapping[str, Any]) -> str:
    """Render ``values`` one ``key=value`` per line, in mapping order."""
    lines = []
    for key, value in values.items():
        if value is None:
            continue
        rendered = str(value).lower() if isinstance(value, bool) else str(value)
        lines.append(f"{key}={rendered}\n")
    return "".join(lines)
