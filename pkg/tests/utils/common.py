# SPDX-License-Identifier: EUPL-1.2
#
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

from __future__ import annotations

from typing import TYPE_CHECKING, Final

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence
    from pathlib import Path

    from parthash.core.dataio import PersonImage

CLI_ENV: Final[dict[str, str]] = {
    "NO_COLOR": "1",  # Rich disables colors
    "TERM": "dumb",  # disables most TTY formatting
    "CLICOLOR_FORCE": "0",
}


def clean_cli_output(output: str) -> str:
    """
    Normalize CLI output for consistent testing.

    - Collapses all whitespace (including newlines) to single spaces.
    - Strips leading/trailing whitespace.
    - Removes Rich frames or box-drawing characters.

    Args:
        output: The raw CLI output string.

    Returns:
        Cleaned and normalized string for assertions.
    """
    box_chars = "".join(chr(c) for c in range(0x2500, 0x257F))
    translation_table = str.maketrans("", "", box_chars)
    return " ".join(output.translate(translation_table).split()).strip()


def no_staging_left(output_dir: Path) -> bool:
    """True when no ``.staging-*`` directory remains below ``output_dir``."""
    return not any(output_dir.glob(".staging-*"))


def images_to_array(images: Iterable[PersonImage]) -> np.ndarray:
    """Stack images into ``(n, 128, 64, 3)``."""
    return np.stack([image.pixels for image in images])


def identities(images: Sequence[PersonImage]) -> list[int]:
    return [image.identity for image in images]
