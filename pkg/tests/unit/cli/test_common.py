# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

from __future__ import annotations

from typing import TYPE_CHECKING

import pytest

from parthash.cli.common import exit_for, staged_output
from parthash.exceptions import DirectoryCreationError, EvaluationError, FormatError

if TYPE_CHECKING:
    from pathlib import Path


class TestStagedOutput:
    @pytest.mark.unit
    def test_success_replaces_entries(self, tmp_path: Path) -> None:
        (tmp_path / "report").mkdir()
        (tmp_path / "report" / "old.txt").write_text("old", encoding="utf-8")
        (tmp_path / "keep.txt").write_text("keep", encoding="utf-8")

        with staged_output(tmp_path, "eval") as staging:
            assert staging.name == ".staging-eval"
            (staging / "report").mkdir()
            (staging / "report" / "new.txt").write_text("new", encoding="utf-8")

        assert sorted(path.name for path in tmp_path.iterdir()) == ["keep.txt", "report"]
        assert [path.name for path in (tmp_path / "report").iterdir()] == ["new.txt"]

    @pytest.mark.unit
    def test_failure_keeps_previous_outputs(self, tmp_path: Path) -> None:
        (tmp_path / "loss.csv").write_text("previous", encoding="utf-8")

        with pytest.raises(EvaluationError), staged_output(tmp_path, "train") as staging:
            (staging / "loss.csv").write_text("partial", encoding="utf-8")
            raise EvaluationError("boom")

        assert [path.name for path in tmp_path.iterdir()] == ["loss.csv"]
        assert (tmp_path / "loss.csv").read_text(encoding="utf-8") == "previous"

    @pytest.mark.unit
    def test_leftover_staging_is_cleared(self, tmp_path: Path) -> None:
        leftover = tmp_path / ".staging-encode"
        leftover.mkdir()
        (leftover / "stale").write_text("", encoding="utf-8")

        with staged_output(tmp_path, "encode") as staging:
            assert list(staging.iterdir()) == []

        assert not leftover.exists()

    @pytest.mark.unit
    def test_unusable_output_dir(self, tmp_path: Path) -> None:
        blocker = tmp_path / "file"
        blocker.write_text("", encoding="utf-8")
        with pytest.raises(DirectoryCreationError), staged_output(blocker, "synth"):
            pass


class TestExitFor:
    @pytest.mark.unit
    @pytest.mark.parametrize(
        ("error", "code"),
        [
            (FormatError("bad file"), 3),
            (EvaluationError("misaligned"), 5),
            (DirectoryCreationError("no dir"), 2),
            (RuntimeError("unexpected"), 1),
        ],
    )
    def test_exit_codes(self, error: Exception, code: int) -> None:
        assert exit_for(error, "Testing").exit_code == code
