# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""Integration tests for ``parthash eval``."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

import pytest

from parthash.cli.main import main_app
from parthash.core.evalkit import GalleryRecord, write_labels_csv
from parthash.core.hamcode import BitCode, CodeIndex, write_code_file
from tests.utils.common import CLI_ENV, clean_cli_output, no_staging_left

if TYPE_CHECKING:
    from typer.testing import CliRunner

GOLDEN_DIR = Path(__file__).parent / "golden" / "micro_eval"


@pytest.fixture
def encoded_run(runner: CliRunner, bank_dir: Path, run_config_file: Path, tmp_path: Path) -> Path:
    """Output directory holding ``codes/`` for the tiny synthetic set."""
    out = tmp_path / "out"
    args = ["encode", "-b", str(bank_dir), "-r", str(run_config_file), "-o", str(out)]
    result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return out


def summary_values(path: Path) -> dict[str, str]:
    header, values = path.read_text(encoding="utf-8").splitlines()
    return dict(zip(header.split(","), values.split(","), strict=True))


@pytest.mark.usefixtures("isolated_test_env")
class TestEvalApp:
    @pytest.mark.integration
    def test_single_query(self, runner: CliRunner, encoded_run: Path, run_config_file: Path) -> None:
        args = ["eval", "-r", str(run_config_file), "-o", str(encoded_run)]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 0, result.output
        output = clean_cli_output(result.output)
        assert "single query" in output
        assert "Report written to" in output

        report_dir = encoded_run / "eval_single"
        assert sorted(path.name for path in report_dir.iterdir()) == ["cmc.csv", "eval_report.txt", "summary.csv"]
        cmc = (report_dir / "cmc.csv").read_text(encoding="utf-8").splitlines()
        assert len(cmc) == 51
        assert cmc[-1] == "50,1.000000"

        summary = summary_values(report_dir / "summary.csv")
        assert summary["skipped"] == "0"
        assert 0.0 < float(summary["mAP"]) <= 1.0
        assert (report_dir / "eval_report.txt").read_text(encoding="utf-8").startswith("Evaluation: ")
        assert no_staging_left(encoded_run)

    @pytest.mark.integration
    def test_average_pooling_and_short_curve(
        self, runner: CliRunner, encoded_run: Path, run_config_file: Path
    ) -> None:
        args = ["eval", "-r", str(run_config_file), "-o", str(encoded_run), "-p", "avg", "--max-rank", "5"]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 0, result.output
        cmc = (encoded_run / "eval_avg" / "cmc.csv").read_text(encoding="utf-8").splitlines()
        assert cmc[0] == "rank,cmc"
        assert len(cmc) == 6
        assert not (encoded_run / "eval_single").exists()

    @pytest.mark.integration
    def test_markdown_report_from_settings(
        self, runner: CliRunner, encoded_run: Path, run_config_file: Path, config_file: Path
    ) -> None:
        args = ["-c", str(config_file), "eval", "-r", str(run_config_file), "-o", str(encoded_run)]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 0, result.output
        text = (encoded_run / "eval_single" / "eval_report.txt").read_text(encoding="utf-8")
        assert text.startswith("## Evaluation: ")
        assert "| mAP |" in text

    @pytest.mark.integration
    def test_explicit_format_wins(
        self, runner: CliRunner, encoded_run: Path, run_config_file: Path, config_file: Path
    ) -> None:
        args = ["-c", str(config_file), "eval", "-r", str(run_config_file), "-o", str(encoded_run), "-f", "TEXT"]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 0, result.output
        text = (encoded_run / "eval_single" / "eval_report.txt").read_text(encoding="utf-8")
        assert text.startswith("Evaluation: ")

    @pytest.mark.integration
    def test_misaligned_labels(self, runner: CliRunner, encoded_run: Path, run_config_file: Path) -> None:
        labels = encoded_run / "codes" / "gallery_labels.csv"
        labels.write_text("".join(labels.read_text(encoding="utf-8").splitlines(keepends=True)[:-1]), encoding="utf-8")

        args = ["eval", "-r", str(run_config_file), "-o", str(encoded_run)]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 5
        assert "do not match the gallery codes" in clean_cli_output(result.output)
        assert not (encoded_run / "eval_single").exists()
        assert no_staging_left(encoded_run)

    @pytest.mark.integration
    def test_missing_code_files(self, runner: CliRunner, tmp_path: Path) -> None:
        empty = tmp_path / "no_codes"
        empty.mkdir()
        args = ["eval", "--codes", str(empty), "-o", str(tmp_path / "out")]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 3
        assert "Cannot read code file" in clean_cli_output(result.output)

    @pytest.mark.integration
    def test_unknown_pooling(self, runner: CliRunner, encoded_run: Path, run_config_file: Path) -> None:
        args = ["eval", "-r", str(run_config_file), "-o", str(encoded_run), "-p", "median"]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 2
        assert "pooling" in clean_cli_output(result.output)


def write_micro_codes(directory: Path) -> Path:
    """
    Six gallery images and three 4-bit queries, scored by hand.

    The third query has no cross-camera match and is skipped. The second
    part (bits 2-3) alone ranks every good match first.
    """
    gallery = [
        (GalleryRecord("g0", 2, 2), "0011"),
        (GalleryRecord("g1", 1, 2), "0001"),
        (GalleryRecord("g2", 1, 1), "0000"),
        (GalleryRecord("g3", 2, 2), "0111"),
        (GalleryRecord("g4", 1, 2), "1101"),
        (GalleryRecord("g5", 3, 1), "1111"),
    ]
    queries = [
        (GalleryRecord("q0", 1, 1), "0000"),
        (GalleryRecord("q1", 2, 1), "1111"),
        (GalleryRecord("q2", 3, 1), "1010"),
    ]
    directory.mkdir()
    for name, rows in (("query", queries), ("gallery", gallery)):
        records = [rec for rec, _ in rows]
        codes = [BitCode.from_bits([bit == "1" for bit in bits]) for _, bits in rows]
        write_code_file(CodeIndex.from_codes(codes, [rec.record_id for rec in records]), directory / f"{name}.pdhcode")
        write_labels_csv(records, directory / f"{name}_labels.csv")
    return directory


@pytest.mark.usefixtures("isolated_test_env")
class TestPerPartEval:
    @pytest.mark.integration
    def test_golden_micro_case(self, runner: CliRunner, tmp_path: Path) -> None:
        codes = write_micro_codes(tmp_path / "codes")
        out = tmp_path / "out"
        args = ["eval", "--codes", str(codes), "-o", str(out), "--max-rank", "3", "--per-part", "-q", "2"]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 0, result.output
        assert "Parts alone" in clean_cli_output(result.output)
        report_dir = out / "eval_single"
        for name in ("cmc.csv", "summary.csv"):
            assert (report_dir / name).read_bytes() == (GOLDEN_DIR / name).read_bytes()
        golden_report = (GOLDEN_DIR / "eval_report.txt").read_text(encoding="utf-8").replace("{codes}", str(codes))
        assert (report_dir / "eval_report.txt").read_text(encoding="utf-8") == golden_report

    @pytest.mark.integration
    def test_without_parts_the_summary_has_one_row(self, runner: CliRunner, tmp_path: Path) -> None:
        codes = write_micro_codes(tmp_path / "codes")
        out = tmp_path / "out"
        args = ["eval", "--codes", str(codes), "-o", str(out), "--max-rank", "3"]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 0, result.output
        golden_summary = (GOLDEN_DIR / "summary.csv").read_text(encoding="utf-8").splitlines()
        summary = (out / "eval_single" / "summary.csv").read_text(encoding="utf-8").splitlines()
        assert summary == golden_summary[:2]
        assert "Parts alone" not in (out / "eval_single" / "eval_report.txt").read_text(encoding="utf-8")

    @pytest.mark.integration
    def test_trained_bank_parts(self, runner: CliRunner, encoded_run: Path, run_config_file: Path) -> None:
        args = ["eval", "-r", str(run_config_file), "-o", str(encoded_run), "-p", "max", "--per-part"]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 0, result.output
        rows = (encoded_run / "eval_max" / "summary.csv").read_text(encoding="utf-8").splitlines()
        assert [row.split(",")[0] for row in rows] == ["code", "full", "part_0", "part_1", "part_2", "part_3"]
        report = (encoded_run / "eval_max" / "eval_report.txt").read_text(encoding="utf-8")
        assert "24-31" in report

    @pytest.mark.integration
    def test_part_length_must_divide_the_code(self, runner: CliRunner, tmp_path: Path) -> None:
        codes = write_micro_codes(tmp_path / "codes")
        out = tmp_path / "out"
        args = ["eval", "--codes", str(codes), "-o", str(out), "--per-part", "-q", "3"]
        result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)

        assert result.exit_code == 2
        assert "does not divide the 4-bit codes" in clean_cli_output(result.output)
        assert not (out / "eval_single").exists()
