# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

from __future__ import annotations

from pathlib import Path

import pytest

from parthash.config.run_config import RunConfig, format_run_config, load_run_config, write_run_config
from parthash.exceptions import ConfigurationError


def write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.txt"
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadRunConfig:
    @pytest.mark.unit
    def test_defaults(self) -> None:
        config = load_run_config()
        assert config == RunConfig()
        assert config.partition_scheme.part_count == 4
        assert config.output_dir == Path("runs")
        assert config.train.epochs == 30

    @pytest.mark.unit
    def test_file_values_and_training_keys(self, tmp_path: Path) -> None:
        path = write(tmp_path, "# comment\nscheme = overlap3\nper_part_bits=16\nlr=0.01\nepochs=2\n")
        config = load_run_config(path)
        assert config.scheme == "Overlap3"
        assert config.per_part_bits == 16
        assert config.train.lr == 0.01
        assert config.train.epochs == 2

    @pytest.mark.unit
    def test_flags_override_the_file(self, tmp_path: Path) -> None:
        path = write(tmp_path, "scheme=EQL3\nepochs=5\n")
        config = load_run_config(path, {"scheme": "eql5", "epochs": 1, "pooling": None})
        assert config.scheme == "EQL5"
        assert config.train.epochs == 1
        assert config.pooling == "single"

    @pytest.mark.unit
    def test_empty_value_keeps_the_default(self, tmp_path: Path) -> None:
        assert load_run_config(write(tmp_path, "max_rank=\n")).max_rank == 50

    @pytest.mark.unit
    def test_protocol_and_synth_parameters(self) -> None:
        config = load_run_config(overrides={"max_rank": 5, "distractors_as_junk": False, "synth_num_ids": 8})
        assert config.protocol.max_rank == 5
        assert not config.protocol.distractors_as_junk
        assert config.synth_parameters["num_ids"] == 8
        assert config.synth_parameters["seed"] == 42

    @pytest.mark.unit
    @pytest.mark.parametrize(
        ("text", "match"),
        [
            ("bogus=1\n", "bogus"),
            ("scheme=EQL7\n", "Unknown partition scheme"),
            ("per_part_bits=0\n", "per_part_bits"),
            ("lr=-1\n", "lr"),
            ("pooling=median\n", "pooling"),
            ("scheme=UnEQL3\nshare_weights=true\n", "equal-sized"),
            ("scheme\n", "expected 'key=value'"),
            ("epochs=1\nepochs=2\n", "duplicate key 'epochs'"),
        ],
    )
    def test_invalid_values(self, tmp_path: Path, text: str, match: str) -> None:
        with pytest.raises(ConfigurationError, match=match):
            load_run_config(write(tmp_path, text))

    @pytest.mark.unit
    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigurationError, match="Cannot read run configuration"):
            load_run_config(tmp_path / "absent.txt")


class TestWriteRunConfig:
    @pytest.mark.unit
    def test_round_trip(self, tmp_path: Path) -> None:
        config = load_run_config(
            overrides={"scheme": "Overlap4", "share_weights": True, "lr": 0.02, "steps_per_epoch": 3, "workers": 2}
        )
        path = tmp_path / "effective.txt"
        write_run_config(config, path)
        assert load_run_config(path) == config

    @pytest.mark.unit
    def test_flat_rendering(self) -> None:
        text = format_run_config(load_run_config(overrides={"share_weights": True}))
        lines = text.splitlines()
        assert lines[0] == "scheme=EQL4"
        assert "share_weights=true" in lines
        assert "lr=0.05" in lines
        assert not any(line.startswith(("dataset_dir", "steps_per_epoch", "train")) for line in lines)
