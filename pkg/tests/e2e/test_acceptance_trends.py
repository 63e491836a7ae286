# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
End-to-end retrieval trends on the synthetic pedestrian set.

Absolute accuracies depend on the data; these tests only check directions:
part-based codes beat whole-image codes, independent part networks beat a
shared one, longer codes do not hurt, and average pooling of several
queries is at least as good as a single query. Every bank is trained once
per module and reused.
"""

from __future__ import annotations

import statistics
from functools import cache
from typing import TYPE_CHECKING, Literal

import numpy as np
import pytest

from parthash.cli.main import main_app
from parthash.core.dataio import synth_dataset
from parthash.core.evalkit import GalleryRecord, evaluate, evaluate_pooled
from parthash.core.hamcode import bench_search
from parthash.core.parts import builtin_scheme, encode_batch, train_part_bank
from parthash.core.triplet import TrainConfig
from tests.utils.common import CLI_ENV

if TYPE_CHECKING:
    from pathlib import Path

    from typer.testing import CliRunner

    from parthash.core.dataio import DatasetSplit
    from parthash.core.parts import PartTrainingResult

SEEDS = (1, 2, 3)

Pooling = Literal["single", "avg", "max"]

pytestmark = [pytest.mark.e2e, pytest.mark.slow]


@cache
def acceptance_split() -> DatasetSplit:
    return synth_dataset(num_ids=50, images_per_id_per_cam=4, num_cams=2, noise_sigma=0.08, seed=42)


@cache
def trained(scheme: str, per_part_bits: int, seed: int, *, share_weights: bool = False) -> PartTrainingResult:
    return train_part_bank(
        acceptance_split().train,
        builtin_scheme(scheme),
        TrainConfig(seed=seed),
        per_part_bits=per_part_bits,
        share_weights=share_weights,
        workers=None,
    )


@cache
def mean_ap(
    scheme: str, per_part_bits: int, seed: int, *, share_weights: bool = False, pooling: Pooling = "single"
) -> float:
    split = acceptance_split()
    bank = trained(scheme, per_part_bits, seed, share_weights=share_weights).bank
    queries = [GalleryRecord.from_image(image) for image in split.query]
    gallery = [GalleryRecord.from_image(image) for image in split.gallery]
    encoded_query = encode_batch(bank, split.query, workers=None)
    gallery_codes = encode_batch(bank, split.gallery, workers=None).index([rec.record_id for rec in gallery])
    if pooling == "single":
        query_codes = encoded_query.index([rec.record_id for rec in queries])
        report = evaluate(queries, query_codes, gallery, gallery_codes, workers=None)
    else:
        report = evaluate_pooled(queries, encoded_query.relaxed, gallery, gallery_codes, pooling, workers=None)
    return report.mean_ap


class TestTrainingSanity:
    def test_loss_falls_and_parts_retrieve(self) -> None:
        result = trained("EQL4", 32, SEEDS[0])
        for history in result.histories:
            assert history[-1].mean_loss < 0.5 * history[0].mean_loss

        split = acceptance_split()
        queries = [GalleryRecord.from_image(image) for image in split.query]
        gallery = [GalleryRecord.from_image(image) for image in split.gallery]
        report = evaluate(
            queries,
            encode_batch(result.bank, split.query).index([rec.record_id for rec in queries]),
            gallery,
            encode_batch(result.bank, split.gallery).index([rec.record_id for rec in gallery]),
        )
        assert report.rank(1) >= 0.90


class TestRetrievalTrends:
    def test_parts_beat_the_whole_image(self) -> None:
        parts = statistics.median(mean_ap("EQL4", 32, seed) for seed in SEEDS)
        whole = statistics.median(mean_ap("WHOLE", 128, seed) for seed in SEEDS)
        assert parts >= 1.2 * whole

    def test_independent_parts_beat_shared_weights(self) -> None:
        wins = sum(mean_ap("EQL4", 32, seed) > mean_ap("EQL4", 32, seed, share_weights=True) for seed in SEEDS)
        assert wins >= 2

    def test_longer_codes_do_not_hurt(self) -> None:
        medians = [statistics.median(mean_ap("WHOLE", bits, seed) for seed in SEEDS) for bits in (16, 32, 64)]
        assert all(longer >= shorter - 0.02 for shorter, longer in zip(medians, medians[1:], strict=False))

    def test_average_pooling(self) -> None:
        single = [mean_ap("EQL4", 32, seed) for seed in SEEDS]
        average = [mean_ap("EQL4", 32, seed, pooling="avg") for seed in SEEDS]
        maximum = [mean_ap("EQL4", 32, seed, pooling="max") for seed in SEEDS]
        assert all(avg >= one - 0.01 for avg, one in zip(average, single, strict=True))
        assert sum(avg >= top - 0.02 for avg, top in zip(average, maximum, strict=True)) >= 2


class TestHammingSpeed:
    def test_counting_sort_pipeline_is_faster(self) -> None:
        report = bench_search(100_000, 2048, repeats=5, seed=0)
        assert report.rankings_agree
        assert report.speedup >= 5.0

    def test_counting_sort_scales_linearly(self) -> None:
        small = bench_search(100_000, 2048, repeats=5, seed=0)
        large = bench_search(200_000, 2048, repeats=5, seed=0)
        assert large.hamming_sort_ms <= 2.5 * small.hamming_sort_ms


class TestDeterminism:
    @pytest.mark.usefixtures("isolated_test_env")
    def test_training_twice_gives_identical_checkpoints(
        self, runner: CliRunner, run_config_file: Path, tmp_path: Path
    ) -> None:
        outputs = [tmp_path / "first", tmp_path / "second"]
        for out in outputs:
            args = ["train", "-r", str(run_config_file), "-o", str(out), "--architecture", "conv"]
            result = runner.invoke(main_app, args, env=CLI_ENV, catch_exceptions=False)
            assert result.exit_code == 0, result.output

        first, second = (sorted((out / "bank").iterdir()) for out in outputs)
        assert [path.name for path in first] == [path.name for path in second]
        assert all(a.read_bytes() == b.read_bytes() for a, b in zip(first, second, strict=True))
        assert np.array_equal(
            np.loadtxt(outputs[0] / "loss.csv", delimiter=",", skiprows=1),
            np.loadtxt(outputs[1] / "loss.csv", delimiter=",", skiprows=1),
        )
