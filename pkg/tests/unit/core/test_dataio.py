# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""Unit tests for pixmap decoding, Market-style directories and the synthetic dataset."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from parthash.core.dataio import (
    DISTRACTOR_ID,
    GALLERY_DIR,
    IMAGE_HEIGHT,
    IMAGE_WIDTH,
    QUERY_DIR,
    TRAIN_DIR,
    DatasetSplit,
    MarketLabel,
    PersonImage,
    band_patterns,
    camera_transform,
    decode_raster,
    encode_raster,
    load_market_dir,
    palette_size,
    parse_market_name,
    read_raster,
    resize_bilinear,
    synth_dataset,
    write_market_dir,
    write_raster,
)
from parthash.core.evalkit import GalleryRecord, good_junk_split
from parthash.exceptions import ConfigurationError, FormatError, IngestionError
from tests.utils.common import identities, images_to_array

if TYPE_CHECKING:
    from pathlib import Path


def blank_pixels(value: float = 0.5) -> np.ndarray:
    return np.full((IMAGE_HEIGHT, IMAGE_WIDTH, 3), value)


class TestDecodeRaster:
    @pytest.mark.unit
    def test_header_with_comment(self) -> None:
        data = b"P6\n# written by hand\n2 1\n255\n" + bytes([255, 0, 0, 0, 51, 255])
        pixels = decode_raster(data)
        assert pixels.shape == (1, 2, 3)
        np.testing.assert_allclose(pixels[0, 0], [1.0, 0.0, 0.0])
        np.testing.assert_allclose(pixels[0, 1], [0.0, 0.2, 1.0])

    @pytest.mark.unit
    def test_sixteen_bit_samples_are_big_endian(self) -> None:
        data = b"P6 1 1 65535\n" + bytes([0xFF, 0xFF, 0x00, 0x00, 0x80, 0x00])
        np.testing.assert_allclose(decode_raster(data)[0, 0], [1.0, 0.0, 0x8000 / 65535])

    @pytest.mark.unit
    def test_encode_then_decode_keeps_eight_bit_values(self) -> None:
        pixels = np.random.default_rng(0).integers(0, 256, size=(3, 5, 3)) / 255.0
        np.testing.assert_allclose(decode_raster(encode_raster(pixels)), pixels)

    @pytest.mark.unit
    def test_ascii_pixmap_is_rejected(self) -> None:
        with pytest.raises(FormatError, match="only P6"):
            decode_raster(b"P3\n1 1\n255\n0 0 0\n")

    @pytest.mark.unit
    def test_truncated_raster(self) -> None:
        with pytest.raises(FormatError, match="expected 12 bytes"):
            decode_raster(b"P6\n2 2\n255\n" + bytes(5))

    @pytest.mark.unit
    def test_sample_above_maxval(self) -> None:
        with pytest.raises(FormatError, match="exceeds maxval"):
            decode_raster(b"P6\n1 1\n15\n" + bytes([1, 2, 16]))

    @pytest.mark.unit
    def test_missing_dimension(self) -> None:
        with pytest.raises(FormatError, match="expected height"):
            decode_raster(b"P6\n2 x\n255\n")

    @pytest.mark.unit
    def test_missing_whitespace_before_data(self) -> None:
        with pytest.raises(FormatError, match="missing whitespace"):
            decode_raster(b"P6\n1 1\n255")

    @pytest.mark.unit
    @pytest.mark.parametrize("data", [b"P61 1 255\n" + bytes(3), b"P6#x\n1 1 255\n" + bytes(3), b"P6"])
    def test_magic_must_be_followed_by_whitespace(self, data: bytes) -> None:
        with pytest.raises(FormatError, match="followed by whitespace") as excinfo:
            decode_raster(data)
        assert excinfo.value.offset == 2

    @pytest.mark.unit
    def test_any_whitespace_after_magic(self) -> None:
        assert decode_raster(b"P6\t1 1 255\n" + bytes([0, 51, 255])).tolist() == [[[0.0, 0.2, 1.0]]]

    @pytest.mark.unit
    def test_zero_maxval(self) -> None:
        with pytest.raises(FormatError, match="outside 1..65535"):
            decode_raster(b"P6\n1 1\n0\n" + bytes(3))

    @pytest.mark.unit
    def test_encode_needs_three_channels(self) -> None:
        with pytest.raises(IngestionError):
            encode_raster(np.zeros((2, 2)))


class TestReadRaster:
    @pytest.mark.unit
    def test_from_bytes_and_path(self, tmp_path: Path) -> None:
        pixels = np.full((2, 3, 3), 1.0)
        path = tmp_path / "white.ppm"
        data = write_raster(pixels, path)
        np.testing.assert_array_equal(read_raster(data), pixels)
        np.testing.assert_array_equal(read_raster(path), pixels)

    @pytest.mark.unit
    def test_errors_name_the_file(self, tmp_path: Path) -> None:
        path = tmp_path / "broken.ppm"
        path.write_bytes(b"P6\n1 1\n255\n")
        with pytest.raises(FormatError, match="broken.ppm") as excinfo:
            read_raster(path)
        assert excinfo.value.offset is not None

    @pytest.mark.unit
    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(IngestionError, match="Cannot read image"):
            read_raster(tmp_path / "gone.ppm")


class TestResize:
    @pytest.mark.unit
    def test_half_pixel_centres(self) -> None:
        column = np.array([0.0, 1.0])[:, None, None] * np.ones((2, 1, 3))
        resized = resize_bilinear(column, height=4, width=1)
        np.testing.assert_allclose(resized[:, 0, 0], [0.0, 0.25, 0.75, 1.0])

    @pytest.mark.unit
    def test_identity_size_is_a_copy(self) -> None:
        pixels = blank_pixels()
        resized = resize_bilinear(pixels)
        np.testing.assert_array_equal(resized, pixels)
        assert resized is not pixels

    @pytest.mark.unit
    def test_constant_image_stays_constant(self) -> None:
        resized = resize_bilinear(np.full((37, 19, 3), 0.3))
        assert resized.shape == (IMAGE_HEIGHT, IMAGE_WIDTH, 3)
        np.testing.assert_allclose(resized, 0.3)


class TestPersonImage:
    @pytest.mark.unit
    def test_pixels_are_read_only(self) -> None:
        image = PersonImage(pixels=blank_pixels(), identity=3, camera=1, source_id="x")
        assert not image.pixels.flags.writeable
        assert not image.is_distractor

    @pytest.mark.unit
    @pytest.mark.parametrize(
        ("pixels", "identity", "camera"),
        [
            (np.zeros((64, 64, 3)), 1, 1),
            (np.full((IMAGE_HEIGHT, IMAGE_WIDTH, 3), 1.5), 1, 1),
            (np.full((IMAGE_HEIGHT, IMAGE_WIDTH, 3), np.nan), 1, 1),
            (np.zeros((IMAGE_HEIGHT, IMAGE_WIDTH, 3)), 1, 0),
            (np.zeros((IMAGE_HEIGHT, IMAGE_WIDTH, 3)), -2, 1),
        ],
        ids=["geometry", "range", "nan", "camera", "identity"],
    )
    def test_invalid_images(self, pixels: np.ndarray, identity: int, camera: int) -> None:
        with pytest.raises(IngestionError):
            PersonImage(pixels=pixels, identity=identity, camera=camera, source_id="bad")


class TestMarketNames:
    @pytest.mark.unit
    def test_regular_name(self) -> None:
        assert parse_market_name("0002_c1s1_000451_03.ppm") == MarketLabel(2, 1, 1, 451, 3)

    @pytest.mark.unit
    def test_distractor_name(self) -> None:
        label = parse_market_name("-1_c3s2_012345_01.jpg")
        assert label is not None
        assert label.identity == DISTRACTOR_ID

    @pytest.mark.unit
    def test_junk_name_is_a_distractor(self) -> None:
        assert parse_market_name("0000_c6s1_000676_04.ppm") == MarketLabel(DISTRACTOR_ID, 6, 1, 676, 4)

    @pytest.mark.unit
    def test_junk_gallery_images_are_junk_for_every_query(self, tmp_path: Path) -> None:
        gallery = tmp_path / "market" / GALLERY_DIR
        gallery.mkdir(parents=True)
        write_raster(blank_pixels(), gallery / "0000_c1s1_000001_00.ppm")
        write_raster(blank_pixels(), gallery / "0007_c2s1_000001_00.ppm")

        split = load_market_dir(tmp_path / "market")

        assert [image.is_distractor for image in split.gallery] == [True, False]
        records = [GalleryRecord.from_image(image) for image in split.gallery]
        assert good_junk_split((7, 1), records) == (frozenset({1}), frozenset({0}))

    @pytest.mark.unit
    @pytest.mark.parametrize("name", ["readme.txt", "0002_s1_000451_03.ppm", "0002_c0s1_000451_03.ppm"])
    def test_names_that_do_not_parse(self, name: str) -> None:
        assert parse_market_name(name) is None


class TestSynthDataset:
    @pytest.mark.unit
    def test_split_sizes(self, tiny_split: DatasetSplit) -> None:
        assert (len(tiny_split.train), len(tiny_split.query), len(tiny_split.gallery)) == (12, 6, 6)
        assert set(identities(tiny_split.train)) == {1, 2, 3}
        assert set(identities(tiny_split.query)) == {4, 5, 6}
        assert set(identities(tiny_split.gallery)) == {4, 5, 6}
        assert {image.camera for image in tiny_split.query} == {1, 2}

    @pytest.mark.unit
    def test_same_seed_same_pixels(self) -> None:
        first = synth_dataset(4, 2, 2, 0.05, seed=3)
        second = synth_dataset(4, 2, 2, 0.05, seed=3)
        other = synth_dataset(4, 2, 2, 0.05, seed=4)
        np.testing.assert_array_equal(images_to_array(first.gallery), images_to_array(second.gallery))
        assert not np.array_equal(images_to_array(first.gallery), images_to_array(other.gallery))

    @pytest.mark.unit
    def test_one_image_per_camera_uses_camera_one_as_query(self) -> None:
        split = synth_dataset(4, 1, 3, 0.0, seed=1)
        assert {image.camera for image in split.query} == {1}
        assert {image.camera for image in split.gallery} == {2, 3}

    @pytest.mark.unit
    def test_distractors_join_the_gallery(self) -> None:
        split = synth_dataset(4, 2, 2, 0.0, seed=1, num_distractors=5)
        distractors = [image for image in split.gallery if image.is_distractor]
        assert len(distractors) == 5
        assert {image.camera for image in distractors} == {1, 2}
        assert not any(image.is_distractor for image in split.query)

    @pytest.mark.unit
    def test_identities_differ_in_their_bands(self) -> None:
        split = synth_dataset(10, 1, 2, 0.0, seed=2)
        band_means = {image.identity: image.pixels[::32, 0].round(6).tobytes() for image in split.train}
        assert len(set(band_means.values())) == len(band_means)

    @pytest.mark.unit
    def test_patterns_are_distinct(self) -> None:
        patterns = band_patterns(300, np.random.default_rng(0))
        assert len({tuple(row) for row in patterns.tolist()}) == 300
        assert palette_size(300) == 5

    @pytest.mark.unit
    def test_camera_transform_range(self) -> None:
        assert camera_transform(1, 3) == (1.0, 0.0)
        assert camera_transform(3, 3) == pytest.approx((0.7, 0.12))

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "arguments",
        [(1, 2, 2, 0.1), (4, 0, 2, 0.1), (4, 2, 1, 0.1), (4, 2, 2, -0.1), (4, 2, 2, float("nan"))],
        ids=["ids", "images", "cameras", "noise", "nan-noise"],
    )
    def test_invalid_arguments(self, arguments: tuple[int, int, int, float]) -> None:
        with pytest.raises(ConfigurationError):
            synth_dataset(*arguments, seed=0)


class TestMarketDirectory:
    @pytest.mark.unit
    def test_written_directory_loads_back(self, tiny_split: DatasetSplit, dataset_dir: Path) -> None:
        (dataset_dir / QUERY_DIR / "notes.txt").write_text("hello", encoding="utf-8")
        (dataset_dir / GALLERY_DIR / "0004_c1s1_000000_00.jpg").write_bytes(b"\xff\xd8")

        loaded = load_market_dir(dataset_dir, workers=2)

        assert len(loaded.train) == len(tiny_split.train)
        assert [image.source_id for image in loaded.query] == sorted(image.source_id for image in tiny_split.query)
        assert len(loaded.skipped) == 2
        assert "unsupported raster format" in loaded.skip_report()
        first = next(image for image in tiny_split.train if image.source_id == loaded.train[0].source_id)
        np.testing.assert_allclose(loaded.train[0].pixels, first.pixels, atol=0.5 / 255 + 1e-12)

    @pytest.mark.unit
    def test_worker_count_does_not_change_the_result(self, dataset_dir: Path) -> None:
        single = load_market_dir(dataset_dir, workers=1)
        many = load_market_dir(dataset_dir, workers=4)
        np.testing.assert_array_equal(images_to_array(single.gallery), images_to_array(many.gallery))

    @pytest.mark.unit
    def test_other_sizes_are_resized(self, tmp_path: Path) -> None:
        train = tmp_path / "market" / TRAIN_DIR
        train.mkdir(parents=True)
        write_raster(np.full((40, 20, 3), 0.2), train / "0001_c1s1_000001_00.ppm")

        split = load_market_dir(tmp_path / "market")

        assert split.train[0].pixels.shape == (IMAGE_HEIGHT, IMAGE_WIDTH, 3)
        np.testing.assert_allclose(split.train[0].pixels, 51 / 255)
        assert split.query == ()

    @pytest.mark.unit
    def test_missing_directory(self, tmp_path: Path) -> None:
        with pytest.raises(IngestionError, match="not found"):
            load_market_dir(tmp_path / "nowhere")

    @pytest.mark.unit
    def test_directory_without_images(self, tmp_path: Path) -> None:
        (tmp_path / "empty" / TRAIN_DIR).mkdir(parents=True)
        with pytest.raises(IngestionError, match="No loadable images"):
            load_market_dir(tmp_path / "empty")

    @pytest.mark.unit
    def test_malformed_pixmap_fails_the_load(self, tmp_path: Path) -> None:
        gallery = tmp_path / "market" / GALLERY_DIR
        gallery.mkdir(parents=True)
        (gallery / "0001_c1s1_000001_00.ppm").write_bytes(b"P6\n1 1\n255\n")
        with pytest.raises(FormatError):
            load_market_dir(tmp_path / "market")
