# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
Image ingestion and synthetic datasets.

Real data comes from a Market-1501 style directory::

    <root>/bounding_box_train/   training images
    <root>/bounding_box_test/    gallery images
    <root>/query/                query images

with file names ``<id>_c<cam>s<seq>_<frame>_<n>.<ext>``; id ``-1`` marks a
distractor. Only binary portable pixmaps (``.ppm``/``.pnm``, type ``P6``) are
decoded; anything else is listed in the skip report and must be converted
beforehand (for example ``magick in.jpg out.ppm``).

Every image is bilinearly resized to 128 x 64 and scaled to [0, 1].

`synth_dataset` builds a deterministic dataset whose identities are four
horizontal colour bands, one per 32-row strip, seen through per-camera
brightness transforms and Gaussian noise.
"""

from __future__ import annotations

import colorsys
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Final, NamedTuple

import numpy as np
import structlog
from numpy.typing import NDArray

from parthash.exceptions import ConfigurationError, FormatError, IngestionError

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

IMAGE_HEIGHT: Final[int] = 128
IMAGE_WIDTH: Final[int] = 64
CHANNELS: Final[int] = 3
DISTRACTOR_ID: Final[int] = -1
MARKET_JUNK_ID: Final[int] = 0

TRAIN_DIR: Final[str] = "bounding_box_train"
GALLERY_DIR: Final[str] = "bounding_box_test"
QUERY_DIR: Final[str] = "query"

RASTER_SUFFIXES: Final[frozenset[str]] = frozenset({".ppm", ".pnm"})
MARKET_NAME: Final[re.Pattern[str]] = re.compile(r"^(-?\d+)_c(\d+)s(\d+)_(\d+)_(\d+)")

_SYNTH_BANDS: Final[int] = 4
_MIN_PALETTE: Final[int] = 4

FloatArray = NDArray[np.float64]


# --- types ---


@dataclass(frozen=True, eq=False)
class PersonImage:
    """
    One labelled pedestrian image.

    Attributes
    ----------
    pixels (ndarray):
        ``(128, 64, 3)`` float64 values in [0, 1], read-only.
    identity (int):
        Person id, ``-1`` for distractors.
    camera (int):
        Camera number, starting at 1.
    source_id (str):
        File stem or synthetic name.
    """

    pixels: FloatArray
    identity: int
    camera: int
    source_id: str

    def __post_init__(self) -> None:
        pixels = np.array(self.pixels, dtype=np.float64)
        if pixels.shape != (IMAGE_HEIGHT, IMAGE_WIDTH, CHANNELS):
            msg = f"{self.source_id}: expected {(IMAGE_HEIGHT, IMAGE_WIDTH, CHANNELS)} pixels, got {pixels.shape}."
            raise IngestionError(msg)
        if not (np.all(pixels >= 0.0) and np.all(pixels <= 1.0)):
            msg = f"{self.source_id}: pixel values must lie in [0, 1]."
            raise IngestionError(msg)
        if self.camera < 1 or self.identity < DISTRACTOR_ID:
            msg = f"{self.source_id}: invalid labels identity={self.identity} camera={self.camera}."
            raise IngestionError(msg)
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def is_distractor(self) -> bool:
        return self.identity == DISTRACTOR_ID


class SkippedFile(NamedTuple):
    path: str
    reason: str


@dataclass(frozen=True)
class DatasetSplit:
    """Train, query and gallery images plus the files that were not loaded."""

    train: tuple[PersonImage, ...] = ()
    query: tuple[PersonImage, ...] = ()
    gallery: tuple[PersonImage, ...] = ()
    skipped: tuple[SkippedFile, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.train) + len(self.query) + len(self.gallery)

    def skip_report(self) -> str:
        """Plain-text listing of skipped files, one ``path: reason`` per line."""
        return "".join(f"{item.path}: {item.reason}\n" for item in self.skipped)


class MarketLabel(NamedTuple):
    identity: int
    camera: int
    sequence: int
    frame: int
    box: int


def parse_market_name(name: str) -> MarketLabel | None:
    """
    Parse ``<id>_c<cam>s<seq>_<frame>_<n>``; ``None`` when it does not match.

    Market marks junk boxes with id ``0000`` and distractors with ``-1``; both
    come back as `DISTRACTOR_ID` so the evaluation treats them alike.
    """
    match = MARKET_NAME.match(Path(name).stem)
    if match is None:
        return None
    identity, camera, sequence, frame, box = (int(g) for g in match.groups())
    if identity < DISTRACTOR_ID or camera < 1:
        return None
    if identity == MARKET_JUNK_ID:
        identity = DISTRACTOR_ID
    return MarketLabel(identity, camera, sequence, frame, box)


# --- raster I/O ---


def _skip_space_and_comments(data: bytes, offset: int) -> int:
    while offset < len(data):
        byte = data[offset : offset + 1]
        if byte.isspace():
            offset += 1
        elif byte == b"#":
            end = data.find(b"\n", offset)
            offset = len(data) if end < 0 else end + 1
        else:
            break
    return offset


def _read_header_int(data: bytes, offset: int, what: str) -> tuple[int, int]:
    offset = _skip_space_and_comments(data, offset)
    start = offset
    while offset < len(data) and data[offset : offset + 1].isdigit():
        offset += 1
    if start == offset:
        msg = f"pixmap header: expected {what}"
        raise FormatError(msg, start)
    return int(data[start:offset]), offset


def decode_raster(data: bytes) -> FloatArray:
    """
    Decode a binary ``P6`` pixmap into ``(height, width, 3)`` values in [0, 1].

    Raises:
        FormatError: For other magic numbers, malformed headers or short data.
    """
    if data[:2] != b"P6":
        msg = f"pixmap header: unsupported magic {data[:2]!r}, only P6 is decoded"
        raise FormatError(msg, 0)
    if not data[2:3].isspace():
        msg = "pixmap header: magic number must be followed by whitespace"
        raise FormatError(msg, 2)
    width, offset = _read_header_int(data, 2, "width")
    height, offset = _read_header_int(data, offset, "height")
    maxval, offset = _read_header_int(data, offset, "maxval")
    if width == 0 or height == 0:
        msg = f"pixmap header: empty image {width}x{height}"
        raise FormatError(msg, offset)
    if not 0 < maxval < 2**16:
        msg = f"pixmap header: maxval {maxval} outside 1..65535"
        raise FormatError(msg, offset)
    if offset >= len(data) or not data[offset : offset + 1].isspace():
        msg = "pixmap header: missing whitespace before raster data"
        raise FormatError(msg, offset)
    offset += 1

    dtype = np.dtype(np.uint8) if maxval < 2**8 else np.dtype(">u2")
    expected = width * height * CHANNELS * dtype.itemsize
    if len(data) - offset < expected:
        msg = f"pixmap data: expected {expected} bytes, found {len(data) - offset}"
        raise FormatError(msg, offset)
    samples = np.frombuffer(data, dtype=dtype, count=width * height * CHANNELS, offset=offset)
    if samples.max(initial=0) > maxval:
        msg = f"pixmap data: sample exceeds maxval {maxval}"
        raise FormatError(msg, offset)
    return samples.reshape(height, width, CHANNELS).astype(np.float64) / maxval


def encode_raster(pixels: Any) -> bytes:
    """Encode ``(height, width, 3)`` values in [0, 1] as an 8-bit ``P6`` pixmap."""
    array = np.asarray(pixels, dtype=np.float64)
    if array.ndim != 3 or array.shape[2] != CHANNELS:  # noqa: PLR2004
        msg = f"Expected (height, width, 3) pixels, got {array.shape}."
        raise IngestionError(msg)
    quantized = np.clip(np.rint(array * 255.0), 0, 255).astype(np.uint8)
    header = f"P6\n{array.shape[1]} {array.shape[0]}\n255\n".encode("ascii")
    return header + quantized.tobytes()


def read_raster(source: Path | bytes) -> FloatArray:
    """
    Read a ``P6`` pixmap from a path or from bytes.

    Raises:
        FormatError: If the content is not a valid ``P6`` pixmap.
        IngestionError: If the file cannot be read.
    """
    if isinstance(source, bytes | bytearray):
        return decode_raster(bytes(source))
    try:
        data = Path(source).read_bytes()
    except OSError as e:
        msg = f"Cannot read image {source}"
        raise IngestionError(msg, e) from e
    try:
        return decode_raster(data)
    except FormatError as e:
        located = FormatError(f"{source}: {e}", None, e)
        located.offset = e.offset
        raise located from e


def write_raster(pixels: Any, path: Path | None = None) -> bytes:
    """Encode ``pixels`` as ``P6``; also write them to ``path`` when given."""
    data = encode_raster(pixels)
    if path is not None:
        Path(path).write_bytes(data)
    return data


def resize_bilinear(pixels: Any, height: int = IMAGE_HEIGHT, width: int = IMAGE_WIDTH) -> FloatArray:
    """
    Bilinear resize with half-pixel centres, clamped at the edges.

    Output pixel ``y`` samples source row ``(y + 0.5) * in_h / out_h - 0.5``.
    """
    array = np.asarray(pixels, dtype=np.float64)
    if array.shape[:2] == (height, width):
        return array.copy()

    def axis_weights(size_in: int, size_out: int) -> tuple[NDArray[np.intp], NDArray[np.intp], FloatArray]:
        position = (np.arange(size_out) + 0.5) * (size_in / size_out) - 0.5
        position = np.clip(position, 0.0, size_in - 1)
        low = np.floor(position).astype(np.intp)
        high = np.minimum(low + 1, size_in - 1)
        return low, high, position - low

    row_low, row_high, row_frac = axis_weights(array.shape[0], height)
    col_low, col_high, col_frac = axis_weights(array.shape[1], width)

    top, bottom = array[row_low], array[row_high]
    rows = top + row_frac[:, None, None] * (bottom - top)
    left, right = rows[:, col_low], rows[:, col_high]
    return left + col_frac[None, :, None] * (right - left)


# --- Market-style directories ---


def _load_one(path: Path, label: MarketLabel) -> PersonImage:
    pixels = read_raster(path)
    if pixels.shape[:2] != (IMAGE_HEIGHT, IMAGE_WIDTH):
        pixels = np.clip(resize_bilinear(pixels), 0.0, 1.0)
    return PersonImage(pixels=pixels, identity=label.identity, camera=label.camera, source_id=path.stem)


def _collect(directory: Path) -> tuple[list[tuple[Path, MarketLabel]], list[SkippedFile]]:
    accepted: list[tuple[Path, MarketLabel]] = []
    skipped: list[SkippedFile] = []
    if not directory.is_dir():
        log.warning("Dataset sub-directory missing.", path=str(directory))
        return accepted, skipped
    for path in sorted(p for p in directory.iterdir() if p.is_file()):
        if path.suffix.lower() not in RASTER_SUFFIXES:
            skipped.append(SkippedFile(str(path), "unsupported raster format, needs pre-conversion to P6"))
            continue
        label = parse_market_name(path.name)
        if label is None:
            skipped.append(SkippedFile(str(path), "file name does not follow <id>_c<cam>s<seq>_<frame>_<n>"))
            continue
        accepted.append((path, label))
    return accepted, skipped


def load_market_dir(path: Path, workers: int | None = None) -> DatasetSplit:
    """
    Load a Market-style directory.

    Files are decoded in parallel but returned sorted by file name.

    Raises:
        IngestionError: If the directory does not exist or holds no loadable image.
        FormatError: If a pixmap is malformed.
    """
    root = Path(path)
    if not root.is_dir():
        msg = f"Dataset directory not found: {root}"
        raise IngestionError(msg)

    parts: dict[str, list[tuple[Path, MarketLabel]]] = {}
    skipped: list[SkippedFile] = []
    for name in (TRAIN_DIR, QUERY_DIR, GALLERY_DIR):
        parts[name], rejected = _collect(root / name)
        skipped += rejected

    if not any(parts.values()):
        msg = f"No loadable images under {root}"
        raise IngestionError(msg)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        loaded = {
            name: tuple(pool.map(lambda item: _load_one(*item), entries)) for name, entries in parts.items()
        }

    split = DatasetSplit(
        train=loaded[TRAIN_DIR], query=loaded[QUERY_DIR], gallery=loaded[GALLERY_DIR], skipped=tuple(skipped)
    )
    log.info(
        "Dataset loaded.",
        path=str(root),
        train=len(split.train),
        query=len(split.query),
        gallery=len(split.gallery),
        skipped=len(skipped),
    )
    return split


def write_market_dir(split: DatasetSplit, path: Path) -> list[Path]:
    """Write ``split`` as ``P6`` files in a Market-style directory; return the written paths."""
    written: list[Path] = []
    root = Path(path)
    for name, images in ((TRAIN_DIR, split.train), (QUERY_DIR, split.query), (GALLERY_DIR, split.gallery)):
        directory = root / name
        directory.mkdir(parents=True, exist_ok=True)
        for image in images:
            target = directory / f"{image.source_id}.ppm"
            write_raster(image.pixels, target)
            written.append(target)
    log.info("Market-style directory written.", path=str(root), files=len(written))
    return written


# --- synthetic data ---


def _palette(size: int) -> FloatArray:
    """``size`` fully saturated colours with evenly spaced hues."""
    return np.array([colorsys.hsv_to_rgb(k / size, 0.85, 0.9) for k in range(size)])


def palette_size(num_ids: int) -> int:
    """Smallest palette (at least four colours) giving ``num_ids`` distinct four-band patterns."""
    size = _MIN_PALETTE
    while size**_SYNTH_BANDS < num_ids:
        size += 1
    return size


def band_patterns(num_ids: int, rng: np.random.Generator) -> NDArray[np.intp]:
    """Distinct ``(num_ids, 4)`` palette indices, one row per identity."""
    size = palette_size(num_ids)
    codes = rng.permutation(size**_SYNTH_BANDS)[:num_ids]
    digits = np.empty((num_ids, _SYNTH_BANDS), dtype=np.intp)
    for band in range(_SYNTH_BANDS - 1, -1, -1):
        digits[:, band] = codes % size
        codes = codes // size
    return digits


def camera_transform(camera: int, num_cams: int) -> tuple[float, float]:
    """``(scale, shift)`` applied to every pixel seen by ``camera``."""
    step = (camera - 1) / max(1, num_cams - 1)
    return 1.0 - 0.3 * step, 0.12 * step


def _render(
    colors: FloatArray, camera: int, num_cams: int, noise_sigma: float, rng: np.random.Generator
) -> FloatArray:
    band_height = IMAGE_HEIGHT // _SYNTH_BANDS
    base = np.repeat(colors, band_height, axis=0)[:, None, :]
    base = np.broadcast_to(base, (IMAGE_HEIGHT, IMAGE_WIDTH, CHANNELS))
    scale, shift = camera_transform(camera, num_cams)
    image = base * scale + shift
    if noise_sigma > 0:
        image = image + rng.normal(0.0, noise_sigma, size=image.shape)
    return np.clip(image, 0.0, 1.0)


def _check_synth_arguments(
    num_ids: int, images_per_id_per_cam: int, num_cams: int, noise_sigma: float, num_distractors: int
) -> None:
    problems = []
    if num_ids < 2:  # noqa: PLR2004
        problems.append(f"num_ids must be at least 2, got {num_ids}")
    if num_cams < 2:  # noqa: PLR2004
        problems.append(f"num_cams must be at least 2, got {num_cams}")
    if images_per_id_per_cam < 1:
        problems.append(f"images_per_id_per_cam must be positive, got {images_per_id_per_cam}")
    if not noise_sigma >= 0:
        problems.append(f"noise_sigma must be non-negative, got {noise_sigma}")
    if num_distractors < 0:
        problems.append(f"num_distractors must be non-negative, got {num_distractors}")
    if problems:
        raise ConfigurationError("Invalid synthetic dataset: " + "; ".join(problems))


def synth_dataset(
    num_ids: int,
    images_per_id_per_cam: int,
    num_cams: int,
    noise_sigma: float,
    seed: int,
    num_distractors: int = 0,
) -> DatasetSplit:
    """
    Generate a deterministic synthetic split.

    Identities ``1 .. num_ids // 2`` form the training set; the remaining
    identities are split per (identity, camera) with the first
    ``images_per_id_per_cam // 2`` images as queries and the rest as gallery.
    With one image per camera, camera 1 is the query view.

    All randomness comes from one ``numpy.random.default_rng(seed)`` consumed
    in a fixed order: band patterns, then noise per identity, camera and
    frame, then distractors.

    Raises:
        ConfigurationError: If a count or the noise level is invalid.
    """
    _check_synth_arguments(num_ids, images_per_id_per_cam, num_cams, noise_sigma, num_distractors)
    rng = np.random.default_rng(seed)
    palette = _palette(palette_size(num_ids))
    patterns = band_patterns(num_ids, rng)
    train_ids = num_ids // 2

    train: list[PersonImage] = []
    query: list[PersonImage] = []
    gallery: list[PersonImage] = []
    per_query_view = images_per_id_per_cam // 2
    for index in range(num_ids):
        identity = index + 1
        colors = palette[patterns[index]]
        for camera in range(1, num_cams + 1):
            for frame in range(images_per_id_per_cam):
                image = PersonImage(
                    pixels=_render(colors, camera, num_cams, noise_sigma, rng),
                    identity=identity,
                    camera=camera,
                    source_id=f"{identity:04d}_c{camera}s1_{frame:06d}_00",
                )
                if index < train_ids:
                    train.append(image)
                elif (per_query_view == 0 and camera == 1) or frame < per_query_view:
                    query.append(image)
                else:
                    gallery.append(image)

    size = len(palette)
    for frame in range(num_distractors):
        camera = frame % num_cams + 1
        colors = palette[rng.integers(0, size, size=_SYNTH_BANDS)]
        gallery.append(
            PersonImage(
                pixels=_render(colors, camera, num_cams, noise_sigma, rng),
                identity=DISTRACTOR_ID,
                camera=camera,
                source_id=f"-1_c{camera}s1_{frame:06d}_00",
            )
        )

    log.debug(
        "Synthetic dataset generated.",
        seed=seed,
        train=len(train),
        query=len(query),
        gallery=len(gallery),
    )
    return DatasetSplit(train=tuple(train), query=tuple(query), gallery=tuple(gallery))
