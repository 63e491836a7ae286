# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
Horizontal part partitioning, per-part training and code concatenation.

A `PartitionScheme` cuts a 128 x 64 image into ordered horizontal strips.
Each strip gets its own `HashNet` (seeded ``base_seed + k``), and an image's
code is the concatenation of the per-strip codes from top to bottom.

Builtin schemes (row offset, height):

========  ==========================================
WHOLE     (0,128)
EQL3      (0,42) (42,42) (84,42)
UnEQL3    (0,24) (24,56) (80,48)
Overlap3  (0,56) (36,56) (72,56)
EQL4      (0,32) (32,32) (64,32) (96,32)
UnEQL4    (0,28) (28,40) (68,40) (108,20)
Overlap4  (0,48) (27,48) (53,48) (80,48)
EQL5      (0,25) (25,25) (50,25) (75,25) (100,25)
========  ==========================================

EQL strips have height ``H // M`` and drop the remainder rows; UnEQL strips
are contiguous; Overlap offsets are ``floor(k * (H - h) / (M - 1) + 0.5)``.

A bank is stored as a directory holding ``part_<k>.pdhnet`` checkpoints and a
``manifest.txt`` of ``key=value`` lines.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final, Literal, Self

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from parthash.core.dataio import CHANNELS, IMAGE_HEIGHT, IMAGE_WIDTH, PersonImage
from parthash.core.hamcode import BitCode, CodeIndex, binarize, binarize_matrix
from parthash.core.keyvalue import format_key_value_text, parse_key_value_text
from parthash.core.netcore import MAX_SEED, build_hashnet, load_checkpoint, save_checkpoint
from parthash.core.triplet import train_hashnet
from parthash.exceptions import ConfigurationError, DimensionError, FormatError, IngestionError

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from parthash.core.netcore import FloatArray, HashNet
    from parthash.core.triplet import EpochLoss, TrainConfig

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

MANIFEST_NAME: Final[str] = "manifest.txt"
BANK_FORMAT: Final[str] = "PDHBANK1"
ENCODE_CHUNK: Final[int] = 256

Architecture = Literal["conv", "mlp"]


class PartitionScheme(BaseModel):
    """
    Ordered horizontal strips over an ``image_height x image_width`` image.

    Attributes
    ----------
    name (str):
        Identifier, e.g. ``EQL4``.
    image_height (int), image_width (int):
        Image size the strips refer to.
    strips (tuple[tuple[int, int], ...]):
        ``(row_offset, height)`` pairs ordered top to bottom; width is always
        the full image width.
    """

    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    image_height: int = Field(default=IMAGE_HEIGHT, gt=0)
    image_width: int = Field(default=IMAGE_WIDTH, gt=0)
    strips: tuple[tuple[int, int], ...]

    @model_validator(mode="after")
    def check_strips(self) -> Self:
        """Every strip lies inside the image; strips are ordered by offset."""
        if not self.strips:
            msg = "A partition scheme needs at least one strip."
            raise ValueError(msg)
        for offset, height in self.strips:
            if offset < 0 or height <= 0 or offset + height > self.image_height:
                msg = f"Strip ({offset}, {height}) does not fit in {self.image_height} rows."
                raise ValueError(msg)
        offsets = [offset for offset, _ in self.strips]
        if offsets != sorted(offsets):
            msg = f"Strips must be ordered top to bottom, got offsets {offsets}."
            raise ValueError(msg)
        return self

    @property
    def part_count(self) -> int:
        return len(self.strips)

    @property
    def heights(self) -> tuple[int, ...]:
        return tuple(height for _, height in self.strips)

    @property
    def equal_sized(self) -> bool:
        return len(set(self.heights)) == 1

    def strip_input_shape(self, part: int) -> tuple[int, int, int]:
        """Network input shape ``(channels, height, width)`` of strip ``part``."""
        return (CHANNELS, self.strips[part][1], self.image_width)


# --- builtin schemes ---


def _equal(parts: int) -> list[tuple[int, int]]:
    height = IMAGE_HEIGHT // parts
    return [(k * height, height) for k in range(parts)]


def _contiguous(*heights: int) -> list[tuple[int, int]]:
    offsets = np.concatenate(([0], np.cumsum(heights)[:-1]))
    return [(int(offset), height) for offset, height in zip(offsets, heights, strict=True)]


def _overlapping(parts: int, height: int) -> list[tuple[int, int]]:
    stride = (IMAGE_HEIGHT - height) / (parts - 1)
    return [(math.floor(k * stride + 0.5), height) for k in range(parts)]


_BUILTIN_RULES: Final[dict[str, Callable[[], list[tuple[int, int]]]]] = {
    "WHOLE": lambda: [(0, IMAGE_HEIGHT)],
    "EQL3": lambda: _equal(3),
    "UnEQL3": lambda: _contiguous(24, 56, 48),
    "Overlap3": lambda: _overlapping(3, 56),
    "EQL4": lambda: _equal(4),
    "UnEQL4": lambda: _contiguous(28, 40, 40, 20),
    "Overlap4": lambda: _overlapping(4, 48),
    "EQL5": lambda: _equal(5),
}
BUILTIN_SCHEME_NAMES: Final[tuple[str, ...]] = tuple(_BUILTIN_RULES)
_CANONICAL_NAMES: Final[dict[str, str]] = {name.upper(): name for name in BUILTIN_SCHEME_NAMES}


def canonical_scheme_name(name: str) -> str:
    """
    Return the builtin spelling of ``name`` (matching is case-insensitive).

    Raises:
        ConfigurationError: If ``name`` is not a builtin scheme.
    """
    canonical = _CANONICAL_NAMES.get(name.strip().upper())
    if canonical is None:
        msg = f"Unknown partition scheme '{name}'. Known schemes: {', '.join(BUILTIN_SCHEME_NAMES)}."
        raise ConfigurationError(msg)
    return canonical


def builtin_scheme(name: str) -> PartitionScheme:
    """
    Return one of the builtin 128 x 64 schemes.

    Raises:
        ConfigurationError: If ``name`` is unknown.
    """
    canonical = canonical_scheme_name(name)
    return PartitionScheme(name=canonical, strips=tuple(_BUILTIN_RULES[canonical]()))


# --- extraction ---


def _pixels(image: PersonImage | Any) -> FloatArray:
    return image.pixels if isinstance(image, PersonImage) else np.asarray(image, dtype=np.float64)


def extract_parts(image: PersonImage | Any, scheme: PartitionScheme) -> list[FloatArray]:
    """
    Slice ``image`` into the scheme's strips, each ``(height, width, 3)``.

    Raises:
        IngestionError: If the image size differs from the scheme's.
    """
    pixels = _pixels(image)
    expected = (scheme.image_height, scheme.image_width, CHANNELS)
    if pixels.shape != expected:
        msg = f"Scheme {scheme.name} expects images of shape {expected}, got {pixels.shape}."
        raise IngestionError(msg)
    return [pixels[offset : offset + height] for offset, height in scheme.strips]


def strip_batch(images: Sequence[PersonImage | Any], scheme: PartitionScheme, part: int) -> FloatArray:
    """Strip ``part`` of every image as a network batch ``(n, 3, height, width)``."""
    strips = [extract_parts(image, scheme)[part] for image in images]
    return np.ascontiguousarray(np.stack(strips).transpose(0, 3, 1, 2))


# --- banks ---


@dataclass(frozen=True)
class PartModelBank:
    """
    Trained networks for every strip of a scheme.

    With ``share_weights`` one network serves every (equal-sized) strip.
    A bank is read-only and may be used for encoding from several threads.
    """

    scheme: PartitionScheme
    nets: tuple[HashNet, ...]
    per_part_bits: int
    share_weights: bool = False
    architecture: Architecture = "conv"

    def __post_init__(self) -> None:
        expected = 1 if self.share_weights else self.scheme.part_count
        if self.share_weights and not self.scheme.equal_sized:
            msg = f"Shared weights need equal-sized strips; {self.scheme.name} has heights {self.scheme.heights}."
            raise ConfigurationError(msg)
        if len(self.nets) != expected:
            msg = f"Bank for {self.scheme.name} needs {expected} networks, got {len(self.nets)}."
            raise DimensionError(msg)
        for part in range(self.scheme.part_count):
            net = self.net_for(part)
            if net.input_shape != self.scheme.strip_input_shape(part) or net.hash_length != self.per_part_bits:
                msg = (
                    f"Network for part {part} takes {net.input_shape} -> {net.hash_length} bits, "
                    f"strip needs {self.scheme.strip_input_shape(part)} -> {self.per_part_bits} bits."
                )
                raise DimensionError(msg)

    def net_for(self, part: int) -> HashNet:
        return self.nets[0] if self.share_weights else self.nets[part]

    @property
    def code_length(self) -> int:
        """Bits per image, ``M * q``."""
        return self.scheme.part_count * self.per_part_bits

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(net.seed for net in self.nets)


@dataclass(frozen=True)
class PartTrainingResult:
    bank: PartModelBank
    histories: tuple[list[EpochLoss], ...]


def part_seed(base_seed: int, part: int) -> int:
    seed = base_seed + part
    if seed > MAX_SEED:
        msg = f"Seed {base_seed} + part {part} overflows 64 bits."
        raise ConfigurationError(msg)
    return seed


def train_part_bank(
    images: Sequence[PersonImage],
    scheme: PartitionScheme,
    config: TrainConfig,
    *,
    per_part_bits: int = 32,
    architecture: Architecture = "conv",
    hidden: int = 64,
    share_weights: bool = False,
    workers: int | None = 1,
) -> PartTrainingResult:
    """
    Train one network per strip, or one shared network on all strips.

    Part ``k`` is initialised and sampled with seed ``config.seed + k``, so a
    single-strip scheme reproduces whole-image training bit for bit. Parts
    train concurrently on ``workers`` threads; results do not depend on the
    worker count.

    Raises:
        ConfigurationError: If ``share_weights`` is set and strips differ in height.
        InfeasibleSamplingError: If the labels admit no triplet.
        TrainingDivergenceError: If training diverges.
    """
    labels = np.array([image.identity for image in images])
    if share_weights and not scheme.equal_sized:
        msg = f"Shared weights need equal-sized strips; {scheme.name} has heights {scheme.heights}."
        raise ConfigurationError(msg)

    log.info(
        "Training part bank.",
        scheme=scheme.name,
        parts=scheme.part_count,
        q=per_part_bits,
        share_weights=share_weights,
        images=len(images),
    )

    if share_weights:
        union = np.concatenate([strip_batch(images, scheme, part) for part in range(scheme.part_count)])
        net = build_hashnet(scheme.strip_input_shape(0), per_part_bits, config.seed, architecture, hidden)
        result = train_hashnet(net, union, np.tile(labels, scheme.part_count), config)
        bank = PartModelBank(scheme, (result.net,), per_part_bits, share_weights=True, architecture=architecture)
        return PartTrainingResult(bank=bank, histories=(result.history,))

    def train_one(part: int) -> tuple[HashNet, list[EpochLoss]]:
        seed = part_seed(config.seed, part)
        net = build_hashnet(scheme.strip_input_shape(part), per_part_bits, seed, architecture, hidden)
        part_config = config.model_copy(update={"seed": seed})
        outcome = train_hashnet(net, strip_batch(images, scheme, part), labels, part_config)
        final_loss = outcome.history[-1].mean_loss if outcome.history else None
        log.info("Part trained.", part=part, seed=seed, final_loss=final_loss)
        return outcome.net, outcome.history

    with ThreadPoolExecutor(max_workers=workers) as pool:
        trained = list(pool.map(train_one, range(scheme.part_count)))

    bank = PartModelBank(
        scheme, tuple(net for net, _ in trained), per_part_bits, share_weights=False, architecture=architecture
    )
    return PartTrainingResult(bank=bank, histories=tuple(history for _, history in trained))


def init_part_bank(
    scheme: PartitionScheme,
    per_part_bits: int,
    seed: int,
    *,
    architecture: Architecture = "conv",
    hidden: int = 64,
) -> PartModelBank:
    """Untrained bank with the same per-part seeding as `train_part_bank`."""
    nets = tuple(
        build_hashnet(scheme.strip_input_shape(part), per_part_bits, part_seed(seed, part), architecture, hidden)
        for part in range(scheme.part_count)
    )
    return PartModelBank(scheme, nets, per_part_bits, share_weights=False, architecture=architecture)


# --- encoding ---


@dataclass(frozen=True)
class EncodedBatch:
    """Relaxed codes ``(n, M * q)`` and their packed words."""

    relaxed: FloatArray
    words: Any

    def index(self, ids: Sequence[str]) -> CodeIndex:
        return CodeIndex(self.relaxed.shape[1], self.words, ids)


def encode_relaxed(
    bank: PartModelBank, images: Sequence[PersonImage | Any], workers: int | None = 1
) -> FloatArray:
    """
    Concatenated relaxed codes of ``images``, strips in top-to-bottom order.

    Raises:
        IngestionError: If an image does not match the scheme's size.
    """
    if not images:
        return np.empty((0, bank.code_length))

    def encode_part(part: int) -> FloatArray:
        net = bank.net_for(part)
        chunks = [
            net.encode(strip_batch(images[start : start + ENCODE_CHUNK], bank.scheme, part))
            for start in range(0, len(images), ENCODE_CHUNK)
        ]
        return np.concatenate(chunks)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        per_part = list(pool.map(encode_part, range(bank.scheme.part_count)))
    return np.concatenate(per_part, axis=1)


def encode_batch(bank: PartModelBank, images: Sequence[PersonImage | Any], workers: int | None = 1) -> EncodedBatch:
    relaxed = encode_relaxed(bank, images, workers)
    return EncodedBatch(relaxed=relaxed, words=binarize_matrix(relaxed))


def encode_image(bank: PartModelBank, image: PersonImage | Any) -> BitCode:
    """
    Binary code of one image: each part's relaxed code thresholded at 0.5,
    concatenated in strip order.

    Raises:
        IngestionError: If the image does not match the scheme's size.
    """
    return binarize(encode_relaxed(bank, [image])[0])


# --- persistence ---


def _format_strips(scheme: PartitionScheme) -> str:
    return ";".join(f"{offset}:{height}" for offset, height in scheme.strips)


def _parse_strips(text: str) -> tuple[tuple[int, int], ...]:
    strips = []
    for item in text.split(";"):
        offset, _, height = item.partition(":")
        strips.append((int(offset), int(height)))
    return tuple(strips)


def save_bank(bank: PartModelBank, directory: Path) -> list[Path]:
    """Write every network and the manifest into ``directory``; return the written files."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    names = [f"part_{k}.pdhnet" for k in range(len(bank.nets))]
    written = []
    for name, net in zip(names, bank.nets, strict=True):
        save_checkpoint(net, root / name)
        written.append(root / name)
    manifest = {
        "format": BANK_FORMAT,
        "scheme": bank.scheme.name,
        "image_height": bank.scheme.image_height,
        "image_width": bank.scheme.image_width,
        "strips": _format_strips(bank.scheme),
        "per_part_bits": bank.per_part_bits,
        "share_weights": bank.share_weights,
        "architecture": bank.architecture,
        "seeds": ",".join(str(seed) for seed in bank.seeds),
        "nets": ",".join(names),
    }
    (root / MANIFEST_NAME).write_text(format_key_value_text(manifest), encoding="utf-8")
    written.append(root / MANIFEST_NAME)
    log.info("Part bank saved.", path=str(root), scheme=bank.scheme.name, nets=len(bank.nets))
    return written


def load_bank(directory: Path) -> PartModelBank:
    """
    Read a bank written by `save_bank`.

    Raises:
        FormatError: If the manifest or a checkpoint is missing, malformed or
            inconsistent with the others.
    """
    root = Path(directory)
    manifest_path = root / MANIFEST_NAME
    try:
        manifest = parse_key_value_text(manifest_path.read_text(encoding="utf-8"), str(manifest_path))
    except OSError as e:
        msg = f"Cannot read bank manifest {manifest_path}"
        raise FormatError(msg, None, e) from e
    except ConfigurationError as e:
        raise FormatError(str(e), None, e) from e

    if manifest.get("format") != BANK_FORMAT:
        msg = f"{manifest_path}: not a {BANK_FORMAT} manifest"
        raise FormatError(msg)
    try:
        scheme = PartitionScheme(
            name=manifest["scheme"],
            image_height=int(manifest["image_height"]),
            image_width=int(manifest["image_width"]),
            strips=_parse_strips(manifest["strips"]),
        )
        per_part_bits = int(manifest["per_part_bits"])
        share_weights = manifest["share_weights"] == "true"
        architecture = manifest["architecture"]
        net_names = manifest["nets"].split(",")
    except (KeyError, ValueError, ValidationError) as e:
        msg = f"{manifest_path}: incomplete or invalid manifest ({e})"
        raise FormatError(msg, None, e) from e
    if architecture not in {"conv", "mlp"}:
        msg = f"{manifest_path}: unknown architecture {architecture!r}"
        raise FormatError(msg)

    nets = tuple(load_checkpoint(root / name) for name in net_names)
    try:
        bank = PartModelBank(scheme, nets, per_part_bits, share_weights=share_weights, architecture=architecture)
    except (DimensionError, ConfigurationError) as e:
        msg = f"{manifest_path}: networks do not match the manifest"
        raise FormatError(msg, None, e) from e
    log.info("Part bank loaded.", path=str(root), scheme=scheme.name, nets=len(nets))
    return bank
