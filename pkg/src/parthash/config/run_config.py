# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
Experiment configuration.

A run is described by a flat ``key=value`` text file, for example::

    # EQL4 bank on the synthetic set
    scheme=EQL4
    per_part_bits=32
    epochs=30
    lr=0.05

Keys that belong to `TrainConfig` (``lr``, ``batch_size``, ``epochs``,
``weight_decay``, ``seed``, ``margin``, ``steps_per_epoch``) are gathered
into the nested ``train`` model. Command-line flags override file values.
Every value is validated before any work starts and unknown keys are
rejected.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal, Self

import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from parthash.core.evalkit import EvalProtocol
from parthash.core.keyvalue import format_key_value_text, parse_key_value_text
from parthash.core.parts import PartitionScheme, builtin_scheme, canonical_scheme_name
from parthash.core.triplet import TrainConfig
from parthash.exceptions import ConfigurationError

if TYPE_CHECKING:
    from collections.abc import Mapping

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

TRAIN_KEYS = frozenset(TrainConfig.model_fields)


class RunConfig(BaseModel):
    """
    Everything one ``train`` / ``encode`` / ``eval`` run needs.

    Attributes
    ----------
    scheme (str):
        Builtin partition scheme, matched case-insensitively.
    per_part_bits (int):
        Code bits per part (``q``).
    architecture ("conv" | "mlp"), hidden (int):
        Network stack per part and its hidden width.
    share_weights (bool):
        Train a single network on all (equal-sized) strips.
    pooling ("single" | "avg" | "max"):
        Multiple-query mode used by ``eval``.
    dataset_dir (Path | None):
        Market-style dataset; ``None`` selects the synthetic generator.
    synth_* :
        Parameters of the synthetic generator.
    output_dir (Path):
        Root of everything the run writes.
    workers (int):
        Thread count for part training, encoding and evaluation.
    max_rank (int), distractors_as_junk (bool):
        Evaluation protocol.
    per_part (bool):
        Also score every part's ``per_part_bits`` slice of the code on its own.
    train (TrainConfig):
        Training hyperparameters.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    scheme: str = "EQL4"
    per_part_bits: int = Field(default=32, ge=1)
    architecture: Literal["conv", "mlp"] = "conv"
    hidden: int = Field(default=64, ge=1)
    share_weights: bool = False
    pooling: Literal["single", "avg", "max"] = "single"

    dataset_dir: Path | None = None
    synth_num_ids: int = Field(default=50, ge=2)
    synth_images_per_id_per_cam: int = Field(default=4, ge=1)
    synth_num_cams: int = Field(default=2, ge=1)
    synth_noise_sigma: float = Field(default=0.08, ge=0)
    synth_seed: int = Field(default=42, ge=0)
    synth_num_distractors: int = Field(default=0, ge=0)

    output_dir: Path = Path("runs")
    workers: int = Field(default=1, ge=1)
    max_rank: int = Field(default=50, ge=1)
    distractors_as_junk: bool = True
    per_part: bool = False

    train: TrainConfig = Field(default_factory=TrainConfig)

    @model_validator(mode="before")
    @classmethod
    def gather_train_keys(cls, data: Any) -> Any:
        """Move flat training keys into the nested ``train`` mapping."""
        if not isinstance(data, dict):
            return data
        flat = {key: value for key, value in data.items() if key in TRAIN_KEYS}
        if not flat:
            return data
        rest = {key: value for key, value in data.items() if key not in TRAIN_KEYS}
        nested = rest.get("train", {})
        if isinstance(nested, TrainConfig):
            nested = nested.model_dump()
        rest["train"] = {**nested, **flat}
        return rest

    @field_validator("scheme")
    @classmethod
    def check_scheme(cls, value: str) -> str:
        try:
            return canonical_scheme_name(value)
        except ConfigurationError as e:
            raise ValueError(str(e)) from e

    @model_validator(mode="after")
    def check_sharing(self) -> Self:
        scheme = self.partition_scheme
        if self.share_weights and not scheme.equal_sized:
            msg = f"share_weights needs equal-sized strips; {scheme.name} has heights {scheme.heights}"
            raise ValueError(msg)
        return self

    @property
    def partition_scheme(self) -> PartitionScheme:
        return builtin_scheme(self.scheme)

    @property
    def protocol(self) -> EvalProtocol:
        return EvalProtocol(max_rank=self.max_rank, distractors_as_junk=self.distractors_as_junk)

    @property
    def synth_parameters(self) -> dict[str, Any]:
        """Keyword arguments for `parthash.core.dataio.synth_dataset`."""
        return {
            "num_ids": self.synth_num_ids,
            "images_per_id_per_cam": self.synth_images_per_id_per_cam,
            "num_cams": self.synth_num_cams,
            "noise_sigma": self.synth_noise_sigma,
            "seed": self.synth_seed,
            "num_distractors": self.synth_num_distractors,
        }

    def flat(self) -> dict[str, Any]:
        """The configuration as one flat mapping, training keys inlined."""
        values = self.model_dump(mode="json", exclude={"train"})
        values.update(self.train.model_dump(mode="json"))
        return values


def _describe(error: ValidationError) -> str:
    problems = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"] if part != "train") or "config"
        problems.append(f"{location}: {item['msg']}")
    return "; ".join(problems)


def load_run_config(path: Path | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """
    Build a `RunConfig` from an optional ``key=value`` file plus overrides.

    Overrides whose value is ``None`` are ignored, so unset CLI flags can be
    passed through unchanged. Empty values in the file mean "use the default".

    Raises:
        ConfigurationError: If the file is unreadable or malformed, a key is
            unknown, or a value is invalid.
    """
    values: dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            msg = f"Cannot read run configuration {path}"
            raise ConfigurationError(msg, e) from e
        values = {key: value for key, value in parse_key_value_text(text, str(path)).items() if value != ""}
        log.debug("Run configuration file read.", path=str(path), keys=sorted(values))
    if overrides:
        values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return RunConfig.model_validate(values)
    except ValidationError as e:
        msg = f"Invalid run configuration: {_describe(e)}"
        raise ConfigurationError(msg, e) from e


def format_run_config(config: RunConfig) -> str:
    """Render ``config`` as a ``key=value`` file that `load_run_config` reads back."""
    return format_key_value_text(config.flat())


def write_run_config(config: RunConfig, path: Path) -> None:
    Path(path).write_text(format_run_config(config), encoding="utf-8")
