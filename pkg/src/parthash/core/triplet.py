# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
Triplet sampling, the relaxed triplet hinge loss and the training loop.

The loss on relaxed codes ``a``, ``p``, ``n`` (anchor, positive, negative) is

    max(0, margin - (|a - n|^2 - |a - p|^2))

with squared Euclidean distances. Gradients are zero when the hinge argument
is not strictly positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, NamedTuple

import numpy as np
import structlog
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from parthash.core.netcore import MAX_SEED
from parthash.exceptions import DimensionError, InfeasibleSamplingError, TrainingDivergenceError

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from parthash.core.netcore import FloatArray, HashNet

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

DEFAULT_MARGIN = 1.0


class TrainConfig(BaseModel):
    """
    Hyperparameters of one training run.

    Attributes
    ----------
    lr (float):
        Learning rate.
    batch_size (int):
        Triplets per step.
    epochs (int):
        Number of epochs (0 leaves the network untouched).
    weight_decay (float):
        L2 decay added to every gradient.
    seed (int):
        Base seed for triplet sampling.
    margin (float):
        Hinge margin.
    steps_per_epoch (int | None):
        Steps per epoch; ``None`` means ``ceil(N / batch_size)``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    lr: float = Field(default=0.05, gt=0)
    batch_size: int = Field(default=32, gt=0)
    epochs: int = Field(default=30, ge=0)
    weight_decay: float = Field(default=1e-4, ge=0)
    seed: int = Field(default=42, ge=0, le=MAX_SEED)
    margin: float = Field(default=DEFAULT_MARGIN, gt=0)
    steps_per_epoch: int | None = Field(default=None, gt=0)

    def steps_for(self, sample_count: int) -> int:
        """Number of steps in one epoch over ``sample_count`` images."""
        if self.steps_per_epoch is not None:
            return self.steps_per_epoch
        return max(1, math.ceil(sample_count / self.batch_size))


class Triplet(NamedTuple):
    anchor_index: int
    positive_index: int
    negative_index: int


@dataclass(frozen=True)
class TripletBatch:
    """Index arrays of one sampled batch, plus where it came from."""

    anchors: NDArray[np.int64]
    positives: NDArray[np.int64]
    negatives: NDArray[np.int64]
    epoch: int
    batch_seed: int

    @property
    def triplets(self) -> list[Triplet]:
        return [
            Triplet(int(a), int(p), int(n))
            for a, p, n in zip(self.anchors, self.positives, self.negatives, strict=True)
        ]

    def __len__(self) -> int:
        return len(self.anchors)


@dataclass(frozen=True)
class LossReport:
    mean_loss: float
    active_fraction: float


@dataclass(frozen=True)
class EpochLoss:
    """One row of the loss history."""

    epoch: int
    mean_loss: float
    active_fraction: float


@dataclass
class TrainResult:
    net: HashNet
    history: list[EpochLoss] = field(default_factory=list)


# --- sampling ---


@dataclass(frozen=True)
class _LabelGroups:
    inverse: NDArray[np.intp]
    counts: NDArray[np.intp]
    order: NDArray[np.intp]
    starts: NDArray[np.intp]
    position: NDArray[np.intp]
    eligible: NDArray[np.intp]


def _group_labels(labels: Sequence[Any] | NDArray[Any]) -> _LabelGroups:
    values = np.asarray(labels)
    if values.ndim != 1 or values.size == 0:
        msg = "Triplet sampling needs a non-empty 1-D label list."
        raise InfeasibleSamplingError(msg)
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    if counts.size < 2:  # noqa: PLR2004
        msg = "Triplet sampling needs at least two distinct identities."
        raise InfeasibleSamplingError(msg)
    eligible = np.flatnonzero(counts[inverse] >= 2)  # noqa: PLR2004
    if eligible.size == 0:
        msg = "No identity has two or more images; no positive pair exists."
        raise InfeasibleSamplingError(msg)
    order = np.argsort(inverse, kind="stable")
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    position = np.empty_like(order)
    position[order] = np.arange(order.size) - starts[inverse[order]]
    return _LabelGroups(inverse, counts, order, starts, position, eligible)


def check_sampling_feasible(labels: Sequence[Any] | NDArray[Any]) -> None:
    """
    Raise when no valid triplet can be drawn from ``labels``.

    Raises:
        InfeasibleSamplingError: Fewer than two identities, or none with two images.
    """
    _group_labels(labels)


def sample_triplets(
    labels: Sequence[Any] | NDArray[Any], count: int, seed: int, epoch: int = 0
) -> TripletBatch:
    """
    Draw ``count`` valid triplets uniformly at random.

    Anchors are uniform over images whose identity has at least two images,
    positives uniform over the anchor's other images, negatives uniform over
    images of any other identity.

    Raises:
        InfeasibleSamplingError: If no valid triplet exists.
    """
    if count <= 0:
        msg = f"Triplet count must be positive, got {count}."
        raise InfeasibleSamplingError(msg)
    groups = _group_labels(labels)
    rng = np.random.default_rng(seed)
    total = groups.order.size

    anchors = rng.choice(groups.eligible, size=count)
    identity = groups.inverse[anchors]
    size = groups.counts[identity]
    start = groups.starts[identity]

    # skip the anchor's own slot inside its identity block
    pick = rng.integers(0, size - 1)
    pick += pick >= groups.position[anchors]
    positives = groups.order[start + pick]

    # skip the anchor identity's whole block in the sorted order
    pick = rng.integers(0, total - size)
    pick += np.where(pick >= start, size, 0)
    negatives = groups.order[pick]

    return TripletBatch(
        anchors=anchors.astype(np.int64),
        positives=positives.astype(np.int64),
        negatives=negatives.astype(np.int64),
        epoch=epoch,
        batch_seed=int(seed),
    )


# --- loss ---


def _check_lengths(*vectors: NDArray[Any]) -> None:
    shapes = {v.shape for v in vectors}
    if len(shapes) != 1:
        msg = f"Anchor, positive and negative codes differ in shape: {sorted(shapes)}."
        raise DimensionError(msg)


def inner_term(a: Any, p: Any, n: Any) -> float:
    """``|a - n|^2 - |a - p|^2``."""
    a, p, n = (np.asarray(v, dtype=np.float64) for v in (a, p, n))
    _check_lengths(a, p, n)
    return float(np.sum((a - n) ** 2) - np.sum((a - p) ** 2))


def triplet_loss(a: Any, p: Any, n: Any, margin: float = DEFAULT_MARGIN) -> float:
    """
    Hinge loss of one triplet of relaxed codes.

    Raises:
        DimensionError: If the three vectors differ in length.
    """
    return max(0.0, margin - inner_term(a, p, n))


def triplet_loss_grads(
    a: Any, p: Any, n: Any, margin: float = DEFAULT_MARGIN
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """
    Gradients of `triplet_loss` with respect to ``a``, ``p`` and ``n``.

    Raises:
        DimensionError: If the three vectors differ in length.
    """
    a, p, n = (np.asarray(v, dtype=np.float64) for v in (a, p, n))
    if margin - inner_term(a, p, n) <= 0:
        return np.zeros_like(a), np.zeros_like(p), np.zeros_like(n)
    return 2.0 * (n - p), 2.0 * (p - a), 2.0 * (a - n)


def batch_triplet_loss(
    a: Any, p: Any, n: Any, margin: float = DEFAULT_MARGIN
) -> tuple[LossReport, FloatArray, FloatArray, FloatArray]:
    """
    Mean loss over rows of ``(B, q)`` code matrices and its gradients.

    The gradients are those of the mean, so each row's gradient is divided by B.
    """
    a, p, n = (np.asarray(v, dtype=np.float64) for v in (a, p, n))
    _check_lengths(a, p, n)
    if a.ndim != 2 or a.shape[0] == 0:  # noqa: PLR2004
        msg = f"Batch codes must be a non-empty (B, q) matrix, got {a.shape}."
        raise DimensionError(msg)
    batch = a.shape[0]
    hinge = margin - (np.sum((a - n) ** 2, axis=1) - np.sum((a - p) ** 2, axis=1))
    active = hinge > 0
    losses = np.where(active, hinge, 0.0)
    scale = (active / batch)[:, None]
    report = LossReport(mean_loss=float(losses.mean()), active_fraction=float(active.mean()))
    return report, scale * 2.0 * (n - p), scale * 2.0 * (p - a), scale * 2.0 * (a - n)


# --- training ---


def batch_seed(seed: int, epoch: int, step: int) -> int:
    """Seed for one step, derived from ``(seed, epoch, step)``."""
    return int(np.random.SeedSequence([seed, epoch, step]).generate_state(1, dtype=np.uint64)[0])


def train_hashnet(
    net: HashNet,
    images: Any,
    labels: Sequence[Any] | NDArray[Any],
    config: TrainConfig,
    *,
    on_epoch: Callable[[EpochLoss], None] | None = None,
) -> TrainResult:
    """
    Train ``net`` with mini-batch SGD on sampled triplets.

    Args:
        net: The network to start from.
        images: Array of shape ``(N, *net.input_shape)``.
        labels: Identity label per image.
        config: Hyperparameters.
        on_epoch: Called with every finished epoch's loss row.

    Raises:
        DimensionError: If images and labels disagree in length.
        InfeasibleSamplingError: If no valid triplet exists.
        TrainingDivergenceError: If the loss or a gradient becomes non-finite.
    """
    data = np.asarray(images, dtype=np.float64)
    if data.shape[0] != len(labels):
        msg = f"{data.shape[0]} images but {len(labels)} labels."
        raise DimensionError(msg)
    check_sampling_feasible(labels)

    steps = config.steps_for(data.shape[0])
    result = TrainResult(net=net)
    bound = log.bind(seed=config.seed, q=net.hash_length)
    bound.info("Training started.", images=data.shape[0], epochs=config.epochs, steps_per_epoch=steps)

    for epoch in range(config.epochs):
        losses = np.empty(steps)
        actives = np.empty(steps)
        for step in range(steps):
            batch = sample_triplets(labels, config.batch_size, batch_seed(config.seed, epoch, step), epoch)
            index = np.concatenate((batch.anchors, batch.positives, batch.negatives))
            stacked = data[index]
            codes = result.net.forward(stacked)
            a, p, n = np.split(codes, 3)
            report, grad_a, grad_p, grad_n = batch_triplet_loss(a, p, n, config.margin)
            if not math.isfinite(report.mean_loss):
                msg = "Triplet loss became non-finite"
                raise TrainingDivergenceError(msg, epoch + 1)
            grads = result.net.backward(stacked, np.concatenate((grad_a, grad_p, grad_n)))
            try:
                result.net = result.net.sgd_step(grads, config.lr, config.weight_decay)
            except TrainingDivergenceError as e:
                msg = "Gradient became non-finite"
                raise TrainingDivergenceError(msg, epoch + 1, e) from e
            losses[step] = report.mean_loss
            actives[step] = report.active_fraction
            bound.debug("Step finished.", epoch=epoch + 1, step=step, loss=report.mean_loss)

        row = EpochLoss(epoch=epoch + 1, mean_loss=float(losses.mean()), active_fraction=float(actives.mean()))
        result.history.append(row)
        bound.info("Epoch finished.", epoch=row.epoch, mean_loss=row.mean_loss, active_fraction=row.active_fraction)
        if on_epoch is not None:
            on_epoch(row)

    return result
