# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
Minimal feed-forward hash network.

A `HashNet` is an ordered stack of `LayerSpec` entries ending in a sigmoid
hash head, plus one ``(weights, bias)`` pair per parameterized layer. All
arithmetic is float64 numpy. Batches are arrays of shape
``(batch, *input_shape)`` where ``input_shape`` is ``(channels, height, width)``
for convolutional stacks; fully-connected layers flatten their input.

The network is treated as a value: `HashNet.sgd_step` returns a new network
and parameters are read-only arrays. `HashNet.forward` records the
activations needed by `HashNet.backward`, so a training network belongs to
one thread; `HashNet.encode` records nothing and is safe to share.

Checkpoints use the ``PDHNET1`` binary layout (all integers and reals
little-endian)::

    b"PDHNET1\\n"
    u64 seed, u32 q, u32 input rank, rank x u32 input dims
    u32 layer count
    per layer: u8 kind tag, u32 dim count, dims as u32,
               u32 tensor count, per tensor: u32 rank, rank x u32 shape,
               values as float64
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final, Literal, Self

import numpy as np
import structlog
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from parthash.core.binio import ByteReader
from parthash.exceptions import DimensionError, FormatError, NetworkStateError, TrainingDivergenceError

if TYPE_CHECKING:
    from collections.abc import Sequence

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

FloatArray = NDArray[np.float64]
ParameterGradients = tuple[tuple[FloatArray, ...], ...]
"""One tuple per layer, ``(d_weights, d_bias)`` or empty, aligned with `HashNet.layers`."""

CHECKPOINT_MAGIC: Final[bytes] = b"PDHNET1\n"
MAX_SEED: Final[int] = 2**64 - 1

_SIGMOID_LOW: Final[float] = float(np.nextafter(0.0, 1.0))
_SIGMOID_HIGH: Final[float] = float(np.nextafter(1.0, 0.0))


class LayerKind(StrEnum):
    """Supported layer types."""

    FULLY_CONNECTED = "fully_connected"
    RELU = "relu"
    CONV2D = "conv2d"
    MAX_POOL2D = "max_pool2d"
    SIGMOID_HASH_HEAD = "sigmoid_hash_head"


LAYER_TAGS: Final[dict[LayerKind, int]] = {
    LayerKind.FULLY_CONNECTED: 1,
    LayerKind.RELU: 2,
    LayerKind.CONV2D: 3,
    LayerKind.MAX_POOL2D: 4,
    LayerKind.SIGMOID_HASH_HEAD: 5,
}
_KIND_BY_TAG: Final[dict[int, LayerKind]] = {tag: kind for kind, tag in LAYER_TAGS.items()}

# fully_connected / hash head: (fan_in, fan_out); conv2d: (in, out, kernel, stride); max_pool2d: (size,)
_DIM_COUNTS: Final[dict[LayerKind, int]] = {
    LayerKind.FULLY_CONNECTED: 2,
    LayerKind.RELU: 0,
    LayerKind.CONV2D: 4,
    LayerKind.MAX_POOL2D: 1,
    LayerKind.SIGMOID_HASH_HEAD: 2,
}


class LayerSpec(BaseModel):
    """
    One layer of a `HashNet`.

    Attributes
    ----------
    kind (LayerKind):
        The layer type.
    dims (tuple[int, ...]):
        Kind-specific dimensions, see the constructors below.
    """

    model_config = ConfigDict(frozen=True)

    kind: LayerKind
    dims: tuple[int, ...] = ()

    @model_validator(mode="after")
    def check_dims(self) -> Self:
        """Validate the dimension count and positivity for the kind."""
        expected = _DIM_COUNTS[self.kind]
        if len(self.dims) != expected:
            msg = f"{self.kind} takes {expected} dimensions, got {len(self.dims)}"
            raise ValueError(msg)
        if any(d <= 0 for d in self.dims):
            msg = f"{self.kind} dimensions must be positive, got {self.dims}"
            raise ValueError(msg)
        return self

    @classmethod
    def fully_connected(cls, fan_in: int, fan_out: int) -> LayerSpec:
        return cls(kind=LayerKind.FULLY_CONNECTED, dims=(fan_in, fan_out))

    @classmethod
    def relu(cls) -> LayerSpec:
        return cls(kind=LayerKind.RELU)

    @classmethod
    def conv2d(cls, in_channels: int, out_channels: int, kernel: int, stride: int = 1) -> LayerSpec:
        return cls(kind=LayerKind.CONV2D, dims=(in_channels, out_channels, kernel, stride))

    @classmethod
    def max_pool2d(cls, size: int = 2) -> LayerSpec:
        return cls(kind=LayerKind.MAX_POOL2D, dims=(size,))

    @classmethod
    def sigmoid_hash_head(cls, fan_in: int, q: int) -> LayerSpec:
        return cls(kind=LayerKind.SIGMOID_HASH_HEAD, dims=(fan_in, q))

    @property
    def parameterized(self) -> bool:
        """True for layers that own a weight tensor and a bias."""
        return self.kind in {LayerKind.FULLY_CONNECTED, LayerKind.CONV2D, LayerKind.SIGMOID_HASH_HEAD}

    @property
    def parameter_shapes(self) -> tuple[tuple[int, ...], ...]:
        """Shapes of ``(weights, bias)``, empty for parameter-free layers."""
        match self.kind:
            case LayerKind.FULLY_CONNECTED | LayerKind.SIGMOID_HASH_HEAD:
                fan_in, fan_out = self.dims
                return ((fan_out, fan_in), (fan_out,))
            case LayerKind.CONV2D:
                in_ch, out_ch, kernel, _ = self.dims
                return ((out_ch, in_ch, kernel, kernel), (out_ch,))
            case _:
                return ()

    @property
    def parameter_count(self) -> int:
        return sum(math.prod(shape) for shape in self.parameter_shapes)

    def glorot_limit(self) -> float:
        """Half-width of the uniform initialisation interval."""
        match self.kind:
            case LayerKind.CONV2D:
                in_ch, out_ch, kernel, _ = self.dims
                fan_in, fan_out = in_ch * kernel * kernel, out_ch * kernel * kernel
            case _:
                fan_in, fan_out = self.dims
        return math.sqrt(6.0 / (fan_in + fan_out))


def infer_shapes(
    input_shape: Sequence[int], layers: Sequence[LayerSpec], *, require_head: bool = True
) -> list[tuple[int, ...]]:
    """
    Return the per-sample output shape of every layer.

    With ``require_head=False`` a partial stack (no hash head yet) is accepted.

    Raises:
        DimensionError: If adjacent layers disagree, the stack does not end in
            exactly one sigmoid hash head, or a spatial size collapses.
    """
    heads = sum(layer.kind is LayerKind.SIGMOID_HASH_HEAD for layer in layers)
    if require_head and (not layers or layers[-1].kind is not LayerKind.SIGMOID_HASH_HEAD):
        msg = "The last layer must be a sigmoid hash head."
        raise DimensionError(msg)
    if heads != int(require_head):
        msg = "A network has exactly one sigmoid hash head."
        raise DimensionError(msg)
    if not input_shape or any(d <= 0 for d in input_shape):
        msg = f"Input shape must be non-empty and positive, got {tuple(input_shape)}."
        raise DimensionError(msg)

    shape = tuple(int(d) for d in input_shape)
    shapes: list[tuple[int, ...]] = []
    for index, layer in enumerate(layers):
        where = f"layer {index} ({layer.kind})"
        match layer.kind:
            case LayerKind.FULLY_CONNECTED | LayerKind.SIGMOID_HASH_HEAD:
                fan_in = math.prod(shape)
                if fan_in != layer.dims[0]:
                    msg = f"{where} expects fan-in {layer.dims[0]}, receives {fan_in} from shape {shape}."
                    raise DimensionError(msg)
                shape = (layer.dims[1],)
            case LayerKind.CONV2D:
                in_ch, out_ch, kernel, stride = layer.dims
                if len(shape) != 3 or shape[0] != in_ch or min(shape[1:]) < kernel:  # noqa: PLR2004
                    msg = f"{where} expects ({in_ch}, >={kernel}, >={kernel}), receives {shape}."
                    raise DimensionError(msg)
                shape = (out_ch, (shape[1] - kernel) // stride + 1, (shape[2] - kernel) // stride + 1)
            case LayerKind.MAX_POOL2D:
                size = layer.dims[0]
                if len(shape) != 3 or min(shape[1:]) < size:  # noqa: PLR2004
                    msg = f"{where} needs a (channels, >={size}, >={size}) input, receives {shape}."
                    raise DimensionError(msg)
                shape = (shape[0], shape[1] // size, shape[2] // size)
            case LayerKind.RELU:
                pass
        shapes.append(shape)
    return shapes


# --- layer kernels ---


def sigmoid(z: FloatArray) -> FloatArray:
    """Numerically stable logistic function, kept strictly inside (0, 1)."""
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.clip(out, _SIGMOID_LOW, _SIGMOID_HIGH)


def _conv_windows(x: FloatArray, kernel: int, stride: int) -> FloatArray:
    windows = np.lib.stride_tricks.sliding_window_view(x, (kernel, kernel), axis=(2, 3))
    return windows[:, :, ::stride, ::stride]


def _pool_blocks(x: FloatArray, size: int) -> FloatArray:
    batch, channels, height, width = x.shape
    ho, wo = height // size, width // size
    cropped = x[:, :, : ho * size, : wo * size]
    return cropped.reshape(batch, channels, ho, size, wo, size).transpose(0, 1, 2, 4, 3, 5).reshape(
        batch, channels, ho, wo, size * size
    )


def _forward_layer(layer: LayerSpec, params: tuple[FloatArray, ...], x: FloatArray) -> tuple[FloatArray, Any]:
    match layer.kind:
        case LayerKind.FULLY_CONNECTED:
            weights, bias = params
            return x.reshape(x.shape[0], -1) @ weights.T + bias, x
        case LayerKind.SIGMOID_HASH_HEAD:
            weights, bias = params
            out = sigmoid(x.reshape(x.shape[0], -1) @ weights.T + bias)
            return out, (x, out)
        case LayerKind.RELU:
            return np.maximum(x, 0.0), x
        case LayerKind.CONV2D:
            weights, bias = params
            _, _, kernel, stride = layer.dims
            windows = _conv_windows(x, kernel, stride)
            out = np.einsum("bchwij,ocij->bohw", windows, weights, optimize=True)
            return out + bias[None, :, None, None], x
        case LayerKind.MAX_POOL2D:
            blocks = _pool_blocks(x, layer.dims[0])
            # ties route to the first maximum
            arg = blocks.argmax(axis=-1)
            return np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0], (x.shape, arg)
    msg = f"Unknown layer kind {layer.kind}"
    raise DimensionError(msg)


def _linear_backward(
    weights: FloatArray, x: FloatArray, grad: FloatArray
) -> tuple[FloatArray, tuple[FloatArray, FloatArray]]:
    flat = x.reshape(x.shape[0], -1)
    return (grad @ weights).reshape(x.shape), (grad.T @ flat, grad.sum(axis=0))


def _backward_layer(
    layer: LayerSpec, params: tuple[FloatArray, ...], cache: Any, grad: FloatArray
) -> tuple[FloatArray, tuple[FloatArray, ...]]:
    match layer.kind:
        case LayerKind.FULLY_CONNECTED:
            return _linear_backward(params[0], cache, grad)
        case LayerKind.SIGMOID_HASH_HEAD:
            x, out = cache
            return _linear_backward(params[0], x, grad * out * (1.0 - out))
        case LayerKind.RELU:
            return grad * (cache > 0), ()
        case LayerKind.CONV2D:
            weights, _ = params
            x = cache
            _, _, kernel, stride = layer.dims
            windows = _conv_windows(x, kernel, stride)
            d_weights = np.einsum("bohw,bchwij->ocij", grad, windows, optimize=True)
            d_bias = grad.sum(axis=(0, 2, 3))
            ho, wo = grad.shape[2:]
            d_x = np.zeros_like(x)
            for i in range(kernel):
                for j in range(kernel):
                    d_x[:, :, i : i + stride * (ho - 1) + 1 : stride, j : j + stride * (wo - 1) + 1 : stride] += (
                        np.einsum("bohw,oc->bchw", grad, weights[:, :, i, j], optimize=True)
                    )
            return d_x, (d_weights, d_bias)
        case LayerKind.MAX_POOL2D:
            shape, arg = cache
            size = layer.dims[0]
            batch, channels, ho, wo = arg.shape
            blocks = np.zeros((batch, channels, ho, wo, size * size))
            np.put_along_axis(blocks, arg[..., None], grad[..., None], axis=-1)
            d_x = np.zeros(shape)
            d_x[:, :, : ho * size, : wo * size] = (
                blocks.reshape(batch, channels, ho, wo, size, size)
                .transpose(0, 1, 2, 4, 3, 5)
                .reshape(batch, channels, ho * size, wo * size)
            )
            return d_x, ()
    msg = f"Unknown layer kind {layer.kind}"
    raise DimensionError(msg)


def _frozen(array: Any) -> FloatArray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class _ForwardTrace:
    batch: FloatArray
    caches: tuple[Any, ...]


class HashNet:
    """
    Feed-forward network ending in a sigmoid hash head.

    Attributes
    ----------
    layers (tuple[LayerSpec, ...]):
        The layer stack.
    parameters (tuple[tuple[ndarray, ...], ...]):
        ``(weights, bias)`` per parameterized layer, ``()`` otherwise.
    input_shape (tuple[int, ...]):
        Per-sample input shape.
    seed (int):
        Seed used for initialisation, kept for checkpoints.
    """

    def __init__(
        self,
        *,
        layers: Sequence[LayerSpec],
        parameters: Sequence[Sequence[Any]],
        input_shape: Sequence[int],
        seed: int,
    ) -> None:
        if not 0 <= seed <= MAX_SEED:
            msg = f"Seed must be an unsigned 64-bit integer, got {seed}."
            raise DimensionError(msg)
        self._layers = tuple(layers)
        self._input_shape = tuple(int(d) for d in input_shape)
        self._shapes = infer_shapes(self._input_shape, self._layers)
        self._seed = int(seed)

        if len(parameters) != len(self._layers):
            msg = f"Expected parameters for {len(self._layers)} layers, got {len(parameters)}."
            raise DimensionError(msg)
        frozen: list[tuple[FloatArray, ...]] = []
        for index, (layer, layer_params) in enumerate(zip(self._layers, parameters, strict=True)):
            arrays = tuple(_frozen(p) for p in layer_params)
            shapes = tuple(a.shape for a in arrays)
            if shapes != layer.parameter_shapes:
                msg = f"layer {index} ({layer.kind}) expects parameter shapes {layer.parameter_shapes}, got {shapes}."
                raise DimensionError(msg)
            frozen.append(arrays)
        self._parameters = tuple(frozen)
        self._trace: _ForwardTrace | None = None

    @classmethod
    def from_specs(cls, input_shape: Sequence[int], layers: Sequence[LayerSpec], seed: int) -> HashNet:
        """
        Build a network with Glorot-uniform weights and zero biases.

        Layers draw from one ``numpy.random.default_rng(seed)`` in stack order,
        so equal specs and seeds give bit-identical parameters.
        """
        infer_shapes(input_shape, layers)
        rng = np.random.default_rng(seed)
        parameters: list[tuple[FloatArray, ...]] = []
        for layer in layers:
            if not layer.parameterized:
                parameters.append(())
                continue
            weight_shape, bias_shape = layer.parameter_shapes
            limit = layer.glorot_limit()
            parameters.append((rng.uniform(-limit, limit, size=weight_shape), np.zeros(bias_shape)))
        net = cls(layers=layers, parameters=parameters, input_shape=input_shape, seed=seed)
        log.debug("Hash network initialised.", seed=seed, q=net.hash_length, parameters=net.parameter_count)
        return net

    # --- properties ---

    @property
    def layers(self) -> tuple[LayerSpec, ...]:
        return self._layers

    @property
    def parameters(self) -> tuple[tuple[FloatArray, ...], ...]:
        return self._parameters

    @property
    def input_shape(self) -> tuple[int, ...]:
        return self._input_shape

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def hash_length(self) -> int:
        """Code length q produced by the hash head."""
        return self._layers[-1].dims[1]

    @property
    def parameter_count(self) -> int:
        return sum(layer.parameter_count for layer in self._layers)

    @property
    def output_shapes(self) -> list[tuple[int, ...]]:
        return list(self._shapes)

    # --- passes ---

    def _check_batch(self, batch: Any) -> FloatArray:
        array = np.asarray(batch, dtype=np.float64)
        if array.ndim != len(self._input_shape) + 1 or array.shape[1:] != self._input_shape or array.shape[0] == 0:
            msg = (
                f"layer 0 ({self._layers[0].kind}) expects a batch of shape (n, *{self._input_shape}), "
                f"got {array.shape}."
            )
            raise DimensionError(msg)
        return array

    def _run(self, batch: FloatArray) -> tuple[FloatArray, tuple[Any, ...]]:
        x = batch
        caches: list[Any] = []
        for layer, params in zip(self._layers, self._parameters, strict=True):
            x, cache = _forward_layer(layer, params, x)
            caches.append(cache)
        return x, tuple(caches)

    def forward(self, batch: Any) -> FloatArray:
        """
        Return relaxed codes of shape ``(n, q)`` and record the pass for `backward`.

        Raises:
            DimensionError: If the batch does not match the input shape.
        """
        array = self._check_batch(batch)
        out, caches = self._run(array)
        self._trace = _ForwardTrace(batch=array, caches=caches)
        return out

    def encode(self, batch: Any) -> FloatArray:
        """Forward pass that records nothing; usable from several threads."""
        out, _ = self._run(self._check_batch(batch))
        return out

    def backward(self, batch: Any, output_grad: Any) -> ParameterGradients:
        """
        Back-propagate ``output_grad`` through the recorded forward pass of ``batch``.

        Raises:
            NetworkStateError: If the last forward pass was not for this batch.
            DimensionError: If ``output_grad`` is not ``(n, q)``.
        """
        array = np.asarray(batch, dtype=np.float64)
        trace = self._trace
        if trace is None or not (
            trace.batch is array or (trace.batch.shape == array.shape and np.array_equal(trace.batch, array))
        ):
            msg = "backward() requires a recorded forward() pass for the same batch."
            raise NetworkStateError(msg)

        grad = np.asarray(output_grad, dtype=np.float64)
        if grad.shape != (array.shape[0], self.hash_length):
            msg = f"Output gradient must have shape {(array.shape[0], self.hash_length)}, got {grad.shape}."
            raise DimensionError(msg)

        grads: list[tuple[FloatArray, ...]] = [()] * len(self._layers)
        for index in range(len(self._layers) - 1, -1, -1):
            grad, layer_grads = _backward_layer(
                self._layers[index], self._parameters[index], trace.caches[index], grad
            )
            grads[index] = layer_grads
        return tuple(grads)

    def sgd_step(self, grads: ParameterGradients, lr: float, weight_decay: float = 0.0) -> HashNet:
        """
        Return a new network with ``p - lr * (g + weight_decay * p)`` applied.

        Raises:
            DimensionError: If gradient shapes do not match the parameters.
            TrainingDivergenceError: If a gradient is not finite.
        """
        if len(grads) != len(self._parameters):
            msg = f"Expected gradients for {len(self._parameters)} layers, got {len(grads)}."
            raise DimensionError(msg)
        updated: list[tuple[FloatArray, ...]] = []
        for index, (params, layer_grads) in enumerate(zip(self._parameters, grads, strict=True)):
            if len(params) != len(layer_grads) or any(
                p.shape != np.shape(g) for p, g in zip(params, layer_grads, strict=True)
            ):
                msg = f"Gradient shapes for layer {index} ({self._layers[index].kind}) do not match its parameters."
                raise DimensionError(msg)
            if not all(np.isfinite(g).all() for g in layer_grads):
                msg = f"Non-finite gradient in layer {index} ({self._layers[index].kind})."
                raise TrainingDivergenceError(msg)
            updated.append(
                tuple(p - lr * (np.asarray(g) + weight_decay * p) for p, g in zip(params, layer_grads, strict=True))
            )
        return self.with_parameters(updated)

    def with_parameters(self, parameters: Sequence[Sequence[Any]]) -> HashNet:
        """Return a copy of this network carrying ``parameters``."""
        return HashNet(layers=self._layers, parameters=parameters, input_shape=self._input_shape, seed=self._seed)

    def same_parameters(self, other: HashNet) -> bool:
        """Bit-exact parameter and architecture comparison."""
        return (
            self._layers == other.layers
            and self._input_shape == other.input_shape
            and all(
                np.array_equal(a, b)
                for mine, theirs in zip(self._parameters, other.parameters, strict=True)
                for a, b in zip(mine, theirs, strict=True)
            )
        )


def build_hashnet(
    input_shape: Sequence[int],
    q: int,
    seed: int,
    architecture: Literal["conv", "mlp"] = "conv",
    hidden: int = 64,
) -> HashNet:
    """
    Build one of the two stock architectures.

    ``conv``: conv(C->8, 3x3) relu maxpool2 conv(8->16, 3x3) relu maxpool2
    fc(->hidden) relu hash(->q). ``mlp``: fc(->hidden) relu hash(->q).
    """
    layers: list[LayerSpec]
    if architecture == "conv":
        if len(input_shape) != 3:  # noqa: PLR2004
            msg = f"The conv architecture needs a (channels, height, width) input, got {tuple(input_shape)}."
            raise DimensionError(msg)
        layers = [
            LayerSpec.conv2d(input_shape[0], 8, 3),
            LayerSpec.relu(),
            LayerSpec.max_pool2d(2),
            LayerSpec.conv2d(8, 16, 3),
            LayerSpec.relu(),
            LayerSpec.max_pool2d(2),
        ]
        flat = math.prod(infer_shapes(input_shape, layers, require_head=False)[-1])
    elif architecture == "mlp":
        layers = []
        flat = math.prod(input_shape)
    else:
        msg = f"Unknown architecture '{architecture}'."
        raise DimensionError(msg)
    layers += [LayerSpec.fully_connected(flat, hidden), LayerSpec.relu(), LayerSpec.sigmoid_hash_head(hidden, q)]
    return HashNet.from_specs(input_shape, layers, seed)


# --- checkpoints ---


def to_checkpoint_bytes(net: HashNet) -> bytes:
    """Serialise ``net`` in the ``PDHNET1`` layout."""
    chunks = [
        CHECKPOINT_MAGIC,
        struct.pack("<QII", net.seed, net.hash_length, len(net.input_shape)),
        struct.pack(f"<{len(net.input_shape)}I", *net.input_shape),
        struct.pack("<I", len(net.layers)),
    ]
    for layer, params in zip(net.layers, net.parameters, strict=True):
        chunks.append(struct.pack("<BI", LAYER_TAGS[layer.kind], len(layer.dims)))
        chunks.append(struct.pack(f"<{len(layer.dims)}I", *layer.dims))
        chunks.append(struct.pack("<I", len(params)))
        for tensor in params:
            chunks.append(struct.pack(f"<I{tensor.ndim}I", tensor.ndim, *tensor.shape))
            chunks.append(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    return b"".join(chunks)


def from_checkpoint_bytes(data: bytes, source: str = "checkpoint") -> HashNet:
    """
    Parse a ``PDHNET1`` buffer.

    Raises:
        FormatError: On bad magic, truncation, unknown tags or inconsistent shapes.
    """
    reader = ByteReader(data, source)
    reader.expect_magic(CHECKPOINT_MAGIC)
    seed = reader.u64()
    q = reader.u32()
    input_shape = reader.unpack(f"{reader.u32()}I")
    layer_count = reader.u32()

    layers: list[LayerSpec] = []
    parameters: list[tuple[FloatArray, ...]] = []
    for _ in range(layer_count):
        tag_offset = reader.offset
        tag = reader.u8()
        kind = _KIND_BY_TAG.get(tag)
        if kind is None:
            msg = f"unknown layer tag {tag}"
            raise reader.fail(msg, tag_offset)
        dims = reader.unpack(f"{reader.u32()}I")
        try:
            layers.append(LayerSpec(kind=kind, dims=dims))
        except ValidationError as e:
            msg = f"{source}: invalid layer"
            raise FormatError(msg, tag_offset, e) from e
        tensors: list[FloatArray] = []
        for _ in range(reader.u32()):
            shape = reader.unpack(f"{reader.u32()}I")
            count = math.prod(shape)
            values = np.frombuffer(reader.read(8 * count), dtype="<f8").astype(np.float64)
            tensors.append(values.reshape(shape))
        parameters.append(tuple(tensors))
    reader.expect_end()

    try:
        net = HashNet(layers=layers, parameters=parameters, input_shape=input_shape, seed=seed)
    except DimensionError as e:
        msg = f"{source}: inconsistent network"
        raise FormatError(msg, None, e) from e
    if net.hash_length != q:
        msg = f"{source}: header q={q} does not match hash head q={net.hash_length}"
        raise FormatError(msg)
    return net


def save_checkpoint(net: HashNet, path: Path) -> None:
    """Write ``net`` to ``path``."""
    path.write_bytes(to_checkpoint_bytes(net))
    log.info("Checkpoint written.", path=str(path), parameters=net.parameter_count)


def load_checkpoint(path: Path) -> HashNet:
    """
    Read a network from ``path``.

    Raises:
        FormatError: If the file cannot be read or parsed.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        msg = f"Cannot read checkpoint {path}"
        raise FormatError(msg, None, e) from e
    return from_checkpoint_bytes(data, str(path))
