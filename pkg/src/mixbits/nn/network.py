"""Network architecture description, parameter init, and forward/backward.

Supports dense and conv2d (stride 1, valid padding) layers with ReLU
between layers and linear logits at the end. Weights are fake-quantized
per layer when a bitwidth assignment is active; gradients pass through
the quantizer unchanged (straight-through estimator).
"""

from dataclasses import dataclass, field

import numpy as np

from .. import backends
from ..errors import ConfigError, DimensionError
from .quantize import quantize_layer

KINDS = ("dense", "conv2d")


@dataclass
class LayerSpec:
    index: int
    kind: str
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    n_weights: int
    n_macc: int
    weight_std: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if self.n_weights < 1 or self.n_macc < 1:
            raise ConfigError(f"layer {self.index}: weight and MAcc counts must be >= 1")
        if self.weight_std < 0:
            raise ConfigError(f"layer {self.index}: weight_std must be >= 0")


@dataclass
class NetworkSpec:
    name: str
    layers: list[LayerSpec]
    full_precision_accuracy: float | None = None

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("network needs at least one layer")
        for i, layer in enumerate(self.layers):
            if layer.index != i:
                raise ConfigError("layer indices must be contiguous from 0")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def input_dims(self) -> tuple[int, ...]:
        return self.layers[0].in_dims

    @property
    def n_classes(self) -> int:
        return self.layers[-1].out_dims[-1] if self.layers[-1].kind == "dense" else int(
            np.prod(self.layers[-1].out_dims)
        )


@dataclass
class LayerParams:
    w: np.ndarray
    b: np.ndarray

    def copy(self) -> "LayerParams":
        return LayerParams(self.w.copy(), self.b.copy())


Weights = list[LayerParams]


def copy_weights(weights: Weights) -> Weights:
    return [p.copy() for p in weights]


def build_network_spec(name: str, input_shape: tuple[int, ...], layer_defs: list[dict]) -> NetworkSpec:
    """Construct a NetworkSpec from an architecture description.

    ``layer_defs`` entries: {"kind": "conv2d", "filters": F, "kernel": K}
    or {"kind": "dense", "units": U}. Dimensions are propagated from
    ``input_shape`` ((C, H, W) for conv input, (D,) for flat input).
    """
    layers: list[LayerSpec] = []
    dims = tuple(int(d) for d in input_shape)
    for i, definition in enumerate(layer_defs):
        kind = definition.get("kind")
        if kind == "conv2d":
            if len(dims) != 3:
                raise ConfigError(f"layer {i}: conv2d needs (C, H, W) input, has {dims}")
            c, h, w = dims
            f, k = int(definition["filters"]), int(definition["kernel"])
            oh, ow = h - k + 1, w - k + 1
            if oh < 1 or ow < 1:
                raise ConfigError(f"layer {i}: kernel {k} too large for input {h}x{w}")
            n_weights = f * c * k * k
            n_macc = f * oh * ow * c * k * k
            layers.append(LayerSpec(i, "conv2d", dims, (f, oh, ow), n_weights, n_macc))
            dims = (f, oh, ow)
        elif kind == "dense":
            n_in = int(np.prod(dims))
            units = int(definition["units"])
            layers.append(LayerSpec(i, "dense", dims, (units,), n_in * units, n_in * units))
            dims = (units,)
        else:
            raise ConfigError(f"layer {i}: unknown kind {kind!r}")
    return NetworkSpec(name, layers)


def _fans(layer: LayerSpec) -> tuple[int, int]:
    if layer.kind == "dense":
        return int(np.prod(layer.in_dims)), layer.out_dims[0]
    c = layer.in_dims[0]
    f = layer.out_dims[0]
    k2 = layer.n_weights // (f * c)
    return c * k2, f * k2


def init_weights(spec: NetworkSpec, rng: np.random.Generator) -> Weights:
    """Glorot-uniform weight init, zero biases."""
    weights = []
    for layer in spec.layers:
        fan_in, fan_out = _fans(layer)
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        if layer.kind == "dense":
            shape = (int(np.prod(layer.in_dims)), layer.out_dims[0])
        else:
            f = layer.out_dims[0]
            c = layer.in_dims[0]
            k = int(round(np.sqrt(layer.n_weights / (f * c))))
            shape = (f, c, k, k)
        w = rng.uniform(-limit, limit, size=shape)
        b = np.zeros(layer.out_dims[0] if layer.kind == "dense" else layer.out_dims[0])
        weights.append(LayerParams(w, b))
    return weights


def record_weight_stats(spec: NetworkSpec, weights: Weights) -> None:
    """Store each layer's population weight standard deviation on the spec."""
    for layer, params in zip(spec.layers, weights):
        layer.weight_std = float(np.std(params.w))


def effective_weights(weights: Weights, assignment) -> Weights:
    """Per-layer fake-quantized view of the weights (biases untouched)."""
    if assignment is None:
        return weights
    bits = list(assignment)
    if len(bits) != len(weights):
        raise DimensionError(f"assignment length {len(bits)} != layer count {len(weights)}")
    return [LayerParams(quantize_layer(p.w, k), p.b) for p, k in zip(weights, bits)]


@dataclass
class _Cache:
    """Per-layer values saved by the forward pass for backprop."""

    x: np.ndarray  # layer input, post reshape
    pre: np.ndarray  # pre-activation output
    reshaped_from: tuple[int, ...] | None = None


def _check_batch(spec: NetworkSpec, batch: np.ndarray) -> None:
    expected = spec.input_dims
    if batch.ndim != len(expected) + 1 or tuple(batch.shape[1:]) != expected:
        raise DimensionError(f"batch shape {batch.shape} incompatible with input dims {expected}")


def forward_full(
    weights: Weights, spec: NetworkSpec, batch: np.ndarray, assignment=None
) -> tuple[np.ndarray, list[_Cache]]:
    """Forward pass returning logits and the caches needed by backward()."""
    _check_batch(spec, batch)
    eff = effective_weights(weights, assignment)
    caches: list[_Cache] = []
    x = np.asarray(batch, dtype=np.float64)
    last = spec.n_layers - 1
    for i, (layer, params) in enumerate(zip(spec.layers, eff)):
        reshaped_from = None
        if layer.kind == "dense" and x.ndim > 2:
            reshaped_from = x.shape[1:]
            x = x.reshape(x.shape[0], -1)
        if layer.kind == "dense":
            pre = x @ params.w + params.b
        else:
            pre = backends.conv2d_forward(x, params.w) + params.b[None, :, None, None]
        caches.append(_Cache(x, pre, reshaped_from))
        x = pre if i == last else np.maximum(pre, 0.0)
    return x, caches


def forward(weights: Weights, spec: NetworkSpec, batch: np.ndarray, assignment=None) -> np.ndarray:
    """Logits for a batch; fake-quantizes weights when assignment given."""
    logits, _ = forward_full(weights, spec, batch, assignment)
    return logits


def backward(
    weights: Weights,
    spec: NetworkSpec,
    caches: list[_Cache],
    dlogits: np.ndarray,
    assignment=None,
) -> list[LayerParams]:
    """Gradients of a scalar loss w.r.t. all layer weights and biases.

    With an assignment active the linear algebra uses the quantized
    weights, and the quantizer itself is treated as identity for the
    gradient (straight-through).
    """
    eff = effective_weights(weights, assignment)
    grads: list[LayerParams] = [None] * spec.n_layers  # type: ignore[list-item]
    delta = dlogits
    for i in range(spec.n_layers - 1, -1, -1):
        layer, params, cache = spec.layers[i], eff[i], caches[i]
        if i != spec.n_layers - 1:
            delta = delta * (cache.pre > 0.0)
        if layer.kind == "dense":
            dw = cache.x.T @ delta
            db = delta.sum(axis=0)
            dx = delta @ params.w.T
        else:
            kh, kw = params.w.shape[2], params.w.shape[3]
            dw = backends.conv2d_grad_weights(delta, cache.x, kh, kw)
            db = delta.sum(axis=(0, 2, 3))
            dx = backends.conv2d_grad_input(delta, params.w, cache.x.shape[2], cache.x.shape[3])
        grads[i] = LayerParams(dw, db)
        if cache.reshaped_from is not None:
            dx = dx.reshape(dx.shape[0], *cache.reshaped_from)
        delta = dx
    return grads
