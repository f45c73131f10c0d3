"""Layered feedforward network: construction, forward pass, backprop, serialization.

The architecture family is fixed on purpose: a 6x6 input grid is flattened
and passed through a chain of dense layers, the last of which is a softmax
over the class scores. Every forward pass records the activations of every
stage so they can be inspected and rendered, and the backward pass returns
exact analytic gradients of the cross-entropy loss.

All arithmetic is float64 with a fixed sequential evaluation order, so a
network built from a given config (seed included) behaves identically run
after run, byte for byte.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .activations import (
    ACTIVATIONS,
    LINEAR,
    RELU,
    SIGMOID,
    SOFTMAX,
    _activate,
    _derivative_from_output,
)
from .errors import ConfigError, DocumentError
from .rng import Rng

INPUT_ROWS = 6
INPUT_COLS = 6
INPUT_PIXELS = INPUT_ROWS * INPUT_COLS

MODEL_FORMAT_VERSION = 1

# Reported cross-entropy clamps the target probability here so the loss
# stays finite; gradients use the exact unclamped softmax/cross-entropy
# identity (the clamp region is unreachable at this scale of network).
PROB_FLOOR = 1e-12


def as_pixels(values) -> tuple[float, ...]:
    """Validate and normalize a 6x6 pixel grid to a tuple of 36 floats."""
    pixels = tuple(float(v) for v in values)
    if len(pixels) != INPUT_PIXELS:
        raise ValueError(f"pixel grid must have {INPUT_PIXELS} values, got {len(pixels)}")
    for i, v in enumerate(pixels):
        if not math.isfinite(v) or v < 0.0 or v > 1.0:
            raise ValueError(f"pixel {i} out of bounds: {v!r} (expected 0 <= v <= 1)")
    return pixels


@dataclass(frozen=True)
class LayerSpec:
    """One layer in a config: a flatten marker or a dense layer."""

    kind: str
    units: int | None = None
    activation: str | None = None


@dataclass(frozen=True)
class NetworkConfig:
    hidden: tuple[LayerSpec, ...] = (LayerSpec("dense", 20, RELU),)
    output_units: int = 10
    output_activation: str = SOFTMAX
    init: str = "uniform_scaled"
    seed: int = 0
    input_rows: int = INPUT_ROWS
    input_cols: int = INPUT_COLS


@dataclass
class DenseLayer:
    weights: np.ndarray  # (units_out, units_in)
    biases: np.ndarray  # (units_out,)
    activation: str


@dataclass
class Network:
    config: NetworkConfig
    layers: list[DenseLayer]


@dataclass(frozen=True)
class ActivationRecord:
    """Per-stage outputs of one forward pass; stage 0 is the raw input."""

    stages: tuple[tuple[str, tuple[float, ...]], ...]

    @property
    def output(self) -> tuple[float, ...]:
        return self.stages[-1][1]


@dataclass
class Gradients:
    """Loss gradients, shape-identical to the network's layers."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


def validate_config(config: NetworkConfig) -> None:
    """Check layer chaining and enum fields, raising ConfigError on violation."""
    if config.input_rows != INPUT_ROWS or config.input_cols != INPUT_COLS:
        raise ConfigError("input grid is fixed at 6x6")
    if config.init != "uniform_scaled":
        raise ConfigError(f"unknown init scheme {config.init!r}")
    if config.output_units < 2:
        raise ConfigError("output_units must be >= 2")
    if config.output_activation != SOFTMAX:
        raise ConfigError("output activation must be softmax")
    for i, spec in enumerate(config.hidden):
        if spec.kind != "dense":
            raise ConfigError(f"hidden[{i}] must be a dense layer, got {spec.kind!r}")
        if spec.units is None or spec.units < 1:
            raise ConfigError(f"hidden[{i}].units must be a positive integer")
        if spec.activation == SOFTMAX:
            raise ConfigError("softmax is permitted only on the final layer")
        if spec.activation not in (RELU, SIGMOID, LINEAR):
            raise ConfigError(f"hidden[{i}].activation {spec.activation!r} unknown")


def _layer_dims(config: NetworkConfig) -> list[tuple[int, int, str]]:
    """(units_in, units_out, activation) for each dense layer in order."""
    dims = []
    units_in = INPUT_PIXELS
    for spec in config.hidden:
        dims.append((units_in, spec.units, spec.activation))
        units_in = spec.units
    dims.append((units_in, config.output_units, config.output_activation))
    return dims


def network_new(config: NetworkConfig) -> Network:
    """Build a network with seeded uniform-scaled weights and zero biases.

    Weights are drawn layer by layer, row-major, uniformly from [-s, s)
    with s = sqrt(6 / (units_in + units_out)); the draw order is part of
    the determinism contract.
    """
    validate_config(config)
    rng = Rng(config.seed)
    layers = []
    for units_in, units_out, activation in _layer_dims(config):
        s = math.sqrt(6.0 / (units_in + units_out))
        w = np.empty((units_out, units_in), dtype=np.float64)
        for r in range(units_out):
            for c in range(units_in):
                w[r, c] = rng.uniform(-s, s)
        b = np.zeros(units_out, dtype=np.float64)
        layers.append(DenseLayer(w, b, activation))
    return Network(config, layers)


def _forward_stack(net: Network, X: np.ndarray) -> list[np.ndarray]:
    """Forward a (batch, 36) matrix; returns [input, layer1 out, ...]."""
    acts = [X]
    for layer in net.layers:
        z = acts[-1] @ layer.weights.T + layer.biases
        acts.append(_activate(layer.activation, z))
    return acts


def forward(net: Network, pixels) -> ActivationRecord:
    """Run one image through the network, capturing every stage's activations."""
    x = np.asarray(as_pixels(pixels), dtype=np.float64).reshape(1, INPUT_PIXELS)
    acts = _forward_stack(net, x)
    stages = [("input", tuple(float(v) for v in acts[0][0]))]
    for k, a in enumerate(acts[1:], start=1):
        stages.append((f"dense_{k}", tuple(float(v) for v in a[0])))
    return ActivationRecord(tuple(stages))


def _backprop(net: Network, X: np.ndarray, targets: np.ndarray):
    """Losses and summed gradients for a batch.

    Returns (losses, grads) where losses has one cross-entropy value per
    example and grads accumulates d(sum of losses)/d(param); callers divide
    by the batch size to average.
    """
    acts = _forward_stack(net, X)
    probs = acts[-1]
    n = X.shape[0]
    idx = np.arange(n)
    losses = -np.log(np.clip(probs[idx, targets], PROB_FLOOR, 1.0))

    # Softmax + cross-entropy collapse to (p - onehot) at the output.
    delta = probs.copy()
    delta[idx, targets] -= 1.0

    grads_w: list[np.ndarray] = [None] * len(net.layers)
    grads_b: list[np.ndarray] = [None] * len(net.layers)
    for k in range(len(net.layers) - 1, -1, -1):
        grads_w[k] = delta.T @ acts[k]
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            prev_out = acts[k]
            prev_kind = net.layers[k - 1].activation
            delta = (delta @ net.layers[k].weights) * _derivative_from_output(prev_kind, prev_out)
    return losses, Gradients(grads_w, grads_b)


def backward(net: Network, pixels, target: int) -> tuple[float, Gradients]:
    """Cross-entropy loss and exact gradients for a single labeled image."""
    if not isinstance(target, int) or isinstance(target, bool):
        raise ValueError(f"target must be an int, got {target!r}")
    if not 0 <= target < net.config.output_units:
        raise ValueError(
            f"target {target} out of range [0, {net.config.output_units})"
        )
    x = np.asarray(as_pixels(pixels), dtype=np.float64).reshape(1, INPUT_PIXELS)
    losses, grads = _backprop(net, x, np.array([target]))
    return float(losses[0]), grads


def flatten_parameters(net: Network) -> np.ndarray:
    """All weights and biases, concatenated in layer order."""
    parts = []
    for layer in net.layers:
        parts.append(layer.weights.ravel())
        parts.append(layer.biases)
    return np.concatenate(parts)


# --- serialization ---------------------------------------------------------

def _config_to_dict(config: NetworkConfig) -> dict:
    return {
        "input_rows": config.input_rows,
        "input_cols": config.input_cols,
        "hidden": [
            {"kind": s.kind, "units": s.units, "activation": s.activation}
            for s in config.hidden
        ],
        "output_units": config.output_units,
        "output_activation": config.output_activation,
        "init": config.init,
        "seed": config.seed,
    }


def _expect(doc: dict, key: str, kinds, path: str):
    if not isinstance(doc, dict):
        raise DocumentError("expected an object", path)
    if key not in doc:
        raise DocumentError("missing field", f"{path}.{key}" if path else key)
    value = doc[key]
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise DocumentError("wrong type", f"{path}.{key}" if path else key)
    return value


def config_from_dict(doc, path: str = "config") -> NetworkConfig:
    """Parse and validate a config object, reporting the offending field path."""
    if not isinstance(doc, dict):
        raise DocumentError("expected an object", path)
    hidden_doc = _expect(doc, "hidden", list, path)
    hidden = []
    for i, item in enumerate(hidden_doc):
        hp = f"{path}.hidden[{i}]"
        kind = _expect(item, "kind", str, hp)
        if kind != "dense":
            raise DocumentError("only dense layers may appear here", f"{hp}.kind")
        units = _expect(item, "units", int, hp)
        if units < 1:
            raise DocumentError("must be a positive integer", f"{hp}.units")
        activation = _expect(item, "activation", str, hp)
        if activation not in (RELU, SIGMOID, LINEAR):
            raise DocumentError(f"unknown activation {activation!r}", f"{hp}.activation")
        hidden.append(LayerSpec("dense", units, activation))
    output_units = _expect(doc, "output_units", int, path)
    if output_units < 2:
        raise DocumentError("must be >= 2", f"{path}.output_units")
    output_activation = doc.get("output_activation", SOFTMAX)
    if output_activation != SOFTMAX:
        raise DocumentError("must be softmax", f"{path}.output_activation")
    init = doc.get("init", "uniform_scaled")
    if init != "uniform_scaled":
        raise DocumentError(f"unknown init {init!r}", f"{path}.init")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise DocumentError("must be an unsigned integer", f"{path}.seed")
    for dim_key, expected in (("input_rows", INPUT_ROWS), ("input_cols", INPUT_COLS)):
        if doc.get(dim_key, expected) != expected:
            raise DocumentError(f"must be {expected}", f"{path}.{dim_key}")
    return NetworkConfig(
        hidden=tuple(hidden),
        output_units=output_units,
        output_activation=output_activation,
        init=init,
        seed=seed,
    )


def model_save(net: Network) -> str:
    """Serialize a network to its JSON document (full float precision)."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": _config_to_dict(net.config),
        "layers": [
            {
                "weights": [[float(v) for v in row] for row in layer.weights],
                "biases": [float(v) for v in layer.biases],
                "activation": layer.activation,
            }
            for layer in net.layers
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def model_load(text: str) -> Network:
    """Rebuild a network from a model document, validating shapes and bounds."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise DocumentError("expected a top-level object")
    version = _expect(doc, "format_version", int, "")
    if version != MODEL_FORMAT_VERSION:
        raise DocumentError(
            f"unsupported version {version} (expected {MODEL_FORMAT_VERSION})",
            "format_version",
        )
    config = config_from_dict(_expect(doc, "config", dict, ""), "config")
    layers_doc = _expect(doc, "layers", list, "")
    dims = _layer_dims(config)
    if len(layers_doc) != len(dims):
        raise DocumentError(
            f"expected {len(dims)} layers, got {len(layers_doc)}", "layers"
        )
    layers = []
    for k, (item, (units_in, units_out, activation)) in enumerate(zip(layers_doc, dims)):
        lp = f"layers[{k}]"
        weights_doc = _expect(item, "weights", list, lp)
        if len(weights_doc) != units_out:
            raise DocumentError(
                f"expected {units_out} rows, got {len(weights_doc)}", f"{lp}.weights"
            )
        w = np.empty((units_out, units_in), dtype=np.float64)
        for r, row in enumerate(weights_doc):
            if not isinstance(row, list) or len(row) != units_in:
                raise DocumentError(
                    f"expected {units_in} columns", f"{lp}.weights[{r}]"
                )
            for c, v in enumerate(row):
                if not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise DocumentError("not a number", f"{lp}.weights[{r}][{c}]")
                w[r, c] = float(v)
        biases_doc = _expect(item, "biases", list, lp)
        if len(biases_doc) != units_out:
            raise DocumentError(
                f"expected {units_out} values, got {len(biases_doc)}", f"{lp}.biases"
            )
        b = np.asarray([float(v) for v in biases_doc], dtype=np.float64)
        tag = _expect(item, "activation", str, lp)
        if tag != activation:
            raise DocumentError(
                f"activation {tag!r} does not match config ({activation!r})",
                f"{lp}.activation",
            )
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise DocumentError("weights and biases must be finite", lp)
        layers.append(DenseLayer(w, b, activation))
    return Network(config, layers)
