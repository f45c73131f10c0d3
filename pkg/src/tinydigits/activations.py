"""Activation functions for dense layers."""

import numpy as np

RELU = "relu"
SIGMOID = "sigmoid"
SOFTMAX = "softmax"
LINEAR = "linear"
ACTIVATIONS = (RELU, SIGMOID, SOFTMAX, LINEAR)

# Softmax clamps shifted logits here so exp() never underflows to exactly
# zero, and caps outputs one ulp below 1 so no component rounds up to
# exactly 1; together these keep every component strictly inside (0, 1).
_EXP_FLOOR = -700.0
_ONE_BELOW = float(np.nextafter(1.0, 0.0))


def apply_activation(kind: str, values) -> np.ndarray:
    """Apply the named activation to a nonempty vector of finite values."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("activation input must be nonempty")
    if not np.isfinite(v).all():
        raise ValueError("activation input must be finite")
    return _activate(kind, v)


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    # Internal fast path; softmax normalizes along the last axis so the
    # same code serves single vectors and batched rows.
    if kind == RELU:
        return np.maximum(z, 0.0)
    if kind == SIGMOID:
        return _sigmoid(z)
    if kind == LINEAR:
        return z
    if kind == SOFTMAX:
        shifted = z - np.max(z, axis=-1, keepdims=True)
        e = np.exp(np.maximum(shifted, _EXP_FLOOR))
        return np.minimum(e / np.sum(e, axis=-1, keepdims=True), _ONE_BELOW)
    raise ValueError(f"unknown activation {kind!r}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Split on sign to avoid overflow in exp for large |z|.
    out = np.empty_like(z)
    pos = z >= 0
    neg = ~pos
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[neg])
    out[neg] = ez / (1.0 + ez)
    return out


def _derivative_from_output(kind: str, a: np.ndarray) -> np.ndarray:
    """Elementwise derivative, expressed in terms of the activation output.

    relu(z) > 0 iff z > 0, so the output alone determines the gate; the
    derivative at z == 0 is taken as 0. Softmax is excluded: its gradient
    is fused with cross-entropy in the backward pass.
    """
    if kind == RELU:
        return (a > 0.0).astype(np.float64)
    if kind == SIGMOID:
        return a * (1.0 - a)
    if kind == LINEAR:
        return np.ones_like(a)
    raise ValueError(f"no standalone derivative for activation {kind!r}")
