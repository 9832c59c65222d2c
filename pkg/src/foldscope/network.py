"""Small dense networks and their binary activation patterns.

A network is a stack of affine layers with a pointwise activation. Every
hidden neuron contributes one bit to the activation pattern of an input:
1 when its post-activation value is strictly positive, 0 otherwise. The
output layer contributes no bits. Two inputs with identical patterns sit
in the same activation region (for ReLU nets, the same linear region).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Union

import numpy as np
from scipy.special import erf


class ModelFormatError(ValueError):
    """A weight document is malformed or internally inconsistent."""


class ActivationKind(enum.Enum):
    RELU = "relu"
    GELU = "gelu"  # exact erf form, not the tanh approximation
    SILU = "silu"
    TANH = "tanh"
    IDENTITY = "identity"


def apply_activation(kind: ActivationKind, v):
    """Pointwise activation value; works on scalars and numpy arrays."""
    if kind is ActivationKind.RELU:
        return np.maximum(v, 0.0)
    if kind is ActivationKind.GELU:
        return 0.5 * v * (1.0 + erf(v / np.sqrt(2.0)))
    if kind is ActivationKind.SILU:
        return v / (1.0 + np.exp(-np.asarray(v, dtype=np.float64)))
    if kind is ActivationKind.TANH:
        return np.tanh(v)
    return np.asarray(v, dtype=np.float64) + 0.0


def activation_derivative(kind: ActivationKind, z):
    """d(activation)/dz at pre-activation z (used by the trainer)."""
    z = np.asarray(z, dtype=np.float64)
    if kind is ActivationKind.RELU:
        return (z > 0.0).astype(np.float64)
    if kind is ActivationKind.GELU:
        cdf = 0.5 * (1.0 + erf(z / np.sqrt(2.0)))
        pdf = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
        return cdf + z * pdf
    if kind is ActivationKind.SILU:
        s = 1.0 / (1.0 + np.exp(-z))
        return s * (1.0 + z * (1.0 - s))
    if kind is ActivationKind.TANH:
        t = np.tanh(z)
        return 1.0 - t * t
    return np.ones_like(z)


@dataclass(frozen=True)
class Layer:
    """One affine layer: weights[i][j] connects input j to neuron i."""

    weights: np.ndarray  # shape (out, in)
    bias: np.ndarray  # shape (out,)
    activation: ActivationKind
    is_output: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] == 0 or w.shape[1] == 0:
            raise ModelFormatError("weights must be a non-empty 2-d matrix")
        if b.shape != (w.shape[0],):
            raise ModelFormatError(
                f"bias length {b.shape[0] if b.ndim == 1 else b.shape} does not "
                f"match {w.shape[0]} output neurons"
            )
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ModelFormatError("non-finite weight or bias value")
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class Mlp:
    """Immutable layer stack; safe to share across threads."""

    layers: tuple[Layer, ...]
    input_dim: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ModelFormatError("network needs at least one layer")
        if self.input_dim <= 0:
            raise ModelFormatError("input_dim must be positive")
        prev = self.input_dim
        for k, layer in enumerate(self.layers):
            if layer.in_dim != prev:
                raise ModelFormatError(
                    f"layer {k}: expects {layer.in_dim} inputs but the previous "
                    f"width is {prev}"
                )
            prev = layer.out_dim
        for k, layer in enumerate(self.layers[:-1]):
            if layer.is_output:
                raise ModelFormatError(f"layer {k}: only the last layer may be the output layer")
        if not self.layers[-1].is_output:
            raise ModelFormatError("last layer must be flagged as the output layer")

    @property
    def total_hidden(self) -> int:
        return sum(l.out_dim for l in self.layers if not l.is_output)

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim


@dataclass(frozen=True)
class ActivationPattern:
    """Bit vector over all hidden neurons, layer order then neuron order."""

    bits: bytes  # one byte per hidden neuron, each 0 or 1

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("pattern bytes must be 0 or 1")

    @classmethod
    def from_bits(cls, bits) -> "ActivationPattern":
        arr = np.asarray(bits)
        return cls(arr.astype(np.uint8).tobytes())

    @classmethod
    def from_string(cls, s: str) -> "ActivationPattern":
        if set(s) - {"0", "1"}:
            raise ValueError(f"pattern string must contain only 0/1: {s!r}")
        return cls(bytes(int(c) for c in s))

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __repr__(self) -> str:
        return f"ActivationPattern({self.to_string()!r})"


def hamming(p: ActivationPattern, q: ActivationPattern) -> int:
    """Number of differing bit positions; requires equal lengths."""
    if len(p.bits) != len(q.bits):
        raise ValueError(f"pattern lengths differ: {len(p.bits)} vs {len(q.bits)}")
    # bytes are 0/1, so xor leaves exactly one set bit per differing position
    return (int.from_bytes(p.bits, "big") ^ int.from_bytes(q.bits, "big")).bit_count()


def forward(net: Mlp, x) -> tuple[list[np.ndarray], np.ndarray]:
    """Run the network; returns (hidden post-activation vectors, output vector)."""
    h = np.asarray(x, dtype=np.float64)
    if h.shape != (net.input_dim,):
        raise ValueError(f"input has shape {h.shape}, expected ({net.input_dim},)")
    if not np.isfinite(h).all():
        raise ValueError("input contains non-finite values")
    hidden: list[np.ndarray] = []
    for layer in net.layers:
        h = apply_activation(layer.activation, layer.weights @ h + layer.bias)
        if not layer.is_output:
            hidden.append(h)
    return hidden, h


def pattern_bits(net: Mlp, x) -> np.ndarray:
    """Boolean pattern over hidden neurons; strict > 0 with no tolerance."""
    hidden, _ = forward(net, x)
    if not hidden:
        return np.zeros(0, dtype=bool)
    return np.concatenate([h > 0.0 for h in hidden])


def activation_pattern(net: Mlp, x) -> ActivationPattern:
    return ActivationPattern.from_bits(pattern_bits(net, x))


_ACTIVATION_NAMES = {kind.value: kind for kind in ActivationKind}

Source = Union[str, Path, IO]


def _as_reader(source: Source, mode: str):
    if hasattr(source, "read") or hasattr(source, "write"):
        return source, False
    return open(source, mode), True


def load_model(source: Source) -> Mlp:
    """Parse a weight document (JSON) into an Mlp, validating all invariants."""
    fh, owned = _as_reader(source, "r")
    try:
        raw = fh.read()
    finally:
        if owned:
            fh.close()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("top level must be an object")
    try:
        input_dim = int(doc["input_dim"])
        raw_layers = doc["layers"]
    except KeyError as exc:
        raise ModelFormatError(f"missing required key {exc}") from exc
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ModelFormatError('"layers" must be a non-empty list')
    layers = []
    for k, entry in enumerate(raw_layers):
        if not isinstance(entry, dict):
            raise ModelFormatError(f"layer {k}: must be an object")
        try:
            kind = _ACTIVATION_NAMES[entry["activation"]]
        except KeyError:
            raise ModelFormatError(
                f"layer {k}: unknown or missing activation {entry.get('activation')!r}"
            ) from None
        try:
            weights = np.asarray(entry["weights"], dtype=np.float64)
            bias = np.asarray(entry["bias"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"layer {k}: bad weights or bias ({exc})") from exc
        try:
            layers.append(
                Layer(weights, bias, kind, is_output=(k == len(raw_layers) - 1))
            )
        except ModelFormatError as exc:
            raise ModelFormatError(f"layer {k}: {exc}") from exc
    return Mlp(tuple(layers), input_dim)


def model_to_json_dict(net: Mlp) -> dict:
    return {
        "input_dim": net.input_dim,
        "layers": [
            {
                "weights": layer.weights.tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation.value,
            }
            for layer in net.layers
        ],
    }


def save_model(net: Mlp, dest: Source) -> None:
    """Write the canonical weight document (stable bytes for identical nets)."""
    fh, owned = _as_reader(dest, "w")
    try:
        json.dump(model_to_json_dict(net), fh, indent=2)
        fh.write("\n")
    finally:
        if owned:
            fh.close()
