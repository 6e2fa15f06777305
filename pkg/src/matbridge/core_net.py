"""Feed-forward network structure, transfer functions, evaluation and persistence."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import NormParams, Schema
from .errors import CompatibilityError, ConfigurationError, DomainError, ParseError, ShapeError

MODEL_MARKER = "matbridge-model/1"

# logsig is pinned to its asymptotes beyond this magnitude
LOGSIG_CLAMP = 700.0


class TransferKind(str, Enum):
    TANSIG = "tansig"
    LOGSIG = "logsig"
    PURELIN = "purelin"

    @classmethod
    def parse(cls, tag) -> "TransferKind":
        try:
            return cls(tag)
        except ValueError:
            raise ConfigurationError(f"unknown transfer function {tag!r}") from None


def _logsig_scalar(x: float) -> float:
    if x < -LOGSIG_CLAMP:
        return 0.0
    if x > LOGSIG_CLAMP:
        return 1.0
    return 1.0 / (1.0 + math.exp(-x))


def transfer_eval(kind: TransferKind, x: float) -> float:
    kind = TransferKind.parse(kind)
    if not math.isfinite(x):
        raise DomainError(f"{kind.value} evaluated at non-finite {x!r}")
    if kind is TransferKind.TANSIG:
        return math.tanh(x)
    if kind is TransferKind.LOGSIG:
        return _logsig_scalar(x)
    return float(x)


def transfer_deriv(kind: TransferKind, x: float) -> float:
    kind = TransferKind.parse(kind)
    if not math.isfinite(x):
        raise DomainError(f"{kind.value} derivative at non-finite {x!r}")
    if kind is TransferKind.TANSIG:
        t = math.tanh(x)
        return 1.0 - t * t
    if kind is TransferKind.LOGSIG:
        s = _logsig_scalar(x)
        return s * (1.0 - s)
    return 1.0


def activate(kind: TransferKind, z: np.ndarray) -> np.ndarray:
    """Vectorized :func:`transfer_eval`."""
    if kind is TransferKind.TANSIG:
        return np.tanh(z)
    if kind is TransferKind.LOGSIG:
        zc = np.clip(z, -LOGSIG_CLAMP, LOGSIG_CLAMP)
        s = 1.0 / (1.0 + np.exp(-zc))
        s[z < -LOGSIG_CLAMP] = 0.0
        s[z > LOGSIG_CLAMP] = 1.0
        return s
    return z


def activate_deriv(kind: TransferKind, a: np.ndarray) -> np.ndarray:
    """Derivative of the transfer function expressed through its output ``a``."""
    if kind is TransferKind.TANSIG:
        return 1.0 - a * a
    if kind is TransferKind.LOGSIG:
        return a * (1.0 - a)
    return np.ones_like(a)


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    biases: np.ndarray
    transfer: TransferKind

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, ndmin=2)
        b = np.array(self.biases, dtype=np.float64).ravel()
        if w.ndim != 2 or w.shape[0] != b.size:
            raise ShapeError(f"weights {w.shape} do not match {b.size} biases")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise DomainError("layer parameters must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "transfer", TransferKind.parse(self.transfer))

    @property
    def size(self) -> int:
        return self.biases.size


@dataclass(frozen=True)
class Network:
    layers: tuple[Layer, ...]
    input_width: int

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ConfigurationError("network needs at least one layer")
        width = int(self.input_width)
        for k, layer in enumerate(layers):
            if layer.weights.shape[1] != width:
                raise ShapeError(f"layer {k} expects width {layer.weights.shape[1]}, previous width is {width}")
            width = layer.size
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "input_width", int(self.input_width))

    @property
    def output_width(self) -> int:
        return self.layers[-1].size

    @property
    def sizes(self) -> list[int]:
        return [self.input_width] + [layer.size for layer in self.layers]

    @property
    def transfers(self) -> list[TransferKind]:
        return [layer.transfer for layer in self.layers]

    def parameter_count(self) -> int:
        return sum(layer.weights.size + layer.biases.size for layer in self.layers)

    def with_parameters(self, params: Sequence[tuple[np.ndarray, np.ndarray]]) -> "Network":
        layers = tuple(Layer(w, b, layer.transfer) for (w, b), layer in zip(params, self.layers))
        return Network(layers, self.input_width)


def init_network(layer_sizes: Sequence[int], transfers: Sequence, seed: int) -> Network:
    """Build a network with weights uniform in +-1/sqrt(fan_in) and zero biases.

    ``layer_sizes`` includes the input width, so ``(16, 10, 5)`` gives two
    layers of shapes 10x16 and 5x10.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ConfigurationError("layer_sizes needs an input width and at least one layer")
    if any(s <= 0 for s in sizes):
        raise ConfigurationError(f"layer sizes must be positive, got {sizes}")
    if len(transfers) != len(sizes) - 1:
        raise ConfigurationError(f"{len(sizes) - 1} layers but {len(transfers)} transfer functions")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, n, kind in zip(sizes[:-1], sizes[1:], transfers):
        bound = 1.0 / math.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(n, fan_in))
        layers.append(Layer(w, np.zeros(n), TransferKind.parse(kind)))
    return Network(tuple(layers), sizes[0])


def forward_batch(net: Network, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Row-batched forward pass.

    Returns ``(activations, preacts)``; ``activations[0]`` is the input and
    ``activations[k]`` is layer k's output (rows are records).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_width:
        raise ShapeError(f"expected (n, {net.input_width}) input, got {x.shape}")
    acts = [x]
    pre = []
    a = x
    for layer in net.layers:
        z = a @ layer.weights.T + layer.biases
        a = activate(layer.transfer, z)
        pre.append(z)
        acts.append(a)
    return acts, pre


def forward(net: Network, x) -> tuple[np.ndarray, list[np.ndarray]]:
    """Evaluate the network on one input vector (or a matrix of row records).

    Returns the output and the list of per-layer activations, input first.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if x.shape[-1] != net.input_width:
        raise ShapeError(f"input width {x.shape[-1]} != network input width {net.input_width}")
    if not np.all(np.isfinite(x)):
        raise DomainError("network input contains non-finite values")
    acts, _ = forward_batch(net, x[None, :] if single else x)
    if single:
        acts = [a[0] for a in acts]
    return acts[-1], acts


def predict(net: Network, x) -> np.ndarray:
    return forward(net, x)[0]


@dataclass(frozen=True)
class ModelBundle:
    network: Network
    norm_in: NormParams
    norm_out: NormParams
    schema: Schema
    train_fingerprint: str = ""

    def __post_init__(self):
        if len(self.norm_in) != self.network.input_width:
            raise ShapeError("norm_in width does not match the network input width")
        if len(self.norm_out) != self.network.output_width:
            raise ShapeError("norm_out width does not match the network output width")
        if len(self.schema.inputs) != self.network.input_width or \
                len(self.schema.outputs) != self.network.output_width:
            raise CompatibilityError("schema column counts do not match the network shape")

    def predict_physical(self, x) -> np.ndarray:
        from .data import denormalize, normalize_apply

        xn = normalize_apply(np.asarray(x, dtype=np.float64), self.norm_in)
        return denormalize(predict(self.network, xn), self.norm_out)


def _flat(a: np.ndarray) -> list[float]:
    return [float(v) for v in np.asarray(a).ravel(order="C")]


def save_model(bundle: ModelBundle, path) -> None:
    doc = {
        "schema": bundle.schema.to_dict(),
        "norm_in": bundle.norm_in.to_dict(),
        "norm_out": bundle.norm_out.to_dict(),
        "input_width": bundle.network.input_width,
        "layers": [
            {"rows": layer.weights.shape[0], "cols": layer.weights.shape[1],
             "transfer": layer.transfer.value,
             "weights": _flat(layer.weights), "biases": _flat(layer.biases)}
            for layer in bundle.network.layers
        ],
        "train_fingerprint": bundle.train_fingerprint,
    }
    # json writes floats via repr, which round-trips binary64 exactly
    Path(path).write_text(MODEL_MARKER + "\n" + json.dumps(doc, indent=1) + "\n")


def _field(doc: dict, key: str, where: str = "model"):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"{where}: missing field {key!r}")
    return doc[key]


def load_model(path, schema: Schema | None = None) -> ModelBundle:
    """Read a model file; with ``schema`` given, refuse a model trained on another."""
    text = Path(path).read_text()
    marker, _, body = text.partition("\n")
    if marker.strip() != MODEL_MARKER:
        raise ParseError(f"{path}: not a {MODEL_MARKER} file (first line {marker[:40]!r})")
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed model body at line {exc.lineno + 1}: {exc.msg}") from None

    try:
        file_schema = Schema.from_dict(_field(doc, "schema"))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{path}: malformed field 'schema' ({exc})") from None
    if schema is not None and schema != file_schema:
        raise CompatibilityError(
            f"{path}: model schema {file_schema.input_names} -> {file_schema.output_names} "
            f"does not match {schema.input_names} -> {schema.output_names}")

    norms = {}
    for key in ("norm_in", "norm_out"):
        try:
            norms[key] = NormParams.from_dict(_field(doc, key))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: malformed field {key!r} ({exc})") from None

    layers = []
    for k, ld in enumerate(_field(doc, "layers")):
        where = f"layers[{k}]"
        try:
            rows, cols = int(_field(ld, "rows", where)), int(_field(ld, "cols", where))
            w = np.array(_field(ld, "weights", where), dtype=np.float64)
            b = np.array(_field(ld, "biases", where), dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: malformed field {where} ({exc})") from None
        if w.size != rows * cols:
            raise ParseError(f"{path}: field {where}.weights has {w.size} values, expected {rows}x{cols}")
        if b.size != rows:
            raise ParseError(f"{path}: field {where}.biases has {b.size} values, expected {rows}")
        layers.append(Layer(w.reshape(rows, cols), b, _field(ld, "transfer", where)))
    net = Network(tuple(layers), int(_field(doc, "input_width")))
    return ModelBundle(net, norms["norm_in"], norms["norm_out"], file_schema,
                       str(doc.get("train_fingerprint", "")))
