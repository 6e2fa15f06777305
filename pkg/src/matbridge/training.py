"""Full-batch backpropagation with momentum under a regularized MSE objective."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .core_net import Network, TransferKind, activate, activate_deriv
from .errors import ConfigurationError, NumericError, ParseError, ShapeError

log = logging.getLogger(__name__)

GOAL_REACHED = "goal_reached"
MAX_EPOCHS = "max_epochs"
GRADIENT_VANISHED = "gradient_vanished"
STOP_REASONS = (GOAL_REACHED, MAX_EPOCHS, GRADIENT_VANISHED)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    performance_ratio: float = 0.1
    goal: float = 0.0
    max_epochs: int = 200_000
    min_grad: float = 1e-10
    log_every: int = 0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError(f"momentum must lie in [0, 1), got {self.momentum}")
        if not 0 < self.performance_ratio <= 1:
            raise ConfigurationError(f"performance_ratio must lie in (0, 1], got {self.performance_ratio}")
        if self.goal < 0 or self.min_grad < 0:
            raise ConfigurationError("goal and min_grad must be nonnegative")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be at least 1")

    def fingerprint(self) -> str:
        parts = [f"{k}={v!r}" for k, v in asdict(self).items()]
        # the adaption function has no role in full-batch training; kept for provenance
        parts += ["train_fn=traingdm", "adapt_fn=learngdm", "perf_fn=msereg"]
        return ";".join(parts)


@dataclass
class TrainHistory:
    epochs: list[int] = field(default_factory=list)
    performance: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    stop_reason: str | None = None

    @property
    def records(self) -> list[tuple[int, float, float]]:
        return list(zip(self.epochs, self.performance, self.grad_norm))

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def final_performance(self) -> float:
        return self.performance[-1]


@dataclass(frozen=True)
class GradientSet:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def norm(self) -> float:
        return math.sqrt(sum(float(np.vdot(g, g)) for g in (*self.weights, *self.biases)))


@dataclass(frozen=True)
class Velocity:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    @classmethod
    def zeros(cls, net: Network) -> "Velocity":
        return cls(tuple(np.zeros_like(l.weights) for l in net.layers),
                   tuple(np.zeros_like(l.biases) for l in net.layers))


def _check_congruent(net: Network, ws: Sequence[np.ndarray], bs: Sequence[np.ndarray], what: str) -> None:
    if len(ws) != len(net.layers) or len(bs) != len(net.layers):
        raise ShapeError(f"{what} has {len(ws)} layers, network has {len(net.layers)}")
    for k, (layer, w, b) in enumerate(zip(net.layers, ws, bs)):
        if np.shape(w) != layer.weights.shape or np.shape(b) != layer.biases.shape:
            raise ShapeError(f"{what} layer {k} shape does not match the network")


def _sq_weights(ws, bs) -> tuple[float, int]:
    total = sum(float(np.vdot(w, w)) for w in ws) + sum(float(np.vdot(b, b)) for b in bs)
    count = sum(w.size for w in ws) + sum(b.size for b in bs)
    return total, count


def msereg_perf(targets, outputs, net: Network, gamma: float) -> float:
    """gamma * MSE + (1 - gamma) * mean squared weight, biases included."""
    t = np.asarray(targets, dtype=np.float64)
    o = np.asarray(outputs, dtype=np.float64)
    if t.shape != o.shape:
        raise ShapeError(f"targets {t.shape} and outputs {o.shape} differ")
    if not 0 < gamma <= 1:
        raise ConfigurationError(f"performance ratio must lie in (0, 1], got {gamma}")
    mse = float(np.mean((t - o) ** 2))
    if gamma == 1:
        return mse
    sq, count = _sq_weights([l.weights for l in net.layers], [l.biases for l in net.layers])
    return gamma * mse + (1 - gamma) * sq / count


def _perf_and_grads(ws, bs, kinds, x, t, gamma):
    """Shared core: forward pass, regularized performance and its gradient."""
    acts = [x]
    a = x
    for k, (w, b, kind) in enumerate(zip(ws, bs, kinds)):
        with np.errstate(over="ignore", invalid="ignore"):
            a = activate(kind, a @ w.T + b)
        if not np.all(np.isfinite(a)):
            raise NumericError(f"non-finite activation in layer {k}")
        acts.append(a)
    err = a - t
    with np.errstate(over="ignore"):
        mse = float(np.vdot(err, err)) / err.size
    delta = (2.0 * gamma / err.size) * err * activate_deriv(kinds[-1], a)
    gws = [None] * len(ws)
    gbs = [None] * len(ws)
    for k in range(len(ws) - 1, -1, -1):
        gws[k] = delta.T @ acts[k]
        gbs[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ ws[k]) * activate_deriv(kinds[k - 1], acts[k])
    if gamma < 1:
        sq, count = _sq_weights(ws, bs)
        c = 2.0 * (1.0 - gamma) / count
        for k in range(len(ws)):
            gws[k] += c * ws[k]
            gbs[k] += c * bs[k]
        perf = gamma * mse + (1.0 - gamma) * sq / count
    else:
        perf = mse
    return perf, gws, gbs


def _check_data(net: Network, inputs, targets) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(inputs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_width:
        raise ShapeError(f"inputs must be (n, {net.input_width}), got {x.shape}")
    if t.ndim != 2 or t.shape[1] != net.output_width:
        raise ShapeError(f"targets must be (n, {net.output_width}), got {t.shape}")
    if x.shape[0] != t.shape[0]:
        raise ShapeError(f"{x.shape[0]} input records vs {t.shape[0]} target records")
    return x, t


def backprop_gradients(net: Network, inputs, targets, gamma: float) -> GradientSet:
    x, t = _check_data(net, inputs, targets)
    if not 0 < gamma <= 1:
        raise ConfigurationError(f"performance ratio must lie in (0, 1], got {gamma}")
    _, gws, gbs = _perf_and_grads([l.weights for l in net.layers], [l.biases for l in net.layers],
                                  net.transfers, x, t, gamma)
    return GradientSet(tuple(gws), tuple(gbs))


def gdm_step(net: Network, grads: GradientSet, vel: Velocity, lr: float, mc: float) -> tuple[Network, Velocity]:
    """One momentum update: delta = mc * delta_prev - (1 - mc) * lr * grad."""
    _check_congruent(net, grads.weights, grads.biases, "gradient set")
    _check_congruent(net, vel.weights, vel.biases, "velocity")
    dws = tuple(mc * v - (1 - mc) * lr * g for v, g in zip(vel.weights, grads.weights))
    dbs = tuple(mc * v - (1 - mc) * lr * g for v, g in zip(vel.biases, grads.biases))
    params = [(l.weights + dw, l.biases + db) for l, dw, db in zip(net.layers, dws, dbs)]
    return net.with_parameters(params), Velocity(dws, dbs)


def train(net: Network, inputs, targets, cfg: TrainConfig) -> tuple[Network, TrainHistory]:
    """Train ``net`` on already-normalized data.

    Epoch ``e`` records the performance and gradient norm of the network
    after ``e`` updates, then stops or applies one more update. At most
    ``cfg.max_epochs`` epochs are recorded, so the final record always
    describes the returned network.
    """
    x, t = _check_data(net, inputs, targets)
    if x.shape[0] == 0:
        raise ConfigurationError("cannot train on an empty dataset")
    gamma, lr, mc = cfg.performance_ratio, cfg.learning_rate, cfg.momentum
    kinds = [TransferKind.parse(k) for k in net.transfers]
    ws = [l.weights.copy() for l in net.layers]
    bs = [l.biases.copy() for l in net.layers]
    vws = [np.zeros_like(w) for w in ws]
    vbs = [np.zeros_like(b) for b in bs]
    step = (1.0 - mc) * lr
    hist = TrainHistory()

    for epoch in range(cfg.max_epochs):
        try:
            perf, gws, gbs = _perf_and_grads(ws, bs, kinds, x, t, gamma)
        except NumericError as exc:
            raise NumericError(f"epoch {epoch}: {exc}; last good epoch {epoch - 1}") from None
        if not math.isfinite(perf):
            raise NumericError(f"performance became non-finite at epoch {epoch}; last good epoch {epoch - 1}")
        gnorm = math.sqrt(sum(float(np.vdot(g, g)) for g in gws) + sum(float(np.vdot(g, g)) for g in gbs))
        hist.epochs.append(epoch)
        hist.performance.append(perf)
        hist.grad_norm.append(gnorm)
        if cfg.log_every and epoch % cfg.log_every == 0:
            log.info("epoch %d perf %.6g grad %.3g", epoch, perf, gnorm)

        if perf <= cfg.goal:
            hist.stop_reason = GOAL_REACHED
            break
        if gnorm < cfg.min_grad:
            hist.stop_reason = GRADIENT_VANISHED
            break
        if epoch == cfg.max_epochs - 1:
            hist.stop_reason = MAX_EPOCHS
            break
        for k in range(len(ws)):
            vws[k] *= mc
            vws[k] -= step * gws[k]
            vbs[k] *= mc
            vbs[k] -= step * gbs[k]
            ws[k] += vws[k]
            bs[k] += vbs[k]

    return net.with_parameters(list(zip(ws, bs))), hist


HISTORY_HEADER = ("epoch", "performance", "grad_norm")


def write_history_csv(hist: TrainHistory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_HEADER)
        for e, p, g in hist.records:
            w.writerow([int(e), repr(float(p)), repr(float(g))])


def read_history_csv(path) -> TrainHistory:
    hist = TrainHistory()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HISTORY_HEADER:
            raise ParseError(f"{path}: expected header {','.join(HISTORY_HEADER)}")
        for lineno, rec in enumerate(reader, 2):
            if not rec:
                continue
            try:
                hist.epochs.append(int(rec[0]))
                hist.performance.append(float(rec[1]))
                hist.grad_norm.append(float(rec[2]))
            except (IndexError, ValueError):
                raise ParseError(f"{path}: row {lineno} is not epoch,performance,grad_norm") from None
    return hist
