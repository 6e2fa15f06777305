"""End-to-end training and the transfer x thickness sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import data as D
from .core_net import ModelBundle, TransferKind, init_network
from .errors import ConfigurationError, MatbridgeError
from .metrics import evaluate
from .training import TrainConfig, TrainHistory, train

DEFAULT_SPLIT = (95, 40, 11)
SINGLE = "single"
PER_THICKNESS = "per-thickness"
MODES = (SINGLE, PER_THICKNESS)


@dataclass
class TrainResult:
    bundle: ModelBundle
    history: TrainHistory
    train: D.Dataset
    test: D.Dataset
    validation: D.Dataset
    rejected: list[int] = field(default_factory=list)


def select_thickness(ds: D.Dataset, thickness_mm: float) -> D.Dataset:
    col = ds.column(D.THICKNESS_COLUMN)
    return ds.subset(np.flatnonzero(np.isclose(col, thickness_mm, rtol=0, atol=1e-9)))


def train_pipeline(ds: D.Dataset, cfg: TrainConfig, *, transfer="tansig", hidden: int = 10,
                   split_weights: Sequence[float] = DEFAULT_SPLIT, split_seed: int = 0,
                   thickness: float | None = None, data_tag: str = "") -> TrainResult:
    """Filter, split, normalize on the training split, and train one network."""
    if thickness is not None:
        ds = select_thickness(ds, thickness)
        if len(ds) == 0:
            raise ConfigurationError(f"no records with thickness {thickness} mm")
    clean, rejected = D.filter_outliers(ds)
    spec = D.SplitSpec.from_weights(split_weights, len(clean), seed=split_seed)
    tr, te, va = D.split(clean, spec)
    if len(tr) == 0:
        raise ConfigurationError("training split is empty")
    norm_in, norm_out = D.normalize_fit(tr)
    kind = TransferKind.parse(transfer)
    net = init_network((len(ds.schema.inputs), hidden, len(ds.schema.outputs)),
                       (kind, TransferKind.PURELIN), cfg.seed)
    net, hist = train(net, D.normalize_apply(tr.inputs, norm_in), D.normalize_apply(tr.outputs, norm_out), cfg)
    fingerprint = ";".join([
        cfg.fingerprint(), f"transfer={kind.value}", f"hidden={hidden}",
        f"split={spec.train_count},{spec.test_count},{spec.validation_count}",
        f"split_seed={split_seed}", f"thickness={thickness!r}",
        f"rows={len(ds)}", f"rejected={len(rejected)}", f"data={data_tag}",
    ])
    bundle = ModelBundle(net, norm_in, norm_out, ds.schema, fingerprint)
    return TrainResult(bundle, hist, tr, te, va, rejected)


def _normalized_rms(bundle: ModelBundle, ds: D.Dataset) -> float:
    if len(ds) == 0:
        return math.nan
    pred = bundle.predict_physical(ds.inputs)
    err = D.normalize_apply(pred, bundle.norm_out) - D.normalize_apply(ds.outputs, bundle.norm_out)
    return math.sqrt(float(np.mean(err ** 2)))


def _test_rms(bundle: ModelBundle, ds: D.Dataset) -> float:
    return evaluate(bundle, ds).aggregate_rms if len(ds) else math.nan


SWEEP_COLUMNS = ("mode", "transfer", "thickness", "rows", "final_performance", "epochs",
                 "stop_reason", "test_rms", "test_rms_normalized", "error")


def sweep(ds: D.Dataset, cfg: TrainConfig, *, transfers: Sequence[str] = ("tansig", "logsig"),
          thicknesses: Sequence[float] = (15, 17, 19, 21), modes: Sequence[str] = (PER_THICKNESS,),
          hidden: int = 10, split_weights: Sequence[float] = DEFAULT_SPLIT, split_seed: int = 0,
          data_tag: str = "") -> tuple[list[dict], dict[tuple, TrainHistory]]:
    """Run every (mode, transfer, thickness) cell; failures are recorded, not raised.

    In ``per-thickness`` mode each cell trains on the rows with that wall
    thickness. In ``single`` mode one network per transfer function trains on
    all rows and each cell reports its error on the matching test rows.
    """
    if not transfers or not thicknesses or not modes:
        raise ConfigurationError("sweep axes must be nonempty")
    for m in modes:
        if m not in MODES:
            raise ConfigurationError(f"unknown sweep mode {m!r}")
    rows, histories = [], {}
    for mode in modes:
        for transfer in transfers:
            shared = None
            if mode == SINGLE:
                try:
                    shared = train_pipeline(ds, cfg, transfer=transfer, hidden=hidden,
                                            split_weights=split_weights, split_seed=split_seed, data_tag=data_tag)
                except MatbridgeError as exc:
                    shared = exc
            for th in thicknesses:
                row = dict.fromkeys(SWEEP_COLUMNS)
                row.update(mode=mode, transfer=transfer, thickness=float(th), error="")
                try:
                    if mode == SINGLE:
                        if isinstance(shared, Exception):
                            raise shared
                        res = shared
                        test = select_thickness(res.test, th)
                        row["rows"] = len(select_thickness(ds, th))
                    else:
                        res = train_pipeline(ds, cfg, transfer=transfer, hidden=hidden,
                                             split_weights=split_weights, split_seed=split_seed,
                                             thickness=th, data_tag=data_tag)
                        test = res.test
                        row["rows"] = len(select_thickness(ds, th))
                    row.update(final_performance=res.history.final_performance,
                               epochs=res.history.epochs[-1], stop_reason=res.history.stop_reason,
                               test_rms=_test_rms(res.bundle, test),
                               test_rms_normalized=_normalized_rms(res.bundle, test))
                    histories[(mode, transfer, float(th))] = res.history
                except MatbridgeError as exc:
                    row["error"] = f"{type(exc).__name__}: {exc}"
                rows.append(row)
    return rows, histories
