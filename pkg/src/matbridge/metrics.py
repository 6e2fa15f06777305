"""Prediction-error metrics and evaluation reports.

``r2`` divides by the sum of squared *predictions*, not by the target
variance; ``mean_pct_error`` is signed. Both are deliberate. The conventional
coefficient of determination and the absolute percentage error are reported
alongside under their own names.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core_net import ModelBundle
from .data import Dataset
from .errors import CompatibilityError, ShapeError, UndefinedMetricError


def _pair(t, o) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=np.float64).ravel()
    o = np.asarray(o, dtype=np.float64).ravel()
    if t.shape != o.shape:
        raise ShapeError(f"targets ({t.size}) and outputs ({o.size}) differ in length")
    if t.size == 0:
        raise ShapeError("metrics need at least one pattern")
    return t, o


def rms(t, o) -> float:
    t, o = _pair(t, o)
    return math.sqrt(float(np.mean(np.abs(t - o) ** 2)))


def r2(t, o) -> float:
    """1 - sum((t - o)^2) / sum(o^2)."""
    t, o = _pair(t, o)
    denom = float(np.sum(o ** 2))
    if denom == 0:
        raise UndefinedMetricError("r2 undefined: all outputs are zero")
    return 1.0 - float(np.sum((t - o) ** 2)) / denom


def r2_standard(t, o) -> float:
    t, o = _pair(t, o)
    denom = float(np.sum((t - t.mean()) ** 2))
    if denom == 0:
        raise UndefinedMetricError("standard r2 undefined: constant targets")
    return 1.0 - float(np.sum((t - o) ** 2)) / denom


def _pct_terms(t, o) -> np.ndarray:
    t, o = _pair(t, o)
    zero = np.flatnonzero(t == 0)
    if zero.size:
        raise UndefinedMetricError(f"percentage error undefined: target is zero at index {int(zero[0])}")
    return (t - o) / t * 100.0


def mean_pct_error(t, o) -> float:
    return float(np.mean(_pct_terms(t, o)))


def mean_abs_pct_error(t, o) -> float:
    return float(np.mean(np.abs(_pct_terms(t, o))))


METRICS = {
    "rms": rms,
    "r2": r2,
    "mean_pct_error": mean_pct_error,
    "r2_standard": r2_standard,
    "mean_abs_pct_error": mean_abs_pct_error,
}


@dataclass
class ColumnReport:
    name: str
    values: dict[str, float]
    errors: dict[str, str] = field(default_factory=dict)

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None


@dataclass
class EvalReport:
    columns: list[ColumnReport]
    count: int
    aggregate_rms: float
    predictions: np.ndarray
    targets: np.ndarray

    def column(self, name: str) -> ColumnReport:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def table(self) -> str:
        head = f"{'output':<14}" + "".join(f"{k:>20}" for k in METRICS)
        lines = [head, "-" * len(head)]
        for c in self.columns:
            lines.append(f"{c.name:<14}" + "".join(f"{c.values[k]:>20.6g}" for k in METRICS))
        lines.append(f"p = {self.count}, aggregate rms = {self.aggregate_rms:.6g}")
        return "\n".join(lines)


def report_from_arrays(names, targets, predictions) -> EvalReport:
    t = np.asarray(targets, dtype=np.float64)
    o = np.asarray(predictions, dtype=np.float64)
    if t.shape != o.shape or t.ndim != 2 or t.shape[1] != len(names):
        raise ShapeError(f"targets {t.shape} / predictions {o.shape} do not match {len(names)} columns")
    cols = []
    for j, name in enumerate(names):
        values, errors = {}, {}
        for key, fn in METRICS.items():
            try:
                values[key] = fn(t[:, j], o[:, j])
            except UndefinedMetricError as exc:
                values[key] = math.nan
                errors[key] = str(exc)
        cols.append(ColumnReport(name, values, errors))
    return EvalReport(cols, t.shape[0], rms(t, o), o, t)


def evaluate(bundle: ModelBundle, ds: Dataset) -> EvalReport:
    """Score ``bundle`` on ``ds`` in physical units, one row of metrics per output."""
    if ds.schema != bundle.schema:
        raise CompatibilityError("dataset schema does not match the model schema")
    if len(ds) == 0:
        raise ShapeError("cannot evaluate on an empty dataset")
    pred = bundle.predict_physical(ds.inputs)
    return report_from_arrays(ds.schema.output_names, ds.outputs, pred)


def write_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["output", "p", *METRICS])
        for c in report.columns:
            w.writerow([c.name, report.count, *(repr(c.values[k]) for k in METRICS)])
        w.writerow(["ALL", report.count, repr(report.aggregate_rms), *([""] * (len(METRICS) - 1))])


def write_predictions_csv(report: EvalReport, names, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record_id", *(f"target_{n}" for n in names), *(f"pred_{n}" for n in names)])
        for i, (t, o) in enumerate(zip(report.targets, report.predictions)):
            w.writerow([i, *(repr(float(v)) for v in t), *(repr(float(v)) for v in o)])
