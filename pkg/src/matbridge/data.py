"""Dataset schema, CSV ingestion, outlier filtering, scaling and splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ParseError, SchemaError, ShapeError


@dataclass(frozen=True)
class Column:
    name: str
    unit: str
    lo: float | None = None
    hi: float | None = None
    positive: bool = False

    def in_range(self, value: float) -> bool:
        if self.lo is not None and value < self.lo:
            return False
        if self.hi is not None and value > self.hi:
            return False
        if self.positive and not value > 0:
            return False
        return True

    def to_dict(self) -> dict:
        return {"name": self.name, "unit": self.unit, "lo": self.lo,
                "hi": self.hi, "positive": self.positive}

    @classmethod
    def from_dict(cls, d: dict) -> "Column":
        return cls(d["name"], d["unit"], d.get("lo"), d.get("hi"), bool(d.get("positive", False)))


# ASTM A487 Gr 4C composition limits, mass %
COMPOSITION_RANGES = {
    "C": (0.2, 0.3),
    "Si": (0.4, 0.8),
    "Mn": (0.8, 1.0),
    "S": (0.0, 0.03),
    "P": (0.0, 0.03),
    "Cr": (0.4, 0.8),
    "Ni": (0.4, 0.8),
    "Mo": (0.15, 0.3),
    "Cu": (0.0, 0.5),
    "V": (0.0, 0.03),
    "W": (0.0, 0.1),
}
COMPOSITION_COLUMNS = tuple(COMPOSITION_RANGES)
THICKNESS_COLUMN = "thickness"


@dataclass(frozen=True)
class Schema:
    inputs: tuple[Column, ...]
    outputs: tuple[Column, ...]

    @property
    def input_names(self) -> list[str]:
        return [c.name for c in self.inputs]

    @property
    def output_names(self) -> list[str]:
        return [c.name for c in self.outputs]

    @property
    def columns(self) -> tuple[Column, ...]:
        return self.inputs + self.outputs

    def to_dict(self) -> dict:
        return {"inputs": [c.to_dict() for c in self.inputs],
                "outputs": [c.to_dict() for c in self.outputs]}

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        return cls(tuple(Column.from_dict(c) for c in d["inputs"]),
                   tuple(Column.from_dict(c) for c in d["outputs"]))


def default_schema() -> Schema:
    inputs = [Column(n, "mass%", lo, hi) for n, (lo, hi) in COMPOSITION_RANGES.items()]
    inputs += [
        Column("TS", "MPa", positive=True),
        Column("YS", "MPa", positive=True),
        Column("EI", "%"),
        Column("RA", "%"),
        Column(THICKNESS_COLUMN, "mm", positive=True),
    ]
    outputs = [
        Column("stress", "Pa"),
        Column("strain", "m/m"),
        Column("deformation", "m"),
        Column("life", "cycles", positive=True),
        Column("service_years", "years"),
    ]
    return Schema(tuple(inputs), tuple(outputs))


def _bound(tok: str) -> float | None:
    return None if tok in ("-", "") else float(tok)


def load_schema(path) -> Schema:
    """Read a schema override file.

    One column per line::

        input  C      mass%  0.2  0.3
        input  TS     MPa    -    -    positive
        output life   cycles -    -    positive

    ``-`` leaves a bound open. Blank lines and ``#`` comments are ignored.
    """
    inputs, outputs = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] not in ("input", "output") or len(tok) < 3:
            raise ParseError(f"{path}:{lineno}: expected 'input|output NAME UNIT [LO HI [positive]]'")
        try:
            lo = _bound(tok[3]) if len(tok) > 3 else None
            hi = _bound(tok[4]) if len(tok) > 4 else None
        except ValueError:
            raise ParseError(f"{path}:{lineno}: bad bound for column {tok[1]!r}") from None
        positive = len(tok) > 5 and tok[5] == "positive"
        col = Column(tok[1], tok[2], lo, hi, positive)
        (inputs if tok[0] == "input" else outputs).append(col)
    if not inputs or not outputs:
        raise SchemaError(f"{path}: schema needs at least one input and one output column")
    return Schema(tuple(inputs), tuple(outputs))


def save_schema(schema: Schema, path) -> None:
    def fmt(v):
        return "-" if v is None else repr(v)

    lines = []
    for kind, cols in (("input", schema.inputs), ("output", schema.outputs)):
        for c in cols:
            row = [kind, c.name, c.unit, fmt(c.lo), fmt(c.hi)]
            if c.positive:
                row.append("positive")
            lines.append(" ".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        x = np.array(self.inputs, dtype=np.float64).reshape(-1, len(self.schema.inputs))
        y = np.array(self.outputs, dtype=np.float64).reshape(-1, len(self.schema.outputs))
        if x.shape[0] != y.shape[0]:
            raise ShapeError(f"{x.shape[0]} input rows vs {y.shape[0]} output rows")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "outputs", y)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def column(self, name: str) -> np.ndarray:
        if name in self.schema.input_names:
            return self.inputs[:, self.schema.input_names.index(name)]
        if name in self.schema.output_names:
            return self.outputs[:, self.schema.output_names.index(name)]
        raise SchemaError(f"no column named {name!r}")

    def subset(self, rows: Sequence[int] | np.ndarray) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.schema, self.inputs[rows], self.outputs[rows])


def load_csv(path, schema: Schema | None = None) -> tuple[Dataset, list[str]]:
    """Read a dataset CSV, matching columns by header name.

    Returns the dataset and a list of validation warnings for cells that
    fall outside the schema's validity ranges. Extra columns are ignored.
    """
    schema = schema or default_schema()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: missing header row") from None
        names = schema.input_names + schema.output_names
        index = {}
        for name in names:
            if name not in header:
                raise SchemaError(f"{path}: missing column {name!r}")
            index[name] = header.index(name)
        rows = []
        for lineno, rec in enumerate(reader, 2):
            if not rec or all(not c.strip() for c in rec):
                continue
            vals = []
            for name in names:
                j = index[name]
                try:
                    vals.append(float(rec[j]))
                except (IndexError, ValueError):
                    cell = rec[j] if j < len(rec) else ""
                    raise ParseError(f"{path}: row {lineno}, column {name!r}: cannot parse {cell!r}") from None
            rows.append(vals)
    arr = np.array(rows, dtype=np.float64).reshape(-1, len(names))
    nin = len(schema.inputs)
    ds = Dataset(schema, arr[:, :nin], arr[:, nin:])

    warnings = []
    for i, xin in enumerate(ds.inputs):
        for col, v in zip(schema.inputs, xin):
            if col.name in COMPOSITION_RANGES and not col.in_range(v):
                warnings.append(f"row {i}: {col.name}={float(v)!r} outside [{col.lo}, {col.hi}]")
    return ds, warnings


def write_csv(ds: Dataset, path) -> None:
    names = ds.schema.input_names + ds.schema.output_names
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for xin, yout in zip(ds.inputs, ds.outputs):
            w.writerow([repr(float(v)) for v in (*xin, *yout)])


def rejection_reasons(schema: Schema, xin: np.ndarray, yout: np.ndarray) -> list[str]:
    reasons = []
    for col, v in zip(schema.columns, (*xin, *yout)):
        if not math.isfinite(v):
            reasons.append(f"{col.name} not finite")
        elif not col.in_range(v):
            reasons.append(f"{col.name}={float(v)!r} out of range")
    names = schema.input_names
    if "TS" in names and "YS" in names:
        ts, ys = xin[names.index("TS")], xin[names.index("YS")]
        if ys > ts:
            reasons.append("YS > TS")
    return reasons


def filter_outliers(ds: Dataset) -> tuple[Dataset, list[int]]:
    """Drop non-finite, out-of-range and contradictory (YS > TS) records."""
    if len(ds) == 0:
        raise ConfigurationError("cannot filter an empty dataset")
    keep, rejected = [], []
    for i in range(len(ds)):
        if rejection_reasons(ds.schema, ds.inputs[i], ds.outputs[i]):
            rejected.append(i)
        else:
            keep.append(i)
    if not keep:
        raise ConfigurationError(f"all {len(ds)} records rejected as outliers")
    return ds.subset(keep), rejected


@dataclass(frozen=True)
class NormParams:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        lo = np.array(self.mins, dtype=np.float64).ravel()
        hi = np.array(self.maxs, dtype=np.float64).ravel()
        if lo.shape != hi.shape:
            raise ShapeError("mins and maxs differ in length")
        if np.any(lo > hi):
            raise ConfigurationError("NormParams needs min <= max in every column")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "mins", lo)
        object.__setattr__(self, "maxs", hi)

    def __len__(self) -> int:
        return self.mins.size

    def to_dict(self) -> dict:
        return {"min": [float(v) for v in self.mins], "max": [float(v) for v in self.maxs]}

    @classmethod
    def from_dict(cls, d: dict) -> "NormParams":
        return cls(d["min"], d["max"])


def normalize_fit(ds: Dataset) -> tuple[NormParams, NormParams]:
    if len(ds) == 0:
        raise ConfigurationError("cannot fit normalization on an empty dataset")
    return (NormParams(ds.inputs.min(axis=0), ds.inputs.max(axis=0)),
            NormParams(ds.outputs.min(axis=0), ds.outputs.max(axis=0)))


def _check_width(x: np.ndarray, p: NormParams) -> None:
    if x.shape[-1] != len(p):
        raise ShapeError(f"width {x.shape[-1]} does not match {len(p)} normalization columns")


def normalize_apply(x, p: NormParams) -> np.ndarray:
    """Scale each column linearly so its fitted [min, max] lands on [-1, 1].

    Constant columns map to 0. Accepts a vector or a (rows, columns) matrix.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_width(x, p)
    span = p.maxs - p.mins
    const = span == 0
    safe = np.where(const, 1.0, span)
    out = 2.0 * (x - p.mins) / safe - 1.0
    return np.where(const, 0.0, out)


def denormalize(y, p: NormParams) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    _check_width(y, p)
    span = p.maxs - p.mins
    return np.where(span == 0, p.mins, (y + 1.0) / 2.0 * span + p.mins)


@dataclass(frozen=True)
class SplitSpec:
    """Train/test/validation partition sizes.

    ``counts`` are exact record counts. ``from_weights`` builds a spec whose
    counts are proportional to the given weights for a dataset of size ``n``.
    """

    train_count: int
    test_count: int
    validation_count: int
    seed: int = 0

    @property
    def total(self) -> int:
        return self.train_count + self.test_count + self.validation_count

    @classmethod
    def from_weights(cls, weights: Sequence[float], n: int, seed: int = 0) -> "SplitSpec":
        if len(weights) != 3 or any(w < 0 for w in weights) or sum(weights) <= 0:
            raise ConfigurationError(f"split needs three nonnegative weights, got {list(weights)}")
        if sum(weights) == n and all(float(w).is_integer() for w in weights):
            return cls(*(int(w) for w in weights), seed=seed)
        total = float(sum(weights))
        train = int(round(weights[0] / total * n))
        test = min(int(round(weights[1] / total * n)), n - train)
        return cls(train, test, n - train - test, seed=seed)


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if min(spec.train_count, spec.test_count, spec.validation_count) < 0:
        raise ConfigurationError("split counts must be nonnegative")
    if spec.total != n:
        raise ConfigurationError(f"split counts sum to {spec.total} but dataset has {n} rows")
    perm = np.random.default_rng(spec.seed).permutation(n)
    a = spec.train_count
    b = a + spec.test_count
    return perm[:a], perm[a:b], perm[b:]


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    tr, te, va = split_indices(len(ds), spec)
    return ds.subset(tr), ds.subset(te), ds.subset(va)
