import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from matbridge import metrics as M
from matbridge.core_net import Layer, ModelBundle, Network, TransferKind, init_network
from matbridge.data import Column, Dataset, NormParams, Schema, default_schema, normalize_fit
from matbridge.errors import CompatibilityError, ShapeError, UndefinedMetricError

vec = arrays(np.float64, 7, elements=st.floats(-1e3, 1e3))


def test_rms_examples():
    assert M.rms([1, 2, 3], [1, 2, 3]) == 0
    assert M.rms([1, 2], [0, 2]) == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert M.rms([3], [0]) == 3


def test_r2_examples():
    assert M.r2([1, 2], [1, 2]) == 1
    assert M.r2([1, 2], [2, 2]) == 0.875
    with pytest.raises(UndefinedMetricError):
        M.r2([1, 2], [0, 0])


def test_r2_is_not_standard():
    # the conventional coefficient would be 1 - 1/0.5 = -1 here
    assert M.r2_standard([1, 2], [2, 2]) == -1.0
    assert M.r2([1, 2], [2, 2]) != M.r2_standard([1, 2], [2, 2])


def test_mean_pct_error_examples():
    assert M.mean_pct_error([5, 6], [5, 6]) == 0
    assert M.mean_pct_error([10], [9]) == pytest.approx(10, abs=1e-12)
    with pytest.raises(UndefinedMetricError, match="index 1"):
        M.mean_pct_error([10, 0], [9, 1])


def test_mean_pct_error_is_signed():
    assert M.mean_pct_error([10, 10], [9, 11]) == pytest.approx(0, abs=1e-12)
    assert M.mean_abs_pct_error([10, 10], [9, 11]) == pytest.approx(10, abs=1e-12)


def test_length_mismatch():
    with pytest.raises(ShapeError):
        M.rms([1, 2], [1])


@given(vec, vec)
def test_rms_symmetric(t, o):
    assert abs(M.rms(t, o) - M.rms(o, t)) <= 1e-15 * max(1.0, M.rms(t, o))


@given(vec, vec, st.floats(-100, 100))
def test_rms_homogeneous(t, o, c):
    assert M.rms(c * t, c * o) == pytest.approx(abs(c) * M.rms(t, o), rel=1e-12, abs=1e-9)


def _tiny_schema():
    return Schema((Column("x", ""),), (Column("a", ""), Column("b", "")))


def _exact_bundle():
    # y = x (a) and y = 2x + 1 (b) on normalized data with identity scaling
    net = Network((Layer([[1.0], [2.0]], [0.0, 1.0], TransferKind.PURELIN),), 1)
    ident = NormParams([-1.0], [1.0])
    out = NormParams([-1.0, -1.0], [1.0, 1.0])
    return ModelBundle(net, ident, out, _tiny_schema())


def test_evaluate_perfect_model():
    x = np.array([[0.1], [0.5], [-0.3]])
    ds = Dataset(_tiny_schema(), x, np.hstack([x, 2 * x + 1]))
    rep = M.evaluate(_exact_bundle(), ds)
    for c in rep.columns:
        assert c.rms == pytest.approx(0, abs=1e-15) and c.r2 == pytest.approx(1, abs=1e-15)
        assert c.mean_pct_error == pytest.approx(0, abs=1e-12)
    assert rep.count == 3


def test_evaluate_single_row_reduces_to_scalars():
    ds = Dataset(_tiny_schema(), [[0.5]], [[0.4, 2.5]])
    rep = M.evaluate(_exact_bundle(), ds)
    assert rep.column("a").rms == pytest.approx(0.1, abs=1e-15)
    assert rep.column("b").mean_pct_error == pytest.approx((2.5 - 2.0) / 2.5 * 100, abs=1e-12)


def test_evaluate_undefined_metric_does_not_abort():
    ds = Dataset(_tiny_schema(), [[0.0], [0.0]], [[0.0, 1.0], [0.0, 1.0]])
    rep = M.evaluate(_exact_bundle(), ds)
    a = rep.column("a")
    assert math.isnan(a.r2) and "r2" in a.errors and math.isnan(a.mean_pct_error)
    assert rep.column("b").r2 == 1.0


def test_evaluate_schema_mismatch(surrogate_146):
    with pytest.raises(CompatibilityError):
        M.evaluate(_exact_bundle(), surrogate_146)


def test_duplicating_rows_leaves_metrics(surrogate_146):
    ni, no = normalize_fit(surrogate_146)
    b = ModelBundle(init_network((16, 10, 5), ("tansig", "purelin"), 4), ni, no, default_schema())
    rep1 = M.evaluate(b, surrogate_146)
    rep2 = M.evaluate(b, surrogate_146.subset(np.r_[np.arange(146), np.arange(146)]))
    for c1, c2 in zip(rep1.columns, rep2.columns):
        for key in ("rms", "r2", "mean_pct_error"):
            assert c2.values[key] == pytest.approx(c1.values[key], rel=1e-12)


def test_prediction_dump_recompute(tmp_path, surrogate_146):
    """Metrics recomputed by hand from the exported prediction CSV match the report."""
    ni, no = normalize_fit(surrogate_146)
    b = ModelBundle(init_network((16, 10, 5), ("logsig", "purelin"), 8), ni, no, default_schema())
    test = surrogate_146.subset(range(40))
    rep = M.evaluate(b, test)
    names = test.schema.output_names
    M.write_predictions_csv(rep, names, tmp_path / "p.csv")
    M.write_report_csv(rep, tmp_path / "r.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    header = lines[0].split(",")
    table = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    assert len(table) == 40
    for j, name in enumerate(names):
        ti, oi = header.index(f"target_{name}"), header.index(f"pred_{name}")
        t = [r[ti] for r in table]
        o = [r[oi] for r in table]
        p = len(t)
        rms = (sum((a - b) ** 2 for a, b in zip(t, o)) / p) ** 0.5
        r2 = 1 - sum((a - b) ** 2 for a, b in zip(t, o)) / sum(b * b for b in o)
        mpe = sum((a - b) / a * 100 for a, b in zip(t, o)) / p
        c = rep.column(name)
        assert c.rms == pytest.approx(rms, rel=1e-12)
        assert c.r2 == pytest.approx(r2, rel=1e-12, abs=1e-12)
        assert c.mean_pct_error == pytest.approx(mpe, rel=1e-12, abs=1e-12)
    assert (tmp_path / "r.csv").read_text().splitlines()[0].startswith("output,p,rms,r2,mean_pct_error")
