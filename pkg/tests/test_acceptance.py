"""Acceptance criteria, one test per criterion (or per cell).

Each test records a PASS/FAIL line that is printed in the terminal summary
under "acceptance criteria". Tolerances are the contract values; none are
relaxed to make a test pass.
"""

import time

import numpy as np
import pytest

from matbridge import data as D
from matbridge import metrics as M
from matbridge import surrogate as S
from matbridge.core_net import TransferKind, forward, init_network, load_model, save_model
from matbridge.pipeline import DEFAULT_SPLIT, PER_THICKNESS, select_thickness, sweep, train_pipeline
from matbridge.training import (
    STOP_REASONS, TrainConfig, backprop_gradients, msereg_perf, train, write_history_csv,
)

TANSIG, LOGSIG, PURELIN = TransferKind.TANSIG, TransferKind.LOGSIG, TransferKind.PURELIN
OUTPUTS = ("stress", "strain", "deformation", "life", "service_years")


def _fd_grads(net, x, t, gamma, h=1e-5):
    params = [(l.weights.copy(), l.biases.copy()) for l in net.layers]
    out = []
    for k in range(len(params)):
        pair = []
        for arr in (0, 1):
            g = np.zeros_like(params[k][arr])
            for idx in np.ndindex(g.shape):
                vals = []
                for sign in (1, -1):
                    trial = [(w.copy(), b.copy()) for w, b in params]
                    trial[k][arr][idx] += sign * h
                    moved = net.with_parameters(trial)
                    vals.append(msereg_perf(t, forward(moved, x)[0], moved, gamma))
                g[idx] = (vals[0] - vals[1]) / (2 * h)
            pair.append(g)
        out.append(pair)
    return out


def test_c1_gradient_correctness(acceptance):
    with acceptance("C1 gradient correctness: 20 random nets vs central differences, rel 1e-5 / abs 1e-8, < 5 s"):
        kinds = [TANSIG, LOGSIG, PURELIN]
        start = time.perf_counter()
        seen = set()
        worst = 0.0
        for seed in range(20):
            r = np.random.default_rng(1000 + seed)
            depth = int(r.integers(1, 4))
            sizes = [int(v) for v in r.integers(1, 7, size=depth + 1)]
            transfers = [kinds[(seed + k) % 3] for k in range(depth)]
            seen.update(transfers)
            net = init_network(sizes, transfers, seed)
            net = net.with_parameters([(l.weights * 2, r.normal(size=l.biases.shape)) for l in net.layers])
            x, t = r.normal(size=(5, sizes[0])), r.normal(size=(5, sizes[-1]))
            for gamma in (0.1, 1.0):
                g = backprop_gradients(net, x, t, gamma)
                fd = _fd_grads(net, x, t, gamma)
                for k, (fw, fb) in enumerate(fd):
                    for a, f in ((g.weights[k], fw), (g.biases[k], fb)):
                        excess = np.abs(a - f) - np.maximum(1e-5 * np.abs(f), 1e-8)
                        worst = max(worst, float(excess.max()))
        elapsed = time.perf_counter() - start
        assert seen == set(kinds)
        assert worst <= 0, f"gradient mismatch exceeds tolerance by {worst:g}"
        assert elapsed < 5, f"took {elapsed:.2f} s"


def test_c2_metric_fidelity(acceptance):
    with acceptance("C2 metric fidelity: rms sqrt(0.5), r2 0.875, mean_pct_error 10, exact to 1e-12"):
        assert abs(M.rms([1, 2], [0, 2]) - np.sqrt(0.5)) <= 1e-12
        assert abs(M.r2([1, 2], [2, 2]) - 0.875) <= 1e-12
        assert abs(M.mean_pct_error([10], [9]) - 10) <= 1e-12
        # the conventional coefficient of determination would give -1 here
        assert abs(M.r2_standard([1, 2], [2, 2]) + 1) <= 1e-12


def test_c3_xor_convergence(acceptance):
    with acceptance("C3 XOR 2-2-1 tansig: MSE < 0.05 within 50000 epochs for >= 8/10 seeds, < 10 s"):
        x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        t = np.array([[0.0], [1.0], [1.0], [0.0]])
        cfg = TrainConfig(learning_rate=0.5, momentum=0.9, performance_ratio=1.0, goal=0.05, max_epochs=50_000)
        start = time.perf_counter()
        ok = 0
        for seed in range(10):
            _, hist = train(init_network((2, 2, 1), (TANSIG, PURELIN), seed), x, t, cfg)
            ok += hist.final_performance < 0.05
        elapsed = time.perf_counter() - start
        assert ok >= 8, f"only {ok}/10 seeds converged"
        assert elapsed < 10, f"took {elapsed:.2f} s"


@pytest.fixture(scope="module")
def regression_data():
    ds, _ = S.generate_dataset(S.SurrogateParams(sample_count=146, seed=0, noise_sigma=0.01))
    return ds


@pytest.mark.parametrize("transfer", ["tansig", "logsig"])
def test_c4_surrogate_regression(acceptance, regression_data, transfer):
    label = (f"C4 surrogate regression ({transfer}): 146 rows, split 95/40/11, defaults, <= 200000 epochs, "
             "test mean |%err| < 10% on all 5 outputs, < 2 min")
    with acceptance(label):
        start = time.perf_counter()
        res = train_pipeline(regression_data, TrainConfig(), transfer=transfer, split_weights=DEFAULT_SPLIT)
        elapsed = time.perf_counter() - start
        assert (len(res.train), len(res.test), len(res.validation)) == DEFAULT_SPLIT
        assert res.history.epochs[-1] < 200_000
        rep = M.evaluate(res.bundle, res.test)
        errs = {n: rep.column(n).mean_abs_pct_error for n in OUTPUTS}
        summary = ", ".join(f"{n}={v:.2f}%" for n, v in errs.items())
        assert elapsed < 120, f"took {elapsed:.1f} s"
        assert all(v < 10 for v in errs.values()), summary


def test_c5_calibration_anchors(acceptance):
    with acceptance("C5 calibration anchors: strain +-0.01%, life exact, K_t stress +-10%, reference-heat TS +-5%"):
        mat = S.MaterialModel()
        geom = S.ValveGeometry(S.INNER_DIAMETER_M, S.ANCHOR_THICKNESS_M, S.CALIBRATED_KT)
        strain, _, life, _ = S.derived_outputs(4.3302e8, geom, mat, 650.0)
        assert mat.elastic_modulus == 2.0e11
        assert abs(strain - 0.0021651) / 0.0021651 <= 1e-4
        assert life == 2116.1
        stress = S.lame_stress(geom, 3.5e7)
        assert abs(stress - 4.3302e8) / 4.3302e8 <= 0.10
        rows = [
            ([0.26, 0.51, 0.81, 0.011, 0.014, 0.54, 0.54, 0.24, 0.03, 0.002, 0.005], 639),
            ([0.23, 0.55, 0.84, 0.010, 0.015, 0.50, 0.45, 0.18, 0.03, 0.003, 0.008], 635),
            ([0.24, 0.63, 0.91, 0.021, 0.022, 0.51, 0.46, 0.19, 0.04, 0.003, 0.010], 646),
        ]
        for comp, measured in rows:
            ts = S.composition_to_properties(comp)[0]
            assert abs(ts - measured) / measured <= 0.05, (ts, measured)


def test_c6_determinism_and_persistence(acceptance, tmp_path):
    with acceptance("C6 determinism: byte-identical datasets/models/histories; save/load exact on 100 inputs"):
        digests = []
        for run in ("a", "b"):
            ds, _ = S.generate_dataset(S.SurrogateParams(sample_count=146, seed=7))
            D.write_csv(ds, tmp_path / f"{run}.csv")
            res = train_pipeline(ds, TrainConfig(max_epochs=500, seed=3), transfer="logsig")
            save_model(res.bundle, tmp_path / f"{run}.model")
            write_history_csv(res.history, tmp_path / f"{run}.hist.csv")
            digests.append([(tmp_path / f"{run}{ext}").read_bytes() for ext in (".csv", ".model", ".hist.csv")])
        assert digests[0] == digests[1]
        bundle = res.bundle
        loaded = load_model(tmp_path / "a.model")
        x = np.random.default_rng(99).uniform(-1, 1, size=(100, 16))
        assert np.array_equal(forward(bundle.network, x)[0], forward(loaded.network, x)[0])
        assert np.array_equal(bundle.predict_physical(res.test.inputs), loaded.predict_physical(res.test.inputs))


def test_c7_data_invariants(acceptance, surrogate_146):
    with acceptance("C7 data invariants: normalization round trip <= 1e-12, split 95/40/11 exact, outlier filter"):
        ds = surrogate_146
        norm_in, norm_out = D.normalize_fit(ds)
        for arr, p in ((ds.inputs, norm_in), (ds.outputs, norm_out)):
            back = D.denormalize(D.normalize_apply(arr, p), p)
            # measured relative to each column's scale, since raw stresses are ~1e8
            scale = np.maximum(np.abs(arr).max(axis=0), 1.0)
            assert np.max(np.abs(back - arr) / scale) <= 1e-12
        spec = D.SplitSpec(95, 40, 11, seed=5)
        idx = D.split_indices(len(ds), spec)
        assert [len(i) for i in idx] == [95, 40, 11]
        allidx = np.concatenate(idx)
        assert sorted(allidx.tolist()) == list(range(146))
        once, _ = D.filter_outliers(ds)
        twice, rej = D.filter_outliers(once)
        assert rej == [] and np.array_equal(once.inputs, twice.inputs)
        bad_in = ds.inputs.copy()
        ts_col, ys_col = ds.schema.input_names.index("TS"), ds.schema.input_names.index("YS")
        bad_in[3, ys_col] = bad_in[3, ts_col] + 10.0
        _, rejected = D.filter_outliers(D.Dataset(ds.schema, bad_in, ds.outputs))
        assert rejected == [3]


def test_c8_sweep_harness(acceptance, surrogate_146):
    with acceptance("C8 sweep harness: default 2x4 grid gives 8 rows, valid stop reasons, histories, exact partition"):
        rows, histories = sweep(surrogate_146, TrainConfig(max_epochs=2000))
        assert len(rows) == 8
        assert {(r["transfer"], r["thickness"]) for r in rows} == \
            {(t, th) for t in ("tansig", "logsig") for th in (15.0, 17.0, 19.0, 21.0)}
        for r in rows:
            assert r["error"] == "" and r["stop_reason"] in STOP_REASONS
            hist = histories[(PER_THICKNESS, r["transfer"], r["thickness"])]
            assert len(hist) > 0 and hist.final_performance == r["final_performance"]
        # each thickness cell owns a disjoint block of rows and together they cover the dataset
        col = surrogate_146.column(D.THICKNESS_COLUMN)
        blocks = [set(np.flatnonzero(np.isclose(col, th)).tolist()) for th in (15, 17, 19, 21)]
        assert sum(len(b) for b in blocks) == len(surrogate_146) == len(set().union(*blocks))
        for th, block in zip((15, 17, 19, 21), blocks):
            assert len(select_thickness(surrogate_146, th)) == len(block)
            assert sum(r["rows"] for r in rows if r["thickness"] == th) == 2 * len(block)
