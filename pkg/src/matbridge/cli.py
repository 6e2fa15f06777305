"""Command-line driver: datagen, train, sweep, evaluate, predict, plot.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 compatibility
error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import data as D
from . import metrics as M
from . import pipeline as P
from . import plotting
from . import surrogate as S
from .core_net import load_model, save_model
from .errors import ConfigurationError, MatbridgeError, ParseError, SchemaError
from .training import TrainConfig, read_history_csv, write_history_csv

EXIT_IO = 2


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _strings(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_provenance(path, command: str, args: argparse.Namespace, extra: dict | None = None) -> Path:
    side = Path(str(path) + ".provenance.txt")
    lines = [f"tool=matbridge {__version__}", f"command={command}"]
    for k, v in sorted(vars(args).items()):
        if k in ("func", "config", "command") or v is None:
            continue
        lines.append(f"{k}={v}")
    for k, v in (extra or {}).items():
        lines.append(f"{k}={v}")
    side.write_text("\n".join(lines) + "\n")
    return side


def read_config_file(path) -> dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment; keys may use dashes or underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _train_config(args) -> TrainConfig:
    return TrainConfig(learning_rate=args.learning_rate, momentum=args.momentum,
                       performance_ratio=args.performance_ratio, goal=args.goal,
                       max_epochs=args.max_epochs, min_grad=args.min_grad,
                       log_every=args.log_every, seed=args.seed)


def _schema(args) -> D.Schema:
    return D.load_schema(args.schema) if getattr(args, "schema", None) else D.default_schema()


def _load_dataset(path, schema) -> D.Dataset:
    ds, warnings = D.load_csv(path, schema)
    for w in warnings:
        logging.warning("%s: %s", path, w)
    return ds


def cmd_datagen(args) -> int:
    lo, hi = args.pressure_range
    params = S.SurrogateParams(sample_count=args.sample_count, seed=args.seed, noise_sigma=args.noise_sigma,
                               thicknesses=tuple(t / 1000.0 for t in args.thicknesses),
                               pressure_range=(lo, hi))
    ds, _ = S.generate_dataset(params)
    D.write_csv(ds, args.out)
    write_provenance(args.out, "datagen", args,
                     {f"surrogate.{k}": v for k, v in params.provenance().items()}
                     | {"sha256": file_sha256(args.out)})
    print(f"wrote {len(ds)} rows to {args.out}")
    return 0


def cmd_train(args) -> int:
    ds = _load_dataset(args.data, _schema(args))
    cfg = _train_config(args)
    res = P.train_pipeline(ds, cfg, transfer=args.transfer, hidden=args.hidden,
                           split_weights=args.split, split_seed=args.split_seed,
                           thickness=args.thickness, data_tag=file_sha256(args.data))
    save_model(res.bundle, args.model_out)
    hist_path = args.history_out or str(Path(args.model_out).with_suffix("")) + ".history.csv"
    write_history_csv(res.history, hist_path)
    for path in (args.model_out, hist_path):
        write_provenance(path, "train", args, {"fingerprint": res.bundle.train_fingerprint})
    if args.splits_out:
        out = Path(args.splits_out)
        out.mkdir(parents=True, exist_ok=True)
        for name, part in (("train", res.train), ("test", res.test), ("validation", res.validation)):
            D.write_csv(part, out / f"{name}.csv")
    print(f"stop_reason={res.history.stop_reason}")
    print(f"final_performance={res.history.final_performance!r}")
    print(f"epochs={res.history.epochs[-1]}")
    print(f"split={len(res.train)},{len(res.test)},{len(res.validation)} rejected={len(res.rejected)}")
    return 0


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def cmd_sweep(args) -> int:
    ds = _load_dataset(args.data, _schema(args))
    modes = P.MODES if args.mode == "both" else (args.mode,)
    rows, histories = P.sweep(ds, _train_config(args), transfers=args.transfers, thicknesses=args.thicknesses,
                              modes=modes, hidden=args.hidden, split_weights=args.split,
                              split_seed=args.split_seed, data_tag=file_sha256(args.data))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for (mode, transfer, th), hist in histories.items():
        write_history_csv(hist, out / f"history_{mode}_{transfer}_{th:g}mm.csv")
    summary = out / "summary.csv"
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(P.SWEEP_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in P.SWEEP_COLUMNS])
    write_provenance(summary, "sweep", args)
    plotting.render_sweep_png(rows, out / "summary.png")
    print(f"{'mode':<14}{'transfer':<9}{'mm':>5}{'rows':>6}{'perf':>14}{'epochs':>9}  {'stop':<18}{'test_rms':>12}")
    for r in rows:
        if r["error"]:
            print(f"{r['mode']:<14}{r['transfer']:<9}{r['thickness']:>5g}  FAILED {r['error']}")
            continue
        print(f"{r['mode']:<14}{r['transfer']:<9}{r['thickness']:>5g}{r['rows']:>6}"
              f"{r['final_performance']:>14.6g}{r['epochs']:>9}  {r['stop_reason']:<18}{r['test_rms']:>12.4g}")
    return 0


def cmd_evaluate(args) -> int:
    bundle = load_model(args.model, D.load_schema(args.schema) if args.schema else None)
    ds = _load_dataset(args.data, bundle.schema)
    report = M.evaluate(bundle, ds)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    M.write_report_csv(report, out / "report.csv")
    M.write_predictions_csv(report, bundle.schema.output_names, out / "predictions.csv")
    write_provenance(out / "report.csv", "evaluate", args,
                     {"model_sha256": file_sha256(args.model), "data_sha256": file_sha256(args.data)})
    if not args.no_figures:
        plotting.render_parity_png(report, bundle.schema.output_names, out / "parity.png")
    print(report.table())
    for c in report.columns:
        for key, msg in c.errors.items():
            print(f"warning: {c.name} {key}: {msg}", file=sys.stderr)
    return 0


def _parse_assignments(text: str, names: list[str]) -> np.ndarray:
    vals = {}
    for part in text.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise ConfigurationError(f"expected NAME=VALUE, got {part!r}")
        k, v = part.split("=", 1)
        try:
            vals[k.strip()] = float(v)
        except ValueError:
            raise ConfigurationError(f"cannot parse value for {k.strip()!r}: {v!r}") from None
    missing = [n for n in names if n not in vals]
    if missing:
        raise ConfigurationError(f"missing inputs: {', '.join(missing)}")
    return np.array([[vals[n] for n in names]])


def cmd_predict(args) -> int:
    bundle = load_model(args.model)
    names = bundle.schema.input_names
    if args.input:
        x = _parse_assignments(args.input, names)
    elif args.input_file:
        rows = []
        with open(args.input_file, newline="") as fh:
            reader = csv.DictReader(fh)
            for lineno, rec in enumerate(reader, 2):
                try:
                    rows.append([float(rec[n]) for n in names])
                except KeyError as exc:
                    raise SchemaError(f"{args.input_file}: missing column {exc.args[0]!r}") from None
                except (TypeError, ValueError):
                    raise ParseError(f"{args.input_file}: row {lineno} has an unparseable value") from None
        x = np.array(rows).reshape(-1, len(names))
    else:
        raise ConfigurationError("give --input or --input-file")
    pred = bundle.predict_physical(x)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(bundle.schema.output_names)
    for row in np.atleast_2d(pred):
        w.writerow([repr(float(v)) for v in row])
    return 0


def cmd_plot(args) -> int:
    hist = read_history_csv(args.history)
    if not len(hist):
        raise ConfigurationError(f"{args.history}: history is empty")
    stem = str(Path(args.history).with_suffix(""))
    svg = args.out or stem + ".svg"
    plotting.write_curve_svg(hist, svg, title=Path(args.history).stem)
    plotting.write_downsampled_csv(hist, args.csv_out or stem + ".downsampled.csv", args.points)
    if not args.no_figures:
        plotting.render_history_png(hist, args.png_out or stem + ".png", title=Path(args.history).stem)
    print(f"wrote {svg} ({len(hist)} points)")
    return 0


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    d = TrainConfig()
    p.add_argument("--learning-rate", type=float, default=d.learning_rate)
    p.add_argument("--momentum", type=float, default=d.momentum)
    p.add_argument("--performance-ratio", type=float, default=d.performance_ratio)
    p.add_argument("--goal", type=float, default=d.goal)
    p.add_argument("--max-epochs", type=int, default=d.max_epochs)
    p.add_argument("--min-grad", type=float, default=d.min_grad)
    p.add_argument("--log-every", type=int, default=d.log_every)
    p.add_argument("--seed", type=int, default=d.seed, help="weight initialization seed")
    p.add_argument("--hidden", type=int, default=10, help="hidden-layer neurons")
    p.add_argument("--split", type=_floats, default=list(P.DEFAULT_SPLIT),
                   help="train,test,validation sizes; used as exact counts when they sum to the row count, "
                        "otherwise as proportions")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--schema", help="schema override file")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="matbridge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("datagen", help="generate a surrogate dataset CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--sample-count", "--count", type=int, default=146)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=0.01)
    p.add_argument("--thicknesses", type=_floats, default=[t * 1000 for t in S.THICKNESS_GRID_M], help="mm")
    p.add_argument("--pressure-range", type=_floats, default=list(S.PRESSURE_RANGE_PA), help="Pa, lo,hi")
    p.set_defaults(func=cmd_datagen)
    subs["datagen"] = p

    p = sub.add_parser("train", help="train one network")
    p.add_argument("--data", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--history-out")
    p.add_argument("--transfer", choices=["tansig", "logsig"], default="tansig")
    p.add_argument("--thickness", type=float, help="train only on rows with this wall thickness (mm)")
    p.add_argument("--splits-out", help="directory for train/test/validation CSVs")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)
    subs["train"] = p

    p = sub.add_parser("sweep", help="train across transfer functions x thicknesses")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--transfers", type=_strings, default=["tansig", "logsig"])
    p.add_argument("--thicknesses", type=_floats, default=[15.0, 17.0, 19.0, 21.0], help="mm")
    p.add_argument("--mode", choices=[*P.MODES, "both"], default=P.PER_THICKNESS)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)
    subs["sweep"] = p

    p = sub.add_parser("evaluate", help="score a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--schema", help="expected schema; refuse models trained on a different one")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_evaluate)
    subs["evaluate"] = p

    p = sub.add_parser("predict", help="predict outputs for given inputs")
    p.add_argument("--model", required=True)
    p.add_argument("--input", help="NAME=VALUE,... for every input column")
    p.add_argument("--input-file", help="CSV with the model's input columns")
    p.set_defaults(func=cmd_predict)
    subs["predict"] = p

    p = sub.add_parser("plot", help="render a training history")
    p.add_argument("--history", required=True)
    p.add_argument("--out", help="SVG path")
    p.add_argument("--csv-out", help="downsampled history CSV path")
    p.add_argument("--png-out")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_plot)
    subs["plot"] = p

    for p in subs.values():
        p.add_argument("--config", help="key=value file; explicit flags win")
    return parser, subs


def _apply_config(sub: argparse.ArgumentParser, path) -> None:
    values = read_config_file(path)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise ConfigurationError(f"{path}: unknown key {key!r}")
        try:
            defaults[key] = action.type(raw) if action.type else raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise ConfigurationError(f"{path}: bad value for {key!r}: {exc}") from None
    sub.set_defaults(**defaults)


def main(argv=None) -> int:
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        if args.config:
            _apply_config(subs[args.command], args.config)
            args = parser.parse_args(argv)
        return args.func(args)
    except MatbridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
