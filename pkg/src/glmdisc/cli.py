"""Command-line interface: ``glmdisc <command> [flags]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .data import SplitSpec, load_csv, load_schema, save_csv, save_schema
from .errors import GlmdiscError, UnknownLevel
from .evaluation import METHODS, SCENARIOS, SimSpec, fit_method, run_benchmark, simulate
from .scorecard import ModelFormatError, load_model, save_model, scorecard_rows
from .trainer import GlmdiscModel, TrainConfig, describe_quantizer, emit_trace

logger = logging.getLogger("glmdisc")

_DEFAULTS = TrainConfig()


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {v}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {v}")
    return v


def _fraction(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {v}")
    return v


def _m_max(text):
    parts = text.split(",")
    vals = tuple(_positive_int(p) for p in parts)
    return vals[0] if len(vals) == 1 else vals


def _methods(text):
    names = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in METHODS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return names


@contextmanager
def _atomic(path):
    """Yield a temporary path that replaces ``path`` only on success."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _train_config(args) -> TrainConfig:
    return TrainConfig(m_max=args.m_max, epochs=args.epochs, learning_rate=args.lr,
                       batch_size=args.batch, seed=args.seed)


def cmd_fit(args) -> int:
    schema = load_schema(args.schema)
    ds = load_csv(args.data, schema)
    started = time.perf_counter()
    cfg = _train_config(args)
    if args.method == "glmdisc" and isinstance(cfg.m_max, tuple) and len(cfg.m_max) != ds.d:
        raise GlmdiscError(f"--m-max lists {len(cfg.m_max)} values for {ds.d} features")
    model = fit_method(args.method, ds, cfg)
    elapsed = time.perf_counter() - started
    with _atomic(args.out) as tmp:
        save_model(model, tmp)
    print(f"method:    {args.method}")
    print(f"train BIC: {model.bic:.4f}")
    if hasattr(model, "m_hat"):
        for name, m in zip(ds.schema.feature_names, model.m_hat):
            print(f"  m_hat[{name}] = {m}")
    if isinstance(model, GlmdiscModel):
        print(f"best epoch: {model.best_epoch} of {cfg.epochs}")
    print(f"elapsed:   {elapsed:.2f}s")
    print(f"model written to {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    try:
        ds = load_csv(args.data, model.schema, require_target=False, strict_levels=True)
    except UnknownLevel as exc:
        raise GlmdiscError(f"unknown level at data row {exc.row} (feature {exc.feature!r}): {exc}") from None
    proba = model.predict_proba(ds)
    with _atomic(args.out) as tmp:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "probability"])
            for i, p in enumerate(proba):
                w.writerow([i, repr(float(p))])
    print(f"{ds.n} predictions written to {args.out}")
    return 0


def cmd_export(args) -> int:
    model = load_model(args.model)
    rows = scorecard_rows(model)
    with _atomic(args.out) as tmp:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=["feature", "bin", "coefficient"], lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({**r, "coefficient": repr(r["coefficient"])})
    print(f"scorecard ({len(rows)} rows) written to {args.out}")
    return 0


def _schema_path(out: Path) -> Path:
    return out.with_name(out.stem + ".schema.json")


def cmd_simulate(args) -> int:
    ds = simulate(SimSpec(args.n, args.scenario, args.seed))
    out = Path(args.out)
    schema_out = _schema_path(out)
    with _atomic(out) as tmp, _atomic(schema_out) as tmp_schema:
        save_csv(ds, tmp)
        save_schema(ds.schema, tmp_schema)
    print(f"{ds.n} rows written to {out}; schema in {schema_out}")
    return 0


def cmd_benchmark(args) -> int:
    schema = load_schema(args.schema)
    ds = load_csv(args.data, schema)
    cfg = TrainConfig(seed=args.seed)
    report = run_benchmark(ds, args.methods, SplitSpec(args.test_frac, args.seed),
                           bootstrap_B=args.bootstrap, train_cfg=cfg)
    out = Path(args.out)
    text_out = out.with_suffix(".txt")
    with _atomic(out) as tmp, _atomic(text_out) as tmp_text:
        Path(tmp).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
        Path(tmp_text).write_text(report.to_text() + "\n", encoding="utf-8")
    print(report.to_text())
    print(f"report written to {out} and {text_out}")
    return 0


TRACE_HEADER = ["epoch", "bic", "feature", "m_hat", "cutpoints_or_groups", "is_best"]


def cmd_trace(args) -> int:
    model = load_model(args.model_history)
    if not isinstance(model, GlmdiscModel) or not model.history:
        raise GlmdiscError(f"{args.model_history} carries no training history")
    schema = model.schema
    records = emit_trace(model)
    with _atomic(args.out) as tmp:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            for rec in records:
                for j, name in enumerate(schema.feature_names):
                    labels = schema.categorical_levels.get(name)
                    w.writerow([rec.epoch, repr(float(rec.bic)), name, rec.m_hat[j],
                                describe_quantizer(rec.quantizers[j], labels), int(rec.is_best)])
    print(f"{len(records)} epochs traced to {args.out} (best epoch {model.best_epoch})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glmdisc",
        description="Learn interpretable quantizations jointly with a logistic regression scorecard.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and write a scorecard model file")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--method", choices=METHODS, default="glmdisc")
    p.add_argument("--m-max", type=_m_max, default=_DEFAULTS.m_max,
                   help="starting level count, one value or one per feature (comma-separated)")
    p.add_argument("--epochs", type=_positive_int, default=_DEFAULTS.epochs)
    p.add_argument("--lr", type=_positive_float, default=_DEFAULTS.learning_rate)
    p.add_argument("--batch", type=_positive_int, default=_DEFAULTS.batch_size)
    p.add_argument("--seed", type=_nonneg_int, default=_DEFAULTS.seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="score a CSV with a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("export-scorecard", help="write the bins/groups and coefficients as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("simulate", help="generate the simulated two-feature data")
    p.add_argument("--scenario", choices=SCENARIOS, default="A")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="compare methods by test-set Gini")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--methods", type=_methods, default=list(METHODS))
    p.add_argument("--test-frac", type=_fraction, default=0.3)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--bootstrap", type=_nonneg_int, default=100,
                   help="bootstrap resamples of the test set for the Gini spread")
    p.add_argument("--out", required=True, help="JSON report; a .txt table is written alongside")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("trace", help="dump per-epoch BIC and quantizations as CSV")
    p.add_argument("--model-history", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GlmdiscError, ModelFormatError, ValueError, OSError) as exc:
        print(f"glmdisc {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
