"""Command-line front door.

Subcommands:
  train   one training job (directory corpus or synthetic data)
  grid    the full architecture x optimizer x learning-rate sweep
  eval    evaluate a checkpoint on a directory corpus
  report  re-render results.md and best.txt from a results.csv

Exit codes: 0 success, 1 usage error, 2 data error, 3 cell failure(s).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .architectures import BuildError
from .checkpoint import CheckpointError, load_checkpoint
from .data import DataError, load_dataset
from .grid import (ARCHITECTURES, OPTIMIZER_NAMES, DataSource, ExperimentGrid,
                   ResultRow, emit_report, run_grid)
from .metrics import accuracy, classification_report, confusion_matrix
from .training import evaluate


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_synth(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--synth expects n,side,seed, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise UsageError(f"--synth expects integers, got {text!r}") from None


def build_parser():
    parser = _Parser(prog="landcnn", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="command")

    train_p = sub.add_parser("train", help="run a single training job")
    src = train_p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="directory with one subdirectory per label")
    src.add_argument("--synth", help="synthetic corpus as n,side,seed")
    train_p.add_argument("--arch", default="cnn", choices=ARCHITECTURES)
    train_p.add_argument("--opt", default="rmsprop", choices=OPTIMIZER_NAMES)
    train_p.add_argument("--lr", type=float, default=0.0001)
    train_p.add_argument("--epochs", type=int, default=100)
    train_p.add_argument("--batch", type=int, default=64)
    train_p.add_argument("--patience", type=int, default=10,
                         help="epochs without val-loss improvement; 0 disables")
    train_p.add_argument("--seed", type=int, default=0)
    train_p.add_argument("--out", required=True)
    train_p.add_argument("--augment-to", type=int, default=None,
                         help="balance every class to this count before splitting")
    train_p.add_argument("--split-first", action="store_true",
                         help="split originals first, then augment only the "
                              "training split (leakage-free variant)")
    train_p.add_argument("--image-size", type=int, default=224,
                         help="resize target for directory corpora")

    grid_p = sub.add_parser("grid", help="run the experiment grid")
    grid_p.add_argument("--config", required=True, help="JSON grid config")
    grid_p.add_argument("--out", required=True)

    eval_p = sub.add_parser("eval", help="evaluate a checkpoint")
    eval_p.add_argument("--checkpoint", required=True)
    eval_p.add_argument("--data", required=True)

    report_p = sub.add_parser("report", help="re-render reports from results.csv")
    report_p.add_argument("--in", dest="in_dir", required=True)
    return parser


def _cmd_train(args):
    from .grid import prepare_data, run_cell

    if args.synth is not None:
        source = DataSource(synth=_parse_synth(args.synth))
    else:
        source = DataSource(root=args.data, image_size=args.image_size)
    grid = ExperimentGrid(
        architectures=[args.arch], optimizers=[args.opt],
        learning_rates=[args.lr], data=source, epochs=args.epochs,
        batch_size=args.batch,
        patience=None if args.patience == 0 else args.patience,
        seed=args.seed, augment_to=args.augment_to,
        split_first=args.split_first)
    sets = prepare_data(source, grid.augment_to, grid.split,
                        grid.split_first, grid.seed)
    cell_seed = int(np.random.SeedSequence(
        (int(grid.seed), 1)).generate_state(1)[0])
    out_dir = Path(args.out)
    row = run_cell(args.arch, args.opt, args.lr, sets, grid, cell_seed, out_dir)
    emit_report([row], out_dir)
    if row.failed:
        print(f"training failed: {row.error}", file=sys.stderr)
        return 3
    print(f"{row.architecture} {row.optimizer} lr={row.lr!r}: "
          f"test accuracy {row.accuracy_pct:.1f}%, test loss {row.loss:.4f}, "
          f"{row.epochs_run} epochs, {row.seconds:.1f}s")
    print(f"artifacts written to {out_dir}")
    return 0


def _cmd_grid(args):
    config_path = Path(args.config)
    if not config_path.is_file():
        raise DataError(f"config file {config_path} does not exist")
    try:
        cfg = json.loads(config_path.read_text())
    except json.JSONDecodeError as err:
        raise UsageError(f"config file {config_path} is not valid JSON: {err}")
    try:
        grid = ExperimentGrid.from_config(cfg)
    except (ValueError, KeyError, TypeError) as err:
        raise UsageError(f"bad grid config: {err}")
    rows = run_grid(grid, args.out)
    failed = [r for r in rows if r.failed]
    for row in rows:
        state = (f"accuracy {row.accuracy_pct:.1f}% loss {row.loss:.4f}"
                 if not row.failed else f"FAILED ({row.error})")
        print(f"{row.architecture} {row.optimizer} lr={row.lr!r}: {state}")
    print(f"results written to {args.out}")
    if failed:
        print(f"{len(failed)} of {len(rows)} cells failed", file=sys.stderr)
        return 3
    return 0


def _cmd_eval(args):
    from .augment import resize_dataset

    net = load_checkpoint(args.checkpoint)
    ds = load_dataset(args.data)
    h, w, _ = net.input_shape
    ds = resize_dataset(ds, h, w)
    if ds.num_classes != net.num_classes:
        raise DataError(
            f"checkpoint predicts {net.num_classes} classes but the corpus "
            f"has {ds.num_classes}")
    loss, preds = evaluate(net, ds)
    y_true = [item.label_id for item in ds.items]
    cm = confusion_matrix(y_true, preds, ds.num_classes, ds.encoder.classes)
    print(f"items: {len(ds)}  loss: {loss:.4f}  accuracy: {accuracy(cm):.1f}%")
    print()
    print(classification_report(cm).format_text())
    return 0


def _parse_float_or_none(text):
    return None if text == "failed" else float(text)


def _cmd_report(args):
    in_dir = Path(args.in_dir)
    results = in_dir / "results.csv"
    if not results.is_file():
        raise DataError(f"{results} does not exist")
    lines = results.read_text().strip().split("\n")
    header = "architecture,optimizer,lr,accuracy_pct,loss,epochs_run,seconds"
    if not lines or lines[0] != header:
        raise DataError(f"{results} does not look like a results table")
    rows = []
    for line in lines[1:]:
        arch, opt, lr, acc, loss, epochs_run, seconds = line.split(",")
        acc_v = _parse_float_or_none(acc)
        rows.append(ResultRow(
            arch, opt, float(lr), acc_v, _parse_float_or_none(loss),
            int(epochs_run), float(seconds),
            error=None if acc_v is not None else "failed"))
    emit_report(rows, in_dir)
    print(f"re-rendered results.md and best.txt in {in_dir}")
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required (train, grid, eval, report)")
        handler = {"train": _cmd_train, "grid": _cmd_grid,
                   "eval": _cmd_eval, "report": _cmd_report}[args.command]
        return handler(args)
    except (DataError, CheckpointError, BuildError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (UsageError, ValueError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
