"""Experiment grid runner: one shared data preparation, then every
architecture x optimizer x learning-rate cell trained on the same split,
with per-cell artifacts and aggregate result tables written to disk.

Cell failures (e.g. a diverging run) are recorded in the results table
and do not stop the remaining cells.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .architectures import (build_mini_inception, build_mini_resnet,
                            build_cnn, standard_inception_branches)
from .augment import augment_to_count, resize_dataset
from .checkpoint import save_checkpoint
from .data import SplitSpec, load_dataset, stratified_split
from .metrics import accuracy, classification_report, confusion_matrix
from .synth import synth_dataset
from .training import TrainConfig, evaluate, train

ARCHITECTURES = ("cnn", "mini-resnet", "mini-inception")
OPTIMIZER_NAMES = ("adam", "sgd", "rmsprop")


def build_architecture(name, input_shape, num_classes, rng):
    """Build a network by its CLI selector name at the given input shape."""
    if name == "cnn":
        return build_cnn(input_shape, num_classes, rng)
    if name == "mini-resnet":
        return build_mini_resnet((16, 32), input_shape, num_classes, rng)
    if name == "mini-inception":
        blocks = [standard_inception_branches(8, 8, 8)]
        return build_mini_inception(blocks, input_shape, num_classes, rng)
    raise ValueError(f"unknown architecture {name!r}; choose from {ARCHITECTURES}")


@dataclass
class DataSource:
    """Either a directory corpus (root) or a synthetic spec (n, side, seed)."""
    root: str | None = None
    synth: tuple | None = None
    image_size: int | None = None  # resize target for directory corpora

    @classmethod
    def from_config(cls, cfg, image_size=None):
        if "root" in cfg:
            return cls(root=cfg["root"], image_size=image_size)
        if "synth" in cfg:
            s = cfg["synth"]
            return cls(synth=(int(s["n"]), int(s["side"]), int(s["seed"])))
        raise ValueError("data config needs a 'root' or 'synth' key")

    def load(self):
        if self.synth is not None:
            return synth_dataset(*self.synth)
        ds = load_dataset(self.root)
        size = 224 if self.image_size is None else self.image_size
        return resize_dataset(ds, size, size)


@dataclass
class ExperimentGrid:
    architectures: list
    optimizers: list
    learning_rates: list
    data: DataSource
    epochs: int = 100
    batch_size: int = 64
    patience: int | None = 10
    seed: int = 0
    augment_to: int | None = 3500
    split: SplitSpec = field(default_factory=SplitSpec)
    split_first: bool = False

    def __post_init__(self):
        for axis, valid, name in ((self.architectures, ARCHITECTURES, "architecture"),
                                  (self.optimizers, OPTIMIZER_NAMES, "optimizer")):
            if not axis:
                raise ValueError(f"{name} axis is empty")
            for entry in axis:
                if entry not in valid:
                    raise ValueError(
                        f"unknown {name} {entry!r}; choose from {valid}")
        if not self.learning_rates:
            raise ValueError("learning-rate axis is empty")
        if any(lr <= 0 for lr in self.learning_rates):
            raise ValueError(f"learning rates must be positive: {self.learning_rates}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience is not None and self.patience < 1:
            raise ValueError(f"patience must be >= 1 or None, got {self.patience}")
        if self.augment_to is not None and self.augment_to < 1:
            raise ValueError(f"augment_to must be >= 1 or None, got {self.augment_to}")

    def cells(self):
        return [(a, o, lr) for a in self.architectures
                for o in self.optimizers for lr in self.learning_rates]

    @classmethod
    def from_config(cls, cfg):
        known = {"architectures", "optimizers", "learning_rates", "epochs",
                 "batch_size", "patience", "seed", "data", "augment_to",
                 "split", "split_first", "image_size"}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for required in ("architectures", "optimizers", "learning_rates", "data"):
            if required not in cfg:
                raise ValueError(f"config is missing the {required!r} key")
        split = cfg.get("split", [0.6, 0.3, 0.1])
        patience = cfg.get("patience", 10)
        return cls(
            architectures=list(cfg["architectures"]),
            optimizers=list(cfg["optimizers"]),
            learning_rates=[float(lr) for lr in cfg["learning_rates"]],
            data=DataSource.from_config(cfg["data"], cfg.get("image_size")),
            epochs=int(cfg.get("epochs", 100)),
            batch_size=int(cfg.get("batch_size", 64)),
            patience=None if patience in (None, 0) else int(patience),
            seed=int(cfg.get("seed", 0)),
            augment_to=cfg.get("augment_to", 3500),
            split=SplitSpec(*[float(f) for f in split]),
            split_first=bool(cfg.get("split_first", False)),
        )


@dataclass
class ResultRow:
    architecture: str
    optimizer: str
    lr: float
    accuracy_pct: float | None
    loss: float | None
    epochs_run: int
    seconds: float
    error: str | None = None

    @property
    def failed(self):
        return self.error is not None


def prepare_data(source: DataSource, augment_to, split: SplitSpec,
                 split_first, seed):
    """Shared preprocessing for every grid cell: load, balance classes by
    augmentation, stratified split. With split_first the originals are
    split first and only the training split is augmented (leakage-free
    variant); otherwise augmentation precedes the split."""
    aug_seed, split_seed = (int(s) for s in
                            np.random.SeedSequence(int(seed)).generate_state(2))
    ds = source.load()
    if augment_to is None:
        return stratified_split(ds, split, split_seed)
    if split_first:
        train_set, test_set, val_set = stratified_split(ds, split, split_seed)
        target = int(round(augment_to * split.train))
        return augment_to_count(train_set, target, aug_seed), test_set, val_set
    ds = augment_to_count(ds, augment_to, aug_seed)
    return stratified_split(ds, split, split_seed)


def run_cell(arch, opt, lr, sets, grid: ExperimentGrid, cell_seed, cell_dir):
    """Train one grid cell and write its artifacts; never raises on a
    training failure, recording it in the row instead."""
    train_set, test_set, val_set = sets
    cell_dir = Path(cell_dir)
    cell_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    epochs_run = 0
    try:
        input_shape = train_set.items[0].pixels.shape
        rng = np.random.default_rng(np.random.SeedSequence((cell_seed, 0)))
        net = build_architecture(arch, input_shape, train_set.num_classes, rng)
        cfg = TrainConfig(epochs=grid.epochs, batch_size=grid.batch_size,
                          optimizer=opt, lr=lr, patience=grid.patience,
                          seed=cell_seed)
        net, history = train(net, train_set, val_set, cfg)
        epochs_run = len(history)
        test_loss, preds = evaluate(net, test_set)
        y_true = [item.label_id for item in test_set.items]
        cm = confusion_matrix(y_true, preds, test_set.num_classes,
                              test_set.encoder.classes)
        row = ResultRow(arch, opt, lr, accuracy(cm), test_loss, epochs_run,
                        time.perf_counter() - started)
        (cell_dir / "history.csv").write_text(history.to_csv())
        (cell_dir / "confusion.csv").write_text(cm.to_csv())
        (cell_dir / "report.csv").write_text(classification_report(cm).to_csv())
        save_checkpoint(net, cell_dir / "model.ckpt")
        return row
    except Exception as err:  # noqa: BLE001 - cell isolation by design
        return ResultRow(arch, opt, lr, None, None, epochs_run,
                         time.perf_counter() - started,
                         error=f"{type(err).__name__}: {err}")


def cell_dirname(arch, opt, lr):
    return f"{arch}_{opt}_{lr!r}"


def run_grid(grid: ExperimentGrid, out_dir):
    """Execute every cell on one shared prepared dataset; returns the rows
    (failures marked, all cells present)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sets = prepare_data(grid.data, grid.augment_to, grid.split,
                        grid.split_first, grid.seed)
    cells = grid.cells()
    cell_seeds = [int(s) for s in np.random.SeedSequence(
        (int(grid.seed), 1)).generate_state(len(cells))]
    rows = []
    for (arch, opt, lr), cell_seed in zip(cells, cell_seeds):
        cell_dir = out_dir / "cells" / cell_dirname(arch, opt, lr)
        rows.append(run_cell(arch, opt, lr, sets, grid, cell_seed, cell_dir))
    emit_report(rows, out_dir)
    return rows


def _fmt(value):
    return "failed" if value is None else repr(value)


def best_row(rows):
    """Highest test accuracy among successful rows; ties break to the
    lower test loss."""
    ok = [r for r in rows if not r.failed]
    if not ok:
        return None
    return min(ok, key=lambda r: (-r.accuracy_pct, r.loss))


def emit_report(rows, out_dir):
    """Write results.csv, the aligned results.md table and best.txt."""
    if not rows:
        raise ValueError("no result rows to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    lines = ["architecture,optimizer,lr,accuracy_pct,loss,epochs_run,seconds"]
    for r in rows:
        lines.append(f"{r.architecture},{r.optimizer},{r.lr!r},"
                     f"{_fmt(r.accuracy_pct)},{_fmt(r.loss)},"
                     f"{r.epochs_run},{r.seconds!r}")
    (out_dir / "results.csv").write_text("\n".join(lines) + "\n")

    md = ["| Model | Optimizer | Learning rate | Accuracy % | Loss | Epochs |",
          "|---|---|---|---|---|---|"]
    for r in rows:
        if r.failed:
            md.append(f"| {r.architecture} | {r.optimizer} | {r.lr!r} "
                      f"| failed | failed | {r.epochs_run} |")
        else:
            md.append(f"| {r.architecture} | {r.optimizer} | {r.lr!r} "
                      f"| {r.accuracy_pct:.1f} | {r.loss:.4f} | {r.epochs_run} |")
    (out_dir / "results.md").write_text("\n".join(md) + "\n")

    best = best_row(rows)
    if best is None:
        text = "no successful cells\n"
    else:
        text = (f"architecture={best.architecture}\n"
                f"optimizer={best.optimizer}\n"
                f"lr={best.lr!r}\n"
                f"accuracy_pct={best.accuracy_pct!r}\n"
                f"loss={best.loss!r}\n"
                f"epochs_run={best.epochs_run}\n")
    (out_dir / "best.txt").write_text(text)
