"""Training protocol: epoch loop with per-batch mean gradients, per-epoch
validation, early stopping on validation loss with best-weight
restoration, and forward-only evaluation.

Everything is deterministic under the config seed: batch shuffling uses
a generator derived from (seed, epoch index), forward/backward work is
single-threaded and the kernels have fixed reduction order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, batches
from .optimizers import make_optimizer
from .tensor import Tensor


class TrainingDiverged(RuntimeError):
    """Training hit a non-finite loss; message carries epoch and batch."""


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 64
    optimizer: str = "rmsprop"
    lr: float = 0.0001
    patience: int | None = 10  # None disables early stopping
    seed: int = 0
    min_delta: float = 1e-6  # val-loss must improve by more than this

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience is not None and self.patience < 1:
            raise ValueError(f"patience must be >= 1 or None, got {self.patience}")


@dataclass
class EpochRecord:
    epoch: int  # 1-based
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)
    stopped_early: bool = False
    best_epoch: int = 0  # 1-based epoch with the minimum validation loss

    def __len__(self):
        return len(self.records)

    def to_csv(self):
        lines = ["epoch,train_loss,train_acc,val_loss,val_acc"]
        for r in self.records:
            lines.append(f"{r.epoch},{r.train_loss!r},{r.train_acc!r},"
                         f"{r.val_loss!r},{r.val_acc!r}")
        return "\n".join(lines) + "\n"


def evaluate(net, ds: Dataset):
    """Forward-only pass: (mean cross-entropy loss, predicted ids).
    Prediction is the argmax of the class probabilities; exact ties go to
    the lowest class id. No parameter is mutated."""
    if len(ds) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    losses = np.empty(len(ds), dtype=np.float64)
    preds = np.empty(len(ds), dtype=np.int64)
    for i, item in enumerate(ds.items):
        loss, probs = net.forward(item.pixels, item.label_id)
        losses[i] = loss
        preds[i] = int(np.argmax(probs.data))
    return float(losses.mean()), preds


def _accumulate_batch(net, batch):
    """Forward/backward every sample; leaves the mean gradient in each
    layer's grad slots. Returns (summed loss, correct count)."""
    slots = net.param_slots()
    acc = None
    loss_sum = 0.0
    correct = 0
    for item in batch:
        loss, probs = net.forward(item.pixels, item.label_id)
        if not math.isfinite(loss):
            raise _NonFinite(loss)
        net.backward()
        loss_sum += loss
        if int(np.argmax(probs.data)) == item.label_id:
            correct += 1
        if acc is None:
            acc = {name: layer.grads[key].data.copy()
                   for name, layer, key in slots}
        else:
            for name, layer, key in slots:
                acc[name] += layer.grads[key].data
    n = len(batch)
    for name, layer, key in slots:
        layer.grads[key] = Tensor.wrap(acc[name] / n)
    return loss_sum, correct


class _NonFinite(Exception):
    def __init__(self, loss):
        self.loss = loss


def train(net, train_set: Dataset, val_set: Dataset, cfg: TrainConfig):
    """Run the full protocol; returns (net, history) with the best-epoch
    weights restored into net."""
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("training and validation sets must be non-empty")
    if net.num_classes != train_set.num_classes:
        raise ValueError(
            f"network has {net.num_classes} outputs but the dataset "
            f"encodes {train_set.num_classes} classes")
    optimizer = make_optimizer(cfg.optimizer, cfg.lr)
    history = TrainHistory()
    best_val = math.inf
    best_state = None
    bad_epochs = 0

    for epoch in range(1, cfg.epochs + 1):
        epoch_loss = 0.0
        epoch_correct = 0
        epoch_batches = batches(train_set, cfg.batch_size, shuffle=True,
                                seed=cfg.seed, epoch=epoch)
        for batch_i, batch in enumerate(epoch_batches):
            try:
                loss_sum, correct = _accumulate_batch(net, batch)
            except _NonFinite as nf:
                raise TrainingDiverged(
                    f"non-finite training loss {nf.loss} at epoch {epoch}, "
                    f"batch {batch_i}") from None
            optimizer.step(net)
            epoch_loss += loss_sum
            epoch_correct += correct

        val_loss, val_preds = evaluate(net, val_set)
        if not math.isfinite(val_loss):
            raise TrainingDiverged(
                f"non-finite validation loss {val_loss} at epoch {epoch}")
        val_true = np.array([item.label_id for item in val_set.items])
        history.records.append(EpochRecord(
            epoch=epoch,
            train_loss=epoch_loss / len(train_set),
            train_acc=epoch_correct / len(train_set),
            val_loss=val_loss,
            val_acc=float((val_preds == val_true).mean())))

        if val_loss < best_val - cfg.min_delta:
            best_val = val_loss
            best_state = net.state_dict()
            history.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if cfg.patience is not None and bad_epochs >= cfg.patience:
                history.stopped_early = True
                break

    if best_state is not None:
        net.load_state(best_state)
    return net, history
