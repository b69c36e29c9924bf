"""Labeled-image dataset handling: directory corpus loading, label
encoding, stratified splitting and batch iteration.

A corpus is a directory with one subdirectory per label holding PNG/JPEG
files. Label ids are assigned 0..K-1 in lexicographic name order and the
item order is deterministic (label name, then file name).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tensor import Tensor

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}


class DataError(Exception):
    """Raised for unreadable, empty or structurally invalid corpora."""


class LabelEncoder:
    """Bijective label-name <-> integer-id association, ids in
    lexicographic name order."""

    def __init__(self, names):
        names = sorted(names)
        if len(set(names)) != len(names):
            raise DataError(f"duplicate label names: {names}")
        self.classes = names
        self._ids = {name: i for i, name in enumerate(names)}

    def encode(self, name):
        try:
            return self._ids[name]
        except KeyError:
            raise DataError(f"unknown label {name!r}") from None

    def decode(self, label_id):
        if not 0 <= label_id < len(self.classes):
            raise DataError(f"label id {label_id} out of range")
        return self.classes[label_id]

    def __len__(self):
        return len(self.classes)

    def __eq__(self, other):
        return isinstance(other, LabelEncoder) and self.classes == other.classes


@dataclass
class LabeledImage:
    """Pixels are (H, W, 3) in [0, 1]. origin is ("original", ident) or
    ("augmented", source_index, transform_descriptor)."""
    pixels: Tensor
    label_id: int
    origin: tuple = ("original", "")


@dataclass
class Dataset:
    items: list
    encoder: LabelEncoder

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def num_classes(self):
        return len(self.encoder)

    def class_indices(self):
        """Item indices grouped by label id, in dataset order."""
        groups = [[] for _ in range(len(self.encoder))]
        for i, item in enumerate(self.items):
            groups[item.label_id].append(i)
        return groups

    def class_counts(self):
        return [len(g) for g in self.class_indices()]

    def subset(self, indices):
        return Dataset([self.items[i] for i in indices], self.encoder)


@dataclass
class SplitSpec:
    train: float = 0.6
    test: float = 0.3
    val: float = 0.1

    def __post_init__(self):
        fractions = (self.train, self.test, self.val)
        if any(f <= 0 for f in fractions):
            raise ValueError(f"split fractions must be positive, got {fractions}")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {fractions}")


def _decode_image(path: Path) -> Tensor:
    from PIL import Image

    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")  # grayscale broadcasts to 3 channels
            arr = np.asarray(rgb, dtype=np.float32) / 255.0
    except Exception as err:
        raise DataError(f"cannot decode image {path}: {err}") from err
    return Tensor.wrap(arr)


def load_dataset(root) -> Dataset:
    """Load a directory-per-label corpus into memory."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if len(class_dirs) < 2:
        raise DataError(
            f"dataset root {root} must contain at least two class "
            f"directories, found {len(class_dirs)}")
    encoder = LabelEncoder([p.name for p in class_dirs])
    items = []
    for class_dir in class_dirs:
        label_id = encoder.encode(class_dir.name)
        files = sorted(p for p in class_dir.iterdir()
                       if p.suffix.lower() in IMAGE_EXTENSIONS)
        if not files:
            raise DataError(f"class directory {class_dir} holds no images")
        for path in files:
            items.append(LabeledImage(_decode_image(path), label_id,
                                      ("original", str(path.relative_to(root)))))
    return Dataset(items, encoder)


def stratified_split(ds: Dataset, spec: SplitSpec, seed):
    """Per class: seeded shuffle, then contiguous cuts at round(n*train)
    and round(n*(train+test)). Returns (train, test, val) datasets."""
    groups = ds.class_indices()
    picks = ([], [], [])
    for label_id, group in enumerate(groups):
        n = len(group)
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), label_id)))
        order = rng.permutation(n)
        cut1 = int(round(n * spec.train))
        cut2 = int(round(n * (spec.train + spec.test)))
        parts = (order[:cut1], order[cut1:cut2], order[cut2:])
        for bucket_i, part in enumerate(parts):
            if len(part) == 0:
                raise DataError(
                    f"split {spec} leaves class "
                    f"{ds.encoder.decode(label_id)!r} empty in "
                    f"{('train', 'test', 'val')[bucket_i]}")
            picks[bucket_i].extend(group[i] for i in part)
    return tuple(ds.subset(indices) for indices in picks)


def batches(ds: Dataset, batch_size, shuffle=True, seed=0, epoch=0):
    """Contiguous batches over a seeded whole-dataset permutation (a fresh
    one per epoch index); the final partial batch is kept."""
    if len(ds) == 0:
        raise DataError("cannot batch an empty dataset")
    idx = np.arange(len(ds))
    if shuffle:
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), int(epoch))))
        idx = rng.permutation(idx)
    return [[ds.items[i] for i in idx[k:k + batch_size]]
            for k in range(0, len(idx), batch_size)]
