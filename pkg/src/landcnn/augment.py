"""Geometric preprocessing: bilinear resize and the augmentation pool
(rotation, flips, shear) used to balance class counts.

All resampling is bilinear over half-pixel-centered coordinates with
border pixels filled by edge replication. Every augmented item draws its
source pick and transform from an independent generator seeded by
(global seed, class id, item counter), so results do not depend on
execution order.
"""
from __future__ import annotations

import numpy as np

from .data import DataError, Dataset, LabeledImage
from .tensor import Tensor

ROTATE_MAX_DEG = 30.0
SHEAR_MAX = 0.2


def _bilinear_sample(arr, ys, xs):
    """Sample (H,W,C) at fractional coordinates; out-of-range coordinates
    clamp to the border (edge replication)."""
    h, w = arr.shape[:2]
    ys = np.clip(ys, 0.0, h - 1.0)
    xs = np.clip(xs, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0).astype(arr.dtype)[..., np.newaxis]
    wx = (xs - x0).astype(arr.dtype)[..., np.newaxis]
    top = arr[y0, x0] * (1 - wx) + arr[y0, x1] * wx
    bot = arr[y1, x0] * (1 - wx) + arr[y1, x1] * wx
    return top * (1 - wy) + bot * wy


def resize_pixels(arr, out_h, out_w):
    """Bilinear stretch (no aspect-ratio preservation) to out_h x out_w."""
    h, w = arr.shape[:2]
    if (h, w) == (out_h, out_w):
        return arr.copy()
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    grid_y, grid_x = np.meshgrid(ys, xs, indexing="ij")
    return np.clip(_bilinear_sample(arr, grid_y, grid_x), 0.0, 1.0)


def resize(item: LabeledImage, out_h, out_w) -> LabeledImage:
    return LabeledImage(Tensor.wrap(resize_pixels(item.pixels.data, out_h, out_w)),
                        item.label_id, item.origin)


def resize_dataset(ds: Dataset, out_h, out_w) -> Dataset:
    return Dataset([resize(item, out_h, out_w) for item in ds.items], ds.encoder)


def _warp(arr, inverse_map):
    """Resample arr through an output->source coordinate map."""
    h, w = arr.shape[:2]
    grid_y, grid_x = np.meshgrid(np.arange(h, dtype=np.float64),
                                 np.arange(w, dtype=np.float64), indexing="ij")
    src_y, src_x = inverse_map(grid_y, grid_x)
    return np.clip(_bilinear_sample(arr, src_y, src_x), 0.0, 1.0)


def rotate(arr, degrees):
    theta = np.deg2rad(degrees)
    cy, cx = (arr.shape[0] - 1) / 2.0, (arr.shape[1] - 1) / 2.0
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    def inverse_map(y, x):
        dy, dx = y - cy, x - cx
        return cy + dy * cos_t - dx * sin_t, cx + dy * sin_t + dx * cos_t

    return _warp(arr, inverse_map)


def hflip(arr):
    return np.ascontiguousarray(arr[:, ::-1])


def vflip(arr):
    return np.ascontiguousarray(arr[::-1])


def shear(arr, lam):
    """Horizontal shear about the image center: column offset lam per row."""
    cy, cx = (arr.shape[0] - 1) / 2.0, (arr.shape[1] - 1) / 2.0

    def inverse_map(y, x):
        return y, x - lam * (y - cy)

    return _warp(arr, inverse_map)


def random_transform(arr, rng):
    """Apply one transform drawn from the augmentation pool; returns the
    new pixels and a descriptor string."""
    kind = int(rng.integers(4))
    if kind == 0:
        deg = float(rng.uniform(-ROTATE_MAX_DEG, ROTATE_MAX_DEG))
        return rotate(arr, deg), f"rotate:{deg:.2f}deg"
    if kind == 1:
        return hflip(arr), "hflip"
    if kind == 2:
        return vflip(arr), "vflip"
    lam = float(rng.uniform(-SHEAR_MAX, SHEAR_MAX))
    return shear(arr, lam), f"shear:{lam:.3f}"


def augment_to_count(ds: Dataset, target_per_class, seed) -> Dataset:
    """Grow every class to exactly target_per_class items by transforming
    seeded-random source images. Originals are kept untouched; classes
    already at the target pass through unchanged. Never down-samples."""
    groups = ds.class_indices()
    for label_id, group in enumerate(groups):
        if not group:
            raise DataError(
                f"class {ds.encoder.decode(label_id)!r} is empty")
        if len(group) > target_per_class:
            raise DataError(
                f"class {ds.encoder.decode(label_id)!r} has {len(group)} items, "
                f"above the target {target_per_class}; refusing to down-sample")
    items = list(ds.items)
    for label_id, group in enumerate(groups):
        for j in range(target_per_class - len(group)):
            rng = np.random.default_rng(
                np.random.SeedSequence((int(seed), label_id, j)))
            src = group[int(rng.integers(len(group)))]
            pixels, descriptor = random_transform(ds.items[src].pixels.data, rng)
            items.append(LabeledImage(Tensor.wrap(pixels), label_id,
                                      ("augmented", src, descriptor)))
    return Dataset(items, ds.encoder)
