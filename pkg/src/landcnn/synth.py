"""Seeded synthetic texture corpus: four procedurally distinct classes
standing in for the desert/farmland/meadow/terrace imagery at desk scale.

Class signatures live in frequency content rather than mean color, so a
linear readout of mean brightness cannot separate them:

  desert   - smooth low-frequency ramp plus faint noise
  farmland - oriented periodic stripes (mid frequency)
  meadow   - isotropic band-limited noise
  terrace  - concentric step bands around a random center
"""
import numpy as np

from .data import Dataset, LabeledImage, LabelEncoder
from .tensor import Tensor

CLASS_NAMES = ["desert", "farmland", "meadow", "terrace"]
_NOISE = 0.02


def _grid(side):
    c = np.linspace(0.0, 1.0, side, endpoint=False)
    return np.meshgrid(c, c, indexing="ij")


def _desert(side, rng):
    y, x = _grid(side)
    phi = rng.uniform(0, 2 * np.pi)
    base = rng.uniform(0.35, 0.55)
    slope = rng.uniform(0.25, 0.45)
    return base + slope * ((x - 0.5) * np.cos(phi) + (y - 0.5) * np.sin(phi))


def _farmland(side, rng):
    y, x = _grid(side)
    theta = rng.uniform(0, np.pi)
    freq = rng.uniform(5.0, 9.0)
    phase = rng.uniform(0, 2 * np.pi)
    ridge = np.sin(2 * np.pi * freq * (x * np.cos(theta) + y * np.sin(theta)) + phase)
    return 0.5 + 0.22 * ridge


def _meadow(side, rng):
    white = rng.standard_normal((side, side))
    spectrum = np.fft.fft2(white)
    fy = np.fft.fftfreq(side)[:, np.newaxis]
    fx = np.fft.fftfreq(side)[np.newaxis, :]
    radius = np.sqrt(fy * fy + fx * fx)
    band = (radius >= 0.10) & (radius <= 0.30)
    field = np.fft.ifft2(spectrum * band).real
    std = field.std()
    if std > 0:
        field = field / std
    return 0.5 + 0.13 * field


def _terrace(side, rng):
    y, x = _grid(side)
    cy, cx = rng.uniform(0.2, 0.8, size=2)
    width = rng.uniform(0.08, 0.14)
    r = np.sqrt((y - cy) ** 2 + (x - cx) ** 2)
    return 0.35 + 0.3 * (np.floor(r / width) % 2)


_GENERATORS = {"desert": _desert, "farmland": _farmland,
               "meadow": _meadow, "terrace": _terrace}


def synth_image(name, side, rng):
    gray = _GENERATORS[name](side, rng)
    gray = gray + rng.normal(0.0, _NOISE, size=gray.shape)
    gains = rng.uniform(0.9, 1.1, size=3)
    rgb = gray[:, :, np.newaxis] * gains[np.newaxis, np.newaxis, :]
    return np.clip(rgb, 0.0, 1.0).astype(np.float32)


def synth_dataset(n_per_class, side, seed) -> Dataset:
    """Four-class corpus of n_per_class images each, side x side x 3,
    values in [0, 1]; fully reproducible under the seed."""
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    if side < 8:
        raise ValueError(f"side must be >= 8, got {side}")
    encoder = LabelEncoder(CLASS_NAMES)
    items = []
    for name in encoder.classes:
        label_id = encoder.encode(name)
        for i in range(n_per_class):
            rng = np.random.default_rng(
                np.random.SeedSequence((int(seed), label_id, i)))
            pixels = synth_image(name, side, rng)
            items.append(LabeledImage(Tensor.wrap(pixels), label_id,
                                      ("original", f"synth/{name}/{i}")))
    return Dataset(items, encoder)
