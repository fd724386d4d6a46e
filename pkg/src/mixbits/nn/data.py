"""Dataset container, IDX ubyte ingestion, and synthetic generators."""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import rng as rng_mod
from ..errors import DatasetError

IDX_MAGIC_IMAGES = 0x00000803
IDX_MAGIC_LABELS = 0x00000801

SPLITS = ("train", "validation", "test")


@dataclass
class Dataset:
    inputs: np.ndarray  # (N, ...) float64
    labels: np.ndarray  # (N,) int64 class ids in [0, C)
    split: str = "train"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise DatasetError(f"split must be one of {SPLITS}, got {self.split!r}")
        if len(self.inputs) != len(self.labels):
            raise DatasetError(
                f"input/label count mismatch: {len(self.inputs)} inputs vs {len(self.labels)} labels"
            )
        if self.n_classes < 2:
            raise DatasetError("need at least 2 classes")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def subsample(self, n: int, rng: np.random.Generator) -> "Dataset":
        """Random subset without replacement; the whole set if n >= len."""
        if n >= len(self):
            return self
        idx = rng.choice(len(self), size=n, replace=False)
        return Dataset(self.inputs[idx], self.labels[idx], self.split)


def _read_idx_array(path: Path) -> tuple[int, np.ndarray]:
    raw = path.read_bytes()
    if len(raw) < 4:
        raise DatasetError(f"{path}: truncated IDX file (no magic)")
    (magic,) = struct.unpack(">i", raw[:4])
    if magic == IDX_MAGIC_IMAGES:
        ndim = 3
    elif magic == IDX_MAGIC_LABELS:
        ndim = 1
    else:
        raise DatasetError(f"{path}: bad IDX magic 0x{magic & 0xFFFFFFFF:08x}")
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise DatasetError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}i", raw[4:header_len])
    count = int(np.prod(dims))
    if len(raw) - header_len != count:
        raise DatasetError(
            f"{path}: truncated IDX payload, expected {count} bytes, found {len(raw) - header_len}"
        )
    data = np.frombuffer(raw, dtype=np.uint8, offset=header_len).reshape(dims)
    return magic, data


def load_idx(images_path, labels_path, split: str = "train") -> Dataset:
    """Load a paired IDX ubyte image/label file set (MNIST layout).

    Pixels are scaled to [0, 1] and given a leading channel axis.
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    magic_i, images = _read_idx_array(images_path)
    if magic_i != IDX_MAGIC_IMAGES:
        raise DatasetError(f"{images_path}: expected image magic, found label file")
    magic_l, labels = _read_idx_array(labels_path)
    if magic_l != IDX_MAGIC_LABELS:
        raise DatasetError(f"{labels_path}: expected label magic, found image file")
    if images.shape[0] != labels.shape[0]:
        raise DatasetError(
            f"image/label count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels"
        )
    inputs = images.astype(np.float64)[:, None, :, :] / 255.0
    return Dataset(inputs, labels.astype(np.int64), split)


def synth_dataset(kind: str, n: int, seed: int, n_classes: int = 2, separation: float = 5.0) -> Dataset:
    """Deterministic 2-D point datasets with balanced classes.

    blobs: isotropic unit-variance Gaussians whose centers sit
    ``separation`` standard deviations apart on a circle.
    moons: two interleaving half circles with mild noise.
    """
    if n < 2:
        raise DatasetError("need n >= 2 samples")
    rng = rng_mod.stream(seed, f"synth/{kind}")
    labels = np.arange(n) % n_classes
    if kind == "blobs":
        angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
        radius = separation / (2.0 * np.sin(np.pi / n_classes)) if n_classes > 1 else 0.0
        centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        inputs = centers[labels] + rng.standard_normal((n, 2))
    elif kind == "moons":
        if n_classes != 2:
            raise DatasetError("moons is a 2-class dataset")
        t = rng.uniform(0.0, np.pi, size=n)
        upper = np.stack([np.cos(t), np.sin(t)], axis=1)
        lower = np.stack([1.0 - np.cos(t), 0.5 - np.sin(t)], axis=1)
        inputs = np.where(labels[:, None] == 0, upper, lower) + 0.1 * rng.standard_normal((n, 2))
    else:
        raise DatasetError(f"unknown synthetic kind {kind!r}")
    return Dataset(inputs, labels.astype(np.int64))


def synth_image_dataset(
    n: int,
    seed: int,
    n_classes: int = 10,
    side: int = 12,
    noise: float = 0.3,
    split: str = "train",
) -> Dataset:
    """Deterministic image-classification stand-in for digit data.

    Each class gets a fixed smooth template drawn once from the class
    seed; samples are the template plus pixel noise, clipped to [0, 1].
    Shape (N, 1, side, side), balanced classes.
    """
    if n < 2:
        raise DatasetError("need n >= 2 samples")
    template_rng = rng_mod.stream(seed, "synth-images/templates")
    raw = template_rng.uniform(0.0, 1.0, size=(n_classes, side + 4, side + 4))
    # 3x3 box blur smooths templates so conv filters have local structure to use
    kernel = np.ones((3, 3)) / 9.0
    templates = np.empty((n_classes, side, side))
    for c in range(n_classes):
        blurred = raw[c]
        for _ in range(2):
            out = np.zeros_like(blurred)
            for u in range(3):
                for v in range(3):
                    out[1:-1, 1:-1] += kernel[u, v] * blurred[u : u + blurred.shape[0] - 2, v : v + blurred.shape[1] - 2]
            blurred = out
        templates[c] = blurred[2 : 2 + side, 2 : 2 + side]
    templates = (templates - templates.min()) / (templates.max() - templates.min())

    sample_rng = rng_mod.stream(seed, f"synth-images/{split}")
    labels = np.arange(n) % n_classes
    perm = sample_rng.permutation(n)
    labels = labels[perm]
    inputs = templates[labels] + noise * sample_rng.standard_normal((n, side, side))
    inputs = np.clip(inputs, 0.0, 1.0)[:, None, :, :]
    return Dataset(inputs, labels.astype(np.int64), split)
