"""Synthetic stand-ins for MNIST and UCI HAR, in-memory and on disk.

The real datasets are not bundled; these generators produce data with the
same shapes and file formats and enough class structure for one epoch of
training to reach low loss.
"""

import struct
from pathlib import Path

import numpy as np

from zkpfedeval.dataio import HAR_FILES, MNIST_FILES, Dataset


def har_like(n, seed=0, noise=0.3):
    rng = np.random.default_rng(seed)
    centers = np.random.default_rng(12345).normal(0, 1, size=(6, 561))
    labels = rng.integers(0, 6, size=n)
    feats = np.clip(centers[labels] * 0.5 + rng.normal(0, noise, size=(n, 561)), -1, 1)
    return Dataset(feats, labels)


def mnist_like(n, seed=0):
    """Each class lights up its own 7x7 cell of a 4x4 grid, plus noise."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 10, size=n)
    imgs = rng.integers(0, 40, size=(n, 1, 28, 28)).astype(np.float64)
    for i, y in enumerate(labels):
        r, c = divmod(int(y), 4)
        imgs[i, 0, r * 7 : r * 7 + 7, c * 7 : c * 7 + 7] += 200
    return Dataset(np.clip(imgs, 0, 255).round() / 255.0, labels)


def idx_images_bytes(images_u8):
    n = len(images_u8)
    return struct.pack(">IIII", 0x803, n, 28, 28) + np.asarray(images_u8, dtype=np.uint8).tobytes()


def idx_labels_bytes(labels):
    return struct.pack(">II", 0x801, len(labels)) + np.asarray(labels, dtype=np.uint8).tobytes()


def har_text(features, labels):
    """Features in the UCI layout (leading space, 16-char scientific fields)."""
    flines = ["".join(f" {v: .7e}" for v in row) for row in features]
    ylines = [str(int(y) + 1) for y in labels]
    return "\n".join(flines) + "\n", "\n".join(ylines) + "\n"


def write_mnist_dir(root, n_train=600, n_test=200, seed=0):
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for split, n, s in (("train", n_train, seed), ("test", n_test, seed + 1)):
        ds = mnist_like(n, s)
        u8 = (ds.features * 255).round().astype(np.uint8).reshape(n, 28, 28)
        (root / MNIST_FILES[f"{split}_images"]).write_bytes(idx_images_bytes(u8))
        (root / MNIST_FILES[f"{split}_labels"]).write_bytes(idx_labels_bytes(ds.labels))
    return root


def write_har_dir(root, n_train=400, n_test=120, seed=0):
    root = Path(root)
    for split, n, s in (("train", n_train, seed), ("test", n_test, seed + 1)):
        ds = har_like(n, s)
        x, y = har_text(ds.features, ds.labels)
        px = root / HAR_FILES[f"{split}_x"]
        px.parent.mkdir(parents=True, exist_ok=True)
        px.write_text(x)
        (root / HAR_FILES[f"{split}_y"]).write_text(y)
    return root
