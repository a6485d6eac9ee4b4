"""Dataset parsing (MNIST IDX, UCI HAR text) and client partitioning."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, FormatError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
HAR_FEATURES = 561
HAR_CLASSES = 6


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int


@dataclass
class Dataset:
    """Features stacked along axis 0 with their integer labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels differ in length")

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, i) -> Sample:
        return Sample(self.features[i], int(self.labels[i]))

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx])

    @classmethod
    def from_samples(cls, samples) -> "Dataset":
        samples = list(samples)
        return cls(np.stack([s.features for s in samples]), np.array([s.label for s in samples]))


@dataclass
class ClientShard:
    client_id: int
    data: Dataset

    @property
    def features(self):
        return self.data.features

    @property
    def labels(self):
        return self.data.labels

    def __len__(self):
        return len(self.data)


# ---------------------------------------------------------------------------
# MNIST IDX


def _idx_header(raw: bytes, magic: int, ndims: int):
    need = 4 + 4 * ndims
    if len(raw) < need:
        raise FormatError(f"IDX header needs {need} bytes, got {len(raw)}", len(raw))
    found = struct.unpack(">I", raw[:4])[0]
    if found != magic:
        raise FormatError(f"bad IDX magic 0x{found:08x}, expected 0x{magic:08x}", 0)
    return struct.unpack(f">{ndims}I", raw[4:need]), need


def parse_idx_images_array(raw: bytes) -> np.ndarray:
    """Images as an ``(count, 1, 28, 28)`` float64 array scaled to [0, 1]."""
    (count, rows, cols), off = _idx_header(bytes(raw), IDX_IMAGES_MAGIC, 3)
    if (rows, cols) != (28, 28):
        raise FormatError(f"expected 28x28 images, got {rows}x{cols}", 8)
    end = off + count * rows * cols
    if len(raw) < end:
        raise FormatError(f"pixel payload truncated: need {end} bytes, have {len(raw)}", len(raw))
    if len(raw) > end:
        raise FormatError("trailing bytes after pixel payload", end)
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=off)
    return pixels.reshape(count, 1, rows, cols).astype(np.float64) / 255.0


def parse_idx_images(raw: bytes) -> list:
    return list(parse_idx_images_array(raw))


def parse_idx_labels(raw: bytes) -> list:
    return [int(x) for x in parse_idx_labels_array(raw)]


def parse_idx_labels_array(raw: bytes) -> np.ndarray:
    (count,), off = _idx_header(bytes(raw), IDX_LABELS_MAGIC, 1)
    end = off + count
    if len(raw) < end:
        raise FormatError(f"label payload truncated: need {end} bytes, have {len(raw)}", len(raw))
    if len(raw) > end:
        raise FormatError("trailing bytes after label payload", end)
    labels = np.frombuffer(raw, dtype=np.uint8, count=count, offset=off)
    bad = np.flatnonzero(labels > 9)
    if bad.size:
        raise FormatError(f"label {labels[bad[0]]} out of range 0..9", off + int(bad[0]))
    return labels.astype(np.int64)


# ---------------------------------------------------------------------------
# UCI HAR


def _text(data) -> str:
    if isinstance(data, (bytes, bytearray)):
        try:
            return bytes(data).decode("ascii")
        except UnicodeDecodeError as exc:
            raise FormatError("HAR files must be ASCII text", exc.start) from None
    return data


def parse_har_dataset(features_text, labels_text) -> Dataset:
    flines = [ln for ln in _text(features_text).splitlines()]
    llines = [ln for ln in _text(labels_text).splitlines()]
    while flines and not flines[-1].strip():
        flines.pop()
    while llines and not llines[-1].strip():
        llines.pop()
    if len(flines) != len(llines):
        raise FormatError(f"{len(flines)} feature lines but {len(llines)} labels", min(len(flines), len(llines)) + 1)
    feats = np.empty((len(flines), HAR_FEATURES))
    labels = np.empty(len(llines), dtype=np.int64)
    for i, (fl, ll) in enumerate(zip(flines, llines), start=1):
        cols = fl.split()
        if len(cols) != HAR_FEATURES:
            raise FormatError(f"expected {HAR_FEATURES} columns, got {len(cols)}", f"line {i}")
        try:
            row = np.array([float(c) for c in cols])
        except ValueError:
            raise FormatError("non-numeric feature value", f"line {i}") from None
        if not np.all(np.isfinite(row)):
            raise FormatError("non-finite feature value", f"line {i}")
        feats[i - 1] = row
        try:
            y = int(ll.strip())
        except ValueError:
            raise FormatError(f"bad label {ll.strip()!r}", f"line {i}") from None
        if not 1 <= y <= HAR_CLASSES:
            raise FormatError(f"label {y} outside 1..{HAR_CLASSES}", f"line {i}")
        labels[i - 1] = y - 1
    return Dataset(feats, labels)


def parse_har(features_text, labels_text) -> list:
    """Samples with 561 features and labels shifted to 0..5."""
    ds = parse_har_dataset(features_text, labels_text)
    return [ds[i] for i in range(len(ds))]


# ---------------------------------------------------------------------------
# on-disk layout

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}
HAR_FILES = {
    "train_x": "UCI HAR Dataset/train/X_train.txt",
    "train_y": "UCI HAR Dataset/train/y_train.txt",
    "test_x": "UCI HAR Dataset/test/X_test.txt",
    "test_y": "UCI HAR Dataset/test/y_test.txt",
}
# published split sizes, checked after parsing
EXPECTED_SIZES = {"mnist": (60000, 10000), "har": (7352, 2947)}


def _read(root: Path, rel: str) -> bytes:
    for candidate in (root / rel, root / (rel + ".gz")):
        if candidate.exists():
            data = candidate.read_bytes()
            return gzip.decompress(data) if candidate.suffix == ".gz" else data
    raise DataError(f"missing data file {root / rel} (or {root / rel}.gz)")


def expected_paths(dataset: str, data_dir) -> list:
    files = MNIST_FILES if dataset == "mnist" else HAR_FILES
    return [Path(data_dir) / rel for rel in files.values()]


def load_dataset(dataset: str, data_dir, check_sizes: bool = True):
    """Return ``(train, test)`` datasets read from ``data_dir``."""
    root = Path(data_dir)
    if dataset == "mnist":
        f = MNIST_FILES
        train = Dataset(
            parse_idx_images_array(_read(root, f["train_images"])),
            parse_idx_labels_array(_read(root, f["train_labels"])),
        )
        test = Dataset(
            parse_idx_images_array(_read(root, f["test_images"])),
            parse_idx_labels_array(_read(root, f["test_labels"])),
        )
    elif dataset == "har":
        f = HAR_FILES
        train = parse_har_dataset(_read(root, f["train_x"]), _read(root, f["train_y"]))
        test = parse_har_dataset(_read(root, f["test_x"]), _read(root, f["test_y"]))
    else:
        raise ConfigError(f"unknown dataset {dataset!r}")
    if check_sizes and (len(train), len(test)) != EXPECTED_SIZES[dataset]:
        raise DataError(
            f"{dataset} split sizes {(len(train), len(test))} differ from the published "
            f"{EXPECTED_SIZES[dataset]}"
        )
    return train, test


# ---------------------------------------------------------------------------
# sampling and partitioning


def server_train_subset(data: Dataset, fraction: float = 0.10, seed=0) -> Dataset:
    if not 0 < fraction <= 1:
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    n = len(data)
    size = int(np.floor(fraction * n + 0.5))
    rng = np.random.default_rng(seed)
    return data.take(rng.permutation(n)[:size])


def partition_iid(test_data: Dataset, n_clients: int, seed=0) -> list:
    if n_clients <= 0:
        raise ConfigError(f"need at least one client, got {n_clients}")
    if n_clients > len(test_data):
        raise ConfigError(f"{n_clients} clients but only {len(test_data)} samples")
    rng = np.random.default_rng(seed)
    chunks = np.array_split(rng.permutation(len(test_data)), n_clients)
    return [ClientShard(i, test_data.take(idx)) for i, idx in enumerate(chunks)]


def partition_noniid(test_data: Dataset, n_clients: int, alpha: float = 0.5, seed=0, max_tries: int = 1000) -> list:
    """Dirichlet label skew: each class is split across clients with
    proportions drawn from Dirichlet(alpha). Redraws until no shard is empty."""
    if n_clients <= 0:
        raise ConfigError(f"need at least one client, got {n_clients}")
    if n_clients > len(test_data):
        raise ConfigError(f"{n_clients} clients but only {len(test_data)} samples")
    if not alpha > 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    rng = np.random.default_rng(seed)
    labels = test_data.labels
    classes = np.unique(labels)
    for _ in range(max_tries):
        buckets = [[] for _ in range(n_clients)]
        for c in classes:
            idx = rng.permutation(np.flatnonzero(labels == c))
            props = rng.dirichlet(np.full(n_clients, alpha))
            cuts = (np.cumsum(props)[:-1] * len(idx)).astype(int)
            for client, part in enumerate(np.split(idx, cuts)):
                buckets[client].extend(part.tolist())
        if all(buckets):
            return [ClientShard(i, test_data.take(sorted(b))) for i, b in enumerate(buckets)]
    raise ConfigError(f"could not draw a non-empty Dirichlet partition in {max_tries} tries")
