"""
Dataset ingestion and deterministic subsetting.

Supported sources:
- MNIST / fashionMNIST IDX files (optionally gzip-compressed)
- CIFAR-10 binary batches
- A seeded synthetic "blobs" generator for fast experiments

Every loader normalizes pixels into [0, 1] by dividing by 255 and flattens
images row-major, so the verifier's input box lives on the same scale for
every dataset.
"""
from __future__ import annotations

import gzip
import logging
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..constants import (
    CIFAR10_NUM_CLASSES, CIFAR10_RECORD_SIZE,
    DATASET_BLOBS, DATASET_CIFAR10, DATASET_FASHION_MNIST, DATASET_IDX, DATASET_KINDS, DATASET_MNIST,
    IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC, PIXEL_SCALE,
)
from ..errors import ConfigError, FormatError, InvalidArgumentError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
CIFAR10_TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
CIFAR10_TEST_FILES = ("test_batch.bin",)
MNIST_NUM_CLASSES = 10


@dataclass(frozen=True)
class Sample:
    """One pool entry: normalized features, oracle label and stable id."""

    features: np.ndarray
    true_label: int
    id: int


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled sample collection stored as dense arrays.

    Sample ids are the row indices ``0..n-1``.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if features.ndim != 2:
            raise InvalidArgumentError(f"features must be 2-D, got shape {features.shape}")
        if features.shape[0] != labels.shape[0]:
            raise InvalidArgumentError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} labels"
            )
        if self.num_classes <= 0:
            raise InvalidArgumentError("num_classes must be positive")
        if features.size and (features.min() < 0.0 or features.max() > 1.0):
            raise InvalidArgumentError("features must lie in [0, 1]")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise InvalidArgumentError(f"labels must lie in [0, {self.num_classes})")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self))

    def sample(self, index: int) -> Sample:
        if not 0 <= index < len(self):
            raise InvalidArgumentError(f"sample index {index} outside [0, {len(self)})")
        return Sample(self.features[index], int(self.labels[index]), int(index))

    def label_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        try:
            with gzip.open(path, "rb") as f:
                return f.read()
        except FileNotFoundError:
            raise
        except (OSError, EOFError, zlib.error) as e:
            raise FormatError(f"corrupt gzip stream in {path.name} ({e})", 0) from e
    return path.read_bytes()


def _write_bytes(path: PathLike, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".gz":
        with gzip.open(path, "wb") as f:
            f.write(payload)
    else:
        path.write_bytes(payload)


def _unpack_header(data: bytes, fmt: str, what: str) -> Tuple[int, ...]:
    size = struct.calcsize(fmt)
    if len(data) < size:
        raise FormatError(f"truncated {what} header", len(data))
    return struct.unpack(fmt, data[:size])


def _parse_idx_images(data: bytes) -> np.ndarray:
    magic, count, rows, cols = _unpack_header(data, ">IIII", "IDX image")
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(f"bad IDX image magic 0x{magic:08x}", 0)
    expected = count * rows * cols
    payload = data[16:]
    if len(payload) < expected:
        raise FormatError(f"truncated IDX image payload, expected {expected} pixel bytes", len(data))
    pixels = np.frombuffer(payload, dtype=np.uint8, count=expected)
    return pixels.reshape(count, rows * cols)


def _parse_idx_labels(data: bytes) -> np.ndarray:
    magic, count = _unpack_header(data, ">II", "IDX label")
    if magic != IDX_LABEL_MAGIC:
        raise FormatError(f"bad IDX label magic 0x{magic:08x}", 0)
    payload = data[8:]
    if len(payload) < count:
        raise FormatError(f"truncated IDX label payload, expected {count} labels", len(data))
    return np.frombuffer(payload, dtype=np.uint8, count=count).astype(np.int64)


def load_idx(images_path: PathLike, labels_path: PathLike, num_classes: Optional[int] = None) -> Dataset:
    """Decode an IDX image/label file pair.

    Parameters
    ----------
    images_path : PathLike
        Image file (magic 0x00000803, dims ``[n, rows, cols]``)
    labels_path : PathLike
        Label file (magic 0x00000801, dims ``[n]``)
    num_classes : int, optional
        Class count; inferred as ``max(label) + 1`` when omitted

    Returns
    -------
    Dataset
        Row-major flattened features scaled into [0, 1]
    """
    pixels = _parse_idx_images(_read_bytes(images_path))
    labels = _parse_idx_labels(_read_bytes(labels_path))
    if len(labels) != len(pixels):
        raise FormatError(f"label count {len(labels)} does not match image count {len(pixels)}", 4)
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if len(labels) else 1
    logger.debug(f"loaded {len(labels)} IDX samples from {images_path}")
    return Dataset(pixels.astype(np.float64) / PIXEL_SCALE, labels, num_classes)


def write_idx(dataset: Dataset, images_path: PathLike, labels_path: PathLike, rows: int, cols: int) -> None:
    """Write a dataset as an IDX pair, quantizing features to ``round(x * 255)``."""
    if rows * cols != dataset.input_dim:
        raise InvalidArgumentError(f"{rows}x{cols} images do not match input_dim {dataset.input_dim}")
    if dataset.num_classes > 256:
        raise InvalidArgumentError("IDX labels are single bytes")
    pixels = np.clip(np.rint(dataset.features * PIXEL_SCALE), 0, 255).astype(np.uint8)
    n = len(dataset)
    _write_bytes(images_path, struct.pack(">IIII", IDX_IMAGE_MAGIC, n, rows, cols) + pixels.tobytes())
    _write_bytes(labels_path, struct.pack(">II", IDX_LABEL_MAGIC, n) + dataset.labels.astype(np.uint8).tobytes())


def load_cifar10(batch_paths: Sequence[PathLike]) -> Dataset:
    """Decode CIFAR-10 binary batches (1 label byte + 3072 channel-major pixel bytes per record)."""
    features = []
    labels = []
    for path in batch_paths:
        data = _read_bytes(path)
        if len(data) % CIFAR10_RECORD_SIZE:
            raise FormatError(
                f"{path} length {len(data)} is not a multiple of {CIFAR10_RECORD_SIZE}",
                (len(data) // CIFAR10_RECORD_SIZE) * CIFAR10_RECORD_SIZE,
            )
        records = np.frombuffer(data, dtype=np.uint8).reshape(-1, CIFAR10_RECORD_SIZE)
        if records.size and records[:, 0].max() >= CIFAR10_NUM_CLASSES:
            bad = int(np.argmax(records[:, 0] >= CIFAR10_NUM_CLASSES))
            raise FormatError(f"label {records[bad, 0]} out of range in {path}", bad * CIFAR10_RECORD_SIZE)
        labels.append(records[:, 0].astype(np.int64))
        features.append(records[:, 1:].astype(np.float64) / PIXEL_SCALE)
    if not features:
        return Dataset(np.zeros((0, CIFAR10_RECORD_SIZE - 1)), np.zeros(0, dtype=np.int64), CIFAR10_NUM_CLASSES)
    return Dataset(np.concatenate(features), np.concatenate(labels), CIFAR10_NUM_CLASSES)


def synthetic_blobs(seed: int, n: int, input_dim: int, num_classes: int, spread: float) -> Dataset:
    """Gaussian class clusters around seeded centers in ``[0.25, 0.75]^d``.

    Sample ``i`` belongs to class ``i mod num_classes``.
    """
    if num_classes <= 0 or input_dim <= 0:
        raise InvalidArgumentError("input_dim and num_classes must be positive")
    if n < num_classes:
        raise InvalidArgumentError(f"n={n} must be at least num_classes={num_classes}")
    if not spread > 0:
        raise InvalidArgumentError(f"spread must be positive, got {spread}")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.25, 0.75, size=(num_classes, input_dim))
    labels = np.arange(n) % num_classes
    noise = rng.normal(0.0, spread, size=(n, input_dim))
    features = np.clip(centers[labels] + noise, 0.0, 1.0)
    return Dataset(features, labels, num_classes)


def subset(dataset: Dataset, indices: Sequence[int]) -> Dataset:
    """Rows at ``indices`` re-indexed densely from 0."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= len(dataset)):
        raise InvalidArgumentError("subset index out of range")
    return Dataset(dataset.features[idx], dataset.labels[idx], dataset.num_classes)


def take(dataset: Dataset, size: int, seed: int) -> Dataset:
    """Seeded subset of ``size`` rows, kept in original order; ``size <= 0`` keeps everything."""
    if size <= 0 or size >= len(dataset):
        return dataset
    order = np.random.default_rng(seed).permutation(len(dataset))
    return subset(dataset, np.sort(order[:size]))


def split(dataset: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Seeded train/test partition; the test side gets ``round(n * test_fraction)`` rows (at least one)."""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidArgumentError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(dataset)
    n_test = min(max(1, int(round(n * test_fraction))), n - 1)
    if n_test <= 0:
        raise InvalidArgumentError("dataset too small to split")
    order = np.random.default_rng(seed).permutation(n)
    return subset(dataset, np.sort(order[n_test:])), subset(dataset, np.sort(order[:n_test]))


@dataclass(frozen=True)
class DatasetSpec:
    """Where and how to obtain the train/test pair."""

    kind: str = DATASET_BLOBS
    root: str = "."
    train_size: int = 0
    test_size: int = 0
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    blobs_n: int = 400
    blobs_dim: int = 4
    blobs_classes: int = 3
    blobs_spread: float = 0.05
    blobs_test_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in DATASET_KINDS:
            raise InvalidArgumentError(f"unknown dataset kind {self.kind!r}")


def _existing(path: Path) -> Path:
    """Return ``path`` or its ``.gz`` sibling, raising ConfigError if neither exists."""
    if path.is_file():
        return path
    gz = path.with_name(path.name + ".gz")
    if gz.is_file():
        return gz
    raise ConfigError(f"dataset file not found: {path}", key="dataset.root")


def _locate_dir(root: Path, candidates: Sequence[str], marker: str) -> Path:
    for name in candidates:
        folder = root / name if name else root
        if (folder / marker).is_file() or (folder / (marker + ".gz")).is_file():
            return folder
    return root


def _load_mnist_like(spec: DatasetSpec) -> Tuple[Dataset, Dataset]:
    root = _locate_dir(Path(spec.root), (spec.kind, ""), MNIST_FILES["train"][0])
    parts = []
    for split_name in ("train", "test"):
        images, labels = MNIST_FILES[split_name]
        parts.append(load_idx(_existing(root / images), _existing(root / labels), MNIST_NUM_CLASSES))
    return parts[0], parts[1]


def _load_cifar10(spec: DatasetSpec) -> Tuple[Dataset, Dataset]:
    root = _locate_dir(Path(spec.root), ("", "cifar10", "cifar-10-batches-bin"), CIFAR10_TEST_FILES[0])
    train = load_cifar10([_existing(root / name) for name in CIFAR10_TRAIN_FILES])
    test = load_cifar10([_existing(root / name) for name in CIFAR10_TEST_FILES])
    return train, test


def _load_explicit_idx(spec: DatasetSpec) -> Tuple[Dataset, Dataset]:
    root = Path(spec.root)
    paths = {}
    for key in ("train_images", "train_labels", "test_images", "test_labels"):
        value = getattr(spec, key)
        if not value:
            raise ConfigError("required for dataset.kind=idx", key=f"dataset.{key}")
        path = Path(value)
        paths[key] = _existing(path if path.is_absolute() else root / path)
    train = load_idx(paths["train_images"], paths["train_labels"])
    test = load_idx(paths["test_images"], paths["test_labels"])
    num_classes = max(train.num_classes, test.num_classes)
    return (
        Dataset(train.features, train.labels, num_classes),
        Dataset(test.features, test.labels, num_classes),
    )


def load_dataset(spec: DatasetSpec) -> Tuple[Dataset, Dataset]:
    """Load the (train, test) pair described by ``spec`` and apply the configured subsample sizes."""
    if spec.kind in (DATASET_MNIST, DATASET_FASHION_MNIST):
        train, test = _load_mnist_like(spec)
    elif spec.kind == DATASET_CIFAR10:
        train, test = _load_cifar10(spec)
    elif spec.kind == DATASET_IDX:
        train, test = _load_explicit_idx(spec)
    else:
        blobs = synthetic_blobs(spec.seed, spec.blobs_n, spec.blobs_dim, spec.blobs_classes, spec.blobs_spread)
        train, test = split(blobs, spec.blobs_test_fraction, spec.seed)

    train = take(train, spec.train_size, spec.seed)
    test = take(test, spec.test_size, spec.seed + 1)
    logger.info(f"dataset {spec.kind}: {len(train)} train / {len(test)} test samples, input_dim {train.input_dim}")
    logger.debug(f"train labels per class: {train.label_histogram().tolist()}")
    return train, test
