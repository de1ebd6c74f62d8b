"""Datasets: IDX parsing, synthetic separable generation, batching.

IDX files are big-endian. The two formats used here:

  images  [offset 0] u32 magic 0x00000803
          [4]  u32 count, [8] u32 rows, [12] u32 cols
          [16] count*rows*cols unsigned pixel bytes
  labels  [offset 0] u32 magic 0x00000801
          [4]  u32 count
          [8]  count unsigned label bytes

Pixels are scaled to [0, 1] by division by 255 and images flattened to
rows*cols features. Gzipped files (.gz) are read transparently.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IdxParseError, SamplingTimeoutError, ValidationError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

TRAIN_FILES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
TEST_FILES = ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")


@dataclass
class LabeledDataset:
    features: np.ndarray  # float64, N x d
    labels: np.ndarray  # int64 class indices
    n_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValidationError("dataset needs a non-empty N x d feature matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValidationError("labels must be one class index per row")
        if not np.isfinite(self.features).all():
            raise ValidationError("dataset features contain non-finite values")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ValidationError(f"labels outside [0, {self.n_classes})")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def _read_bytes(path: str | Path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _parse_idx(raw: bytes, expected_magic: int, path: str | Path):
    if len(raw) < 8:
        raise IdxParseError(f"{path}: truncated IDX header ({len(raw)} bytes)")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic != expected_magic:
        raise IdxParseError(
            f"{path}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    return raw


def load_mnist_idx(images_path: str | Path, labels_path: str | Path) -> LabeledDataset:
    """Parse an images/labels IDX pair into flattened [0, 1]-scaled features."""
    img_raw = _parse_idx(_read_bytes(images_path), IMAGE_MAGIC, images_path)
    if len(img_raw) < 16:
        raise IdxParseError(f"{images_path}: truncated image header")
    n, rows, cols = struct.unpack(">III", img_raw[4:16])
    pixel_bytes = n * rows * cols
    if len(img_raw) != 16 + pixel_bytes:
        raise IdxParseError(
            f"{images_path}: expected {16 + pixel_bytes} bytes for {n} images, got {len(img_raw)}"
        )

    lbl_raw = _parse_idx(_read_bytes(labels_path), LABEL_MAGIC, labels_path)
    (n_labels,) = struct.unpack(">I", lbl_raw[4:8])
    if len(lbl_raw) != 8 + n_labels:
        raise IdxParseError(f"{labels_path}: truncated label payload")
    if n_labels != n:
        raise IdxParseError(
            f"count mismatch: {n} images in {images_path} vs {n_labels} labels in {labels_path}"
        )

    pixels = np.frombuffer(img_raw, dtype=np.uint8, offset=16)
    features = pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    labels = np.frombuffer(lbl_raw, dtype=np.uint8, offset=8).astype(np.int64)
    return LabeledDataset(features, labels, n_classes=int(labels.max()) + 1 if n else 0)


def write_mnist_idx(
    dataset: LabeledDataset,
    images_path: str | Path,
    labels_path: str | Path,
    rows: int,
    cols: int,
) -> None:
    """Write a dataset as an IDX pair, quantizing features to bytes by round(f * 255)."""
    if rows * cols != dataset.d:
        raise ValidationError(f"{rows}x{cols} does not match feature dim {dataset.d}")
    pixels = np.rint(np.clip(dataset.features, 0.0, 1.0) * 255.0).astype(np.uint8)
    img = struct.pack(">IIII", IMAGE_MAGIC, dataset.n, rows, cols) + pixels.tobytes()
    lbl = struct.pack(">II", LABEL_MAGIC, dataset.n) + dataset.labels.astype(np.uint8).tobytes()
    for path, payload in ((images_path, img), (labels_path, lbl)):
        path = Path(path)
        if path.suffix == ".gz":
            with gzip.open(path, "wb", mtime=0) as f:
                f.write(payload)
        else:
            path.write_bytes(payload)


def _resolve_idx_pair(directory: Path, names: tuple[str, str]) -> tuple[Path, Path]:
    pair = []
    for name in names:
        plain, gz = directory / name, directory / (name + ".gz")
        if plain.exists():
            pair.append(plain)
        elif gz.exists():
            pair.append(gz)
        else:
            raise IdxParseError(f"missing {name}[.gz] in {directory}")
    return pair[0], pair[1]


def load_mnist_dir(directory: str | Path, split: str) -> LabeledDataset:
    """Load the train or test split from a directory of official-named IDX files."""
    directory = Path(directory)
    names = TRAIN_FILES if split == "train" else TEST_FILES
    images, labels = _resolve_idx_pair(directory, names)
    ds = load_mnist_idx(images, labels)
    return LabeledDataset(ds.features, ds.labels, n_classes=10)


# Rejection sampling draws this many candidate chunks before giving up.
_MAX_REJECTION_ROUNDS = 1000


def gen_separable(
    d: int, n: int, margin: float, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Linearly separable data with a planted +-1 separator.

    Draws w* uniformly from {-1, 1}^d and features uniformly from [-1, 1]^d,
    rejecting candidates with |w* . x| <= margin; labels are sign(w* . x) in
    {-1, +1}. Returns (features, sign_labels, w_star).
    """
    if d < 1 or n < 1:
        raise ValidationError("need d >= 1 and n >= 1")
    if margin < 0:
        raise ValidationError("margin must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(17,)))
    w_star = rng.integers(0, 2, size=d) * 2 - 1
    chunk = max(n, 1024)
    feats, labs = [], []
    kept = 0
    for _ in range(_MAX_REJECTION_ROUNDS):
        x = rng.uniform(-1.0, 1.0, size=(chunk, d))
        dots = x @ w_star.astype(np.float64)
        keep = np.abs(dots) > margin
        feats.append(x[keep])
        labs.append(np.sign(dots[keep]).astype(np.int64))
        kept += int(keep.sum())
        if kept >= n:
            features = np.concatenate(feats)[:n]
            labels = np.concatenate(labs)[:n]
            return features, labels, w_star
    raise SamplingTimeoutError(
        f"margin {margin} too restrictive: {kept}/{n} accepted after "
        f"{_MAX_REJECTION_ROUNDS} rounds"
    )


def separable_dataset(d: int, n: int, margin: float, seed: int) -> LabeledDataset:
    """gen_separable packaged for classification: class 1 iff w* . x > 0."""
    features, sign_labels, _ = gen_separable(d, n, margin, seed)
    return LabeledDataset(features, (sign_labels + 1) // 2, n_classes=2)


def batch_iterator(dataset: LabeledDataset, batch_size: int, seed: int, epoch: int):
    """Yield (features, labels) batches from a seeded per-epoch permutation.

    The order is a pure function of (seed, epoch). The final partial batch
    is dropped so every batch has exactly `batch_size` rows.
    """
    if batch_size > dataset.n:
        raise ValidationError(f"batch size {batch_size} exceeds dataset size {dataset.n}")
    if batch_size < 1:
        raise ValidationError("batch size must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(23, epoch)))
    perm = rng.permutation(dataset.n)
    for start in range(0, dataset.n - batch_size + 1, batch_size):
        idx = perm[start : start + batch_size]
        yield dataset.features[idx], dataset.labels[idx]


def batches_per_epoch(dataset: LabeledDataset, batch_size: int) -> int:
    return dataset.n // batch_size
