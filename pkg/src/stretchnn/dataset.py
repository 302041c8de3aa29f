"""MNIST ingestion: IDX parsing, 20x20 resizing, and split handling."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

IDX_MAGIC_IMAGES = 0x00000803
IDX_MAGIC_LABELS = 0x00000801

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


def _read_bytes(path: Path) -> bytes:
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def _resolve(directory: Path, stem: str) -> Path:
    for candidate in (directory / stem, directory / (stem + ".gz")):
        if candidate.exists():
            return candidate
    raise FormatError(f"missing MNIST file {stem}[.gz] in {directory}")


def load_mnist_idx(image_path, label_path) -> tuple[np.ndarray, np.ndarray]:
    """Read an IDX image/label file pair.

    Returns (images, labels): images as float64 in [0, 1] with shape
    (count, rows, cols), labels as int64.  Magic numbers, counts, and
    payload sizes are all verified.
    """
    img_buf = _read_bytes(Path(image_path))
    lab_buf = _read_bytes(Path(label_path))
    if len(img_buf) < 16 or len(lab_buf) < 8:
        raise FormatError("IDX file truncated before header")
    magic, n_images, rows, cols = struct.unpack(">IIII", img_buf[:16])
    if magic != IDX_MAGIC_IMAGES:
        raise FormatError(f"bad image magic 0x{magic:08x}")
    lab_magic, n_labels = struct.unpack(">II", lab_buf[:8])
    if lab_magic != IDX_MAGIC_LABELS:
        raise FormatError(f"bad label magic 0x{lab_magic:08x}")
    if n_images != n_labels:
        raise FormatError(f"image count {n_images} != label count {n_labels}")
    if len(img_buf) - 16 != n_images * rows * cols:
        raise FormatError("image payload size does not match header")
    if len(lab_buf) - 8 != n_labels:
        raise FormatError("label payload size does not match header")
    images = np.frombuffer(img_buf, dtype=np.uint8, offset=16).reshape(
        n_images, rows, cols
    )
    labels = np.frombuffer(lab_buf, dtype=np.uint8, offset=8).astype(np.int64)
    return images.astype(np.float64) / 255.0, labels


def resize_bilinear(images: np.ndarray, out_size: int = 20) -> np.ndarray:
    """Bilinear resize of a batch (n, H, W) -> flattened (n, out_size^2).

    Pixel centers are aligned (source coordinate (i + 1/2) * H/out - 1/2),
    so constant images stay constant and mirrored inputs give mirrored
    outputs.
    """
    images = np.asarray(images, dtype=np.float64)
    single = images.ndim == 2
    if single:
        images = images[None]
    n, src_h, src_w = images.shape

    def axis_weights(src: int):
        coord = (np.arange(out_size) + 0.5) * src / out_size - 0.5
        lo = np.clip(np.floor(coord).astype(np.int64), 0, src - 1)
        hi = np.clip(lo + 1, 0, src - 1)
        frac = np.clip(coord - lo, 0.0, 1.0)
        return lo, hi, frac

    ylo, yhi, fy = axis_weights(src_h)
    xlo, xhi, fx = axis_weights(src_w)
    top = images[:, ylo][:, :, xlo] * (1 - fx) + images[:, ylo][:, :, xhi] * fx
    bot = images[:, yhi][:, :, xlo] * (1 - fx) + images[:, yhi][:, :, xhi] * fx
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    out = out.reshape(n, out_size * out_size)
    return out[0] if single else out


def resize_to_20x20(image28: np.ndarray) -> np.ndarray:
    """One 28x28 image in [0, 1] -> flattened 400-vector, row-major."""
    return resize_bilinear(image28, 20)


@dataclass(frozen=True, eq=False)
class Dataset:
    """20x20-flattened digit images with train/validation/test splits."""

    train_images: np.ndarray
    train_labels: np.ndarray
    val_images: np.ndarray
    val_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray

    @classmethod
    def from_mnist_dir(cls, directory, val_count: int = 10000) -> "Dataset":
        """Load the four standard IDX files and build the canonical splits.

        The last val_count training samples become the validation split,
        never mixed back into training.
        """
        directory = Path(directory)
        train_raw, train_labels = load_mnist_idx(
            _resolve(directory, TRAIN_IMAGES), _resolve(directory, TRAIN_LABELS)
        )
        test_raw, test_labels = load_mnist_idx(
            _resolve(directory, TEST_IMAGES), _resolve(directory, TEST_LABELS)
        )
        train_flat = resize_bilinear(train_raw)
        test_flat = resize_bilinear(test_raw)
        split = train_flat.shape[0] - val_count
        if split <= 0:
            raise FormatError("training set smaller than requested validation count")
        return cls(
            train_flat[:split],
            train_labels[:split],
            train_flat[split:],
            train_labels[split:],
            test_flat,
            test_labels,
        )


def stratified_subset(
    labels: np.ndarray, per_class: int, seed: int, n_classes: int = 10
) -> np.ndarray:
    """Seeded stratified pick: per_class indices of each class, in index order."""
    rng = np.random.default_rng(seed)
    chosen = []
    for cls in range(n_classes):
        pool = np.flatnonzero(labels == cls)
        if pool.size < per_class:
            raise ValueError(f"class {cls} has only {pool.size} samples")
        chosen.append(rng.choice(pool, size=per_class, replace=False))
    return np.sort(np.concatenate(chosen))
