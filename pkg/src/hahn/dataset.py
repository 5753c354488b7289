"""CIFAR-10 binary-format loading and deterministic subsets.

Each record in the official binary files is 1 label byte followed by
3072 pixel bytes: the red, green and blue planes, each 32x32 row-major.
"""

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

RECORD = 3073
SIDE = 32
CHANNELS = 3
CLASSES = 10
TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
TEST_FILE = "test_batch.bin"
DATA_DIR_ENV = "HAHN_DATA_DIR"


class DatasetError(ValueError):
    pass


@dataclass
class ImageSet:
    """Images as uint8 (N, 3, 32, 32) and integer labels (N,)."""

    images: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, idx):
        return ImageSet(self.images[idx], self.labels[idx])

    def to_bytes(self):
        out = np.empty((len(self), RECORD), dtype=np.uint8)
        out[:, 0] = self.labels
        out[:, 1:] = self.images.reshape(len(self), -1)
        return out.tobytes()

    def checksum(self):
        return hashlib.sha256(self.to_bytes()).hexdigest()


def parse_cifar_bytes(data):
    n, rem = divmod(len(data), RECORD)
    if rem:
        raise DatasetError(
            f"truncated record: {len(data)} bytes is not a multiple of {RECORD} "
            f"(partial record at offset {n * RECORD})"
        )
    raw = np.frombuffer(data, dtype=np.uint8).reshape(n, RECORD)
    labels = raw[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels > 9)
    if bad.size:
        raise DatasetError(f"label {labels[bad[0]]} > 9 at offset {bad[0] * RECORD}")
    images = raw[:, 1:].reshape(n, CHANNELS, SIDE, SIDE).copy()
    return ImageSet(images, labels)


def load_cifar_batch(path):
    return parse_cifar_bytes(Path(path).read_bytes())


def concat(sets):
    sets = list(sets)
    return ImageSet(
        np.concatenate([s.images for s in sets]),
        np.concatenate([s.labels for s in sets]),
    )


def find_cifar_dir(data_dir=None):
    """Directory holding the binary batches, or None if absent.

    Looks in ``data_dir`` (default: $HAHN_DATA_DIR) and its
    ``cifar-10-batches-bin`` subdirectory.
    """
    data_dir = data_dir or os.environ.get(DATA_DIR_ENV)
    if not data_dir:
        return None
    for cand in (Path(data_dir), Path(data_dir) / "cifar-10-batches-bin"):
        if all((cand / f).is_file() for f in TRAIN_FILES + (TEST_FILE,)):
            return cand
    return None


def load_cifar10(data_dir=None):
    """(train, test) ImageSets from the official binary distribution."""
    root = find_cifar_dir(data_dir)
    if root is None:
        where = data_dir or os.environ.get(DATA_DIR_ENV) or f"${DATA_DIR_ENV} (unset)"
        raise FileNotFoundError(f"CIFAR-10 binary batches not found under {where}")
    train = concat(load_cifar_batch(root / f) for f in TRAIN_FILES)
    test = load_cifar_batch(root / TEST_FILE)
    return train, test


def subset(data, count, seed=0):
    """Class-stratified sample of ``count`` items, kept in original order.

    Each class receives a share proportional to its frequency; leftover
    slots go to the classes with the largest fractional shares.
    """
    N = len(data)
    if count > N:
        raise ValueError(f"requested {count} items from a set of {N}")
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = np.random.default_rng(seed)
    classes, counts = np.unique(data.labels, return_counts=True)
    share = counts * count / N
    take = np.floor(share).astype(int)
    leftover = count - take.sum()
    if leftover:
        frac = share - take
        take[np.argsort(-frac, kind="stable")[:leftover]] += 1
    chosen = []
    for c, k in zip(classes, take):
        members = np.flatnonzero(data.labels == c)
        chosen.append(rng.choice(members, size=k, replace=False))
    idx = np.sort(np.concatenate(chosen))
    return data[idx]


def synthetic_images(count, classes=4, side=SIDE, seed=0, noise=25.0):
    """Labelled stand-in images: one oriented grating family per class.

    Each image is a sinusoidal grating at its class's orientation with
    random phase, frequency jitter, colour tint and pixel noise, clipped
    to uint8.  Useful where CIFAR-10 is not available.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(count) % classes
    rng.shuffle(labels)
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    images = np.empty((count, CHANNELS, side, side), dtype=np.uint8)
    for k, c in enumerate(labels):
        theta = np.pi * c / classes + rng.normal(0, 0.1)
        freq = 2 * np.pi / rng.uniform(5.0, 8.0)
        phase = rng.uniform(0, 2 * np.pi)
        wave = np.sin(freq * (xx * np.cos(theta) + yy * np.sin(theta)) + phase)
        tint = rng.uniform(0.5, 1.0, size=CHANNELS)
        img = 128 + 80 * tint[:, None, None] * wave[None] + rng.normal(0, noise, (CHANNELS, side, side))
        images[k] = np.clip(img, 0, 255).astype(np.uint8)
    return ImageSet(images, labels.astype(np.int64))


def write_cifar_dir(path, train, test):
    """Write ImageSets in the official binary layout (for fixtures and demos)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for i, idx in enumerate(np.array_split(np.arange(len(train)), len(TRAIN_FILES))):
        (path / TRAIN_FILES[i]).write_bytes(train[idx].to_bytes())
    (path / TEST_FILE).write_bytes(test.to_bytes())
    return path
