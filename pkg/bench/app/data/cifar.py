"""CIFAR-10 binary ingestion and the stratified holdout split."""
from dataclasses import dataclass
import os

import numpy as np

from app.core.config import Config
from app.core.errors import DatasetError
from app.core.logs import get_logger
from app.core.rng import seeded_rng

log = get_logger("dataset")


@dataclass(frozen=True)
class LabeledImage:
    image: object   # ImageTensor
    label: int

    def __post_init__(self):
        if not 0 <= self.label < Config.NUM_CLASSES:
            raise DatasetError(f"label {self.label} outside 0..{Config.NUM_CLASSES - 1}")


class Dataset:
    """Features and labels, stored raw; scaling and preprocessing happen on read.

    `reads` counts how many examples have been handed out, which lets the
    harness prove the test set was only touched for final evaluation.
    """

    def __init__(self, x, y, scale=None, name="", pipeline=None):
        self.x = x
        self.y = np.asarray(y, dtype=np.int64)
        if len(self.x) != len(self.y):
            raise DatasetError(f"{len(self.x)} examples but {len(self.y)} labels")
        self.scale = scale
        self.name = name
        self.pipeline = pipeline
        self.reads = 0

    def __len__(self):
        return len(self.y)

    @property
    def labels(self):
        return self.y

    @property
    def example_shape(self):
        return tuple(self.x.shape[1:])

    def features(self, idx=None):
        raw = self.x if idx is None else self.x[idx]
        out = raw.astype(np.float32)
        if self.scale is not None:
            out *= np.float32(self.scale)
        if self.pipeline is not None:
            out = self.pipeline.run(out)
        self.reads += len(out)
        return out

    def __getitem__(self, i):
        from app.core.tensors import ImageTensor
        x = self.features(np.array([i]))[0]
        image = ImageTensor.from_array(x) if x.ndim == 3 else x
        return LabeledImage(image, int(self.y[i]))

    def subset(self, indices, name=None):
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.x[indices], self.y[indices], self.scale,
                       name or self.name, self.pipeline)

    def class_counts(self, num_classes=Config.NUM_CLASSES):
        return np.bincount(self.y, minlength=num_classes)


@dataclass
class DatasetSplit:
    train: Dataset
    validation: Dataset
    test: Dataset | None = None
    train_indices: np.ndarray | None = None
    validation_indices: np.ndarray | None = None


def _read_batch(path, expected_records):
    if not os.path.exists(path):
        raise DatasetError(f"missing CIFAR-10 batch file: {path}")
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size % Config.CIFAR_RECORD_BYTES != 0:
        raise DatasetError(
            f"{path}: length {raw.size} is not a multiple of {Config.CIFAR_RECORD_BYTES}")
    records = raw.reshape(-1, Config.CIFAR_RECORD_BYTES)
    if expected_records is not None and len(records) != expected_records:
        raise DatasetError(f"{path}: {len(records)} records, expected {expected_records}")
    labels = records[:, 0].astype(np.int64)
    if labels.size and labels.max() > 9:
        raise DatasetError(f"{path}: label byte {labels.max()} > 9")
    h, w, c = Config.INPUT_SHAPE
    # channel-planar R, G, B -> height, width, channel
    pixels = records[:, 1:].reshape(-1, c, h, w).transpose(0, 2, 3, 1)
    return np.ascontiguousarray(pixels), labels


def load_cifar10(directory, expected_records=Config.CIFAR_RECORDS_PER_BATCH):
    """Return (train, test) Datasets; pixels are scaled to [0, 1] on read."""
    xs, ys = [], []
    for filename in Config.CIFAR_TRAIN_FILES:
        x, y = _read_batch(os.path.join(directory, filename), expected_records)
        xs.append(x)
        ys.append(y)
    x_test, y_test = _read_batch(os.path.join(directory, Config.CIFAR_TEST_FILE), expected_records)

    train = Dataset(np.concatenate(xs), np.concatenate(ys), scale=1.0 / 255.0, name="train")
    test = Dataset(x_test, y_test, scale=1.0 / 255.0, name="test")
    log.info("cifar10 loaded", directory=str(directory), n_train=len(train), n_test=len(test))
    return train, test


def to_records(dataset: Dataset) -> bytes:
    """Rebuild the CIFAR binary layout from a raw uint8 dataset."""
    pixels = np.asarray(dataset.x, dtype=np.uint8).transpose(0, 3, 1, 2).reshape(len(dataset), -1)
    labels = dataset.y.astype(np.uint8).reshape(-1, 1)
    return np.concatenate([labels, pixels], axis=1).tobytes()


def _stratified_pick(labels, counts, seed):
    """Per class c, the first counts[c] indices of one seeded shuffle."""
    order = seeded_rng(seed).permutation(len(labels))
    shuffled = labels[order]
    picked = []
    for c, want in counts.items():
        members = order[shuffled == c]
        if len(members) < want:
            raise DatasetError(f"class {c} has {len(members)} examples, {want} requested")
        picked.append(members[:want])
    if not picked:
        return np.zeros(0, dtype=np.int64)
    return np.sort(np.concatenate(picked)).astype(np.int64)


def stratified_holdout(train: Dataset, per_class=Config.HOLDOUT_PER_CLASS, seed=0, test=None):
    """Move exactly `per_class` examples of every class into a validation set."""
    classes = np.unique(train.y)
    val_idx = _stratified_pick(train.y, {int(c): per_class for c in classes}, seed)
    train_idx = np.setdiff1d(np.arange(len(train)), val_idx)
    split = DatasetSplit(
        train=train.subset(train_idx, "train"),
        validation=train.subset(val_idx, "validation"),
        test=test,
        train_indices=train_idx,
        validation_indices=val_idx,
    )
    log.info("holdout split", n_train=len(train_idx), n_validation=len(val_idx), seed=seed)
    return split


def stratified_subset(dataset: Dataset, size: int, seed=0):
    """Class-balanced subset of `size` examples; the remainder goes to the lowest classes."""
    classes = [int(c) for c in np.unique(dataset.y)]
    base, extra = divmod(size, len(classes))
    counts = {c: base + (1 if i < extra else 0) for i, c in enumerate(classes)}
    return dataset.subset(_stratified_pick(dataset.y, counts, seed))
