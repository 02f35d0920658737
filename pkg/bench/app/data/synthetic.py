"""Gaussian blob datasets for training sanity checks."""
import numpy as np

from app.core.config import Config
from app.core.errors import SpecError
from app.core.rng import seeded_rng
from app.data.cifar import Dataset, stratified_holdout


def _class_means(classes, dims, separation):
    # pairwise mean distance is exactly `separation` when one-hot codes fit
    if dims >= classes:
        return np.eye(classes, dims) * (separation / np.sqrt(2.0))
    bits = int(np.ceil(np.log2(max(classes, 2))))
    if dims < bits:
        raise SpecError(f"{dims} dims cannot separate {classes} classes")
    codes = (np.arange(classes)[:, None] >> np.arange(bits)[None, :]) & 1
    means = np.zeros((classes, dims))
    means[:, :bits] = codes * separation
    return means


def synth_blobs(classes, dims, per_class, separation, seed=0):
    """Unit-variance Gaussian clusters, one per class, as a float Dataset."""
    if classes <= 0 or dims <= 0 or per_class <= 0:
        raise SpecError("classes, dims and per_class must be positive")
    rng = seeded_rng(seed)
    means = _class_means(classes, dims, float(separation))
    labels = np.repeat(np.arange(classes), per_class)
    x = means[labels] + rng.standard_normal((len(labels), dims))
    order = rng.permutation(len(labels))
    return Dataset(x[order].astype(np.float32), labels[order], name="blobs")


def blobs_as_images(dataset, shape=Config.INPUT_SHAPE, seed=0):
    """Lift blob vectors into image-shaped inputs through a fixed random projection."""
    dims = dataset.x.shape[1]
    size = int(np.prod(shape))
    rng = seeded_rng(seed)
    projection = rng.standard_normal((dims, size)) / np.sqrt(dims)
    images = 0.5 + 0.1 * (dataset.x.astype(np.float64) @ projection)
    return Dataset(images.reshape((len(dataset),) + tuple(shape)).astype(np.float32),
                   dataset.y, name=dataset.name)


def blobs_split(classes=Config.NUM_CLASSES, dims=8, per_class=60, separation=10.0,
                holdout_per_class=20, seed=0, as_images=False):
    """Train/validation split of synthetic blobs, optionally image-shaped."""
    data = synth_blobs(classes, dims, per_class, separation, seed)
    if as_images:
        data = blobs_as_images(data, seed=seed)
    return stratified_holdout(data, per_class=holdout_per_class, seed=seed)
