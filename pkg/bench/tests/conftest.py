import os

import numpy as np
import pytest

from app.core.config import Config
from app.core.rng import seeded_rng
from app.data.synthetic import blobs_split

# records per synthetic batch file: 4 per class
TINY_RECORDS = 40


def write_cifar_dir(directory, records=TINY_RECORDS, seed=0):
    """Write five train batches and a test batch in the CIFAR-10 binary layout."""
    rng = seeded_rng(seed)
    files = list(Config.CIFAR_TRAIN_FILES) + [Config.CIFAR_TEST_FILE]
    for i, name in enumerate(files):
        labels = np.arange(records, dtype=np.uint8) % Config.NUM_CLASSES
        pixels = rng.integers(0, 256, size=(records, Config.INPUT_DIM), dtype=np.uint8)
        # one recognisable pixel per record: red (0, 0) holds the file index
        pixels[:, 0] = i
        rows = np.concatenate([labels[:, None], pixels], axis=1)
        (directory / name).write_bytes(rows.tobytes())
    return directory


@pytest.fixture
def cifar_dir(tmp_path):
    return write_cifar_dir(tmp_path)


@pytest.fixture(scope="session")
def blob_split():
    """Flat 8-dim blobs: 40 train and 20 validation examples per class."""
    return blobs_split(dims=8, per_class=60, separation=10.0, holdout_per_class=20, seed=0)


@pytest.fixture(scope="session")
def image_split():
    """The same blobs lifted to 32x32x3 images."""
    return blobs_split(dims=8, per_class=30, separation=10.0, holdout_per_class=10, seed=1,
                       as_images=True)


@pytest.fixture(scope="session")
def data_dir():
    path = os.environ.get(Config.DATA_DIR_ENV)
    if not path:
        pytest.skip(f"{Config.DATA_DIR_ENV} is not set")
    return path
