import numpy as np
import pytest

from app.core.config import Config
from app.core.errors import DatasetError, ShapeMismatchError, SpecError
from app.data.cifar import (
    Dataset, LabeledImage, load_cifar10, stratified_holdout, stratified_subset, to_records,
)
from app.data.synthetic import blobs_as_images, synth_blobs
from app.processing import transforms
from app.processing.pipeline import ProcessingPipeline, clear_pipelines, get_pipeline

from tests.conftest import TINY_RECORDS


def test_load_tiny_cifar(cifar_dir):
    train, test = load_cifar10(cifar_dir, expected_records=TINY_RECORDS)
    assert len(train) == 5 * TINY_RECORDS
    assert len(test) == TINY_RECORDS
    assert train.example_shape == Config.INPUT_SHAPE
    # red channel of pixel (0, 0) carries the batch index
    assert train.x[0, 0, 0, 0] == 0
    assert train.x[TINY_RECORDS, 0, 0, 0] == 1
    assert test.x[0, 0, 0, 0] == 5


def test_features_scale_to_unit_range(cifar_dir):
    train, _ = load_cifar10(cifar_dir, expected_records=TINY_RECORDS)
    x = train.features(np.arange(10))
    assert x.dtype == np.float32
    assert 0.0 <= x.min() and x.max() <= 1.0


def test_records_roundtrip(cifar_dir):
    _, test = load_cifar10(cifar_dir, expected_records=TINY_RECORDS)
    assert to_records(test) == (cifar_dir / Config.CIFAR_TEST_FILE).read_bytes()


def test_channel_planar_layout(tmp_path):
    record = np.zeros(Config.CIFAR_RECORD_BYTES, dtype=np.uint8)
    record[0] = 7
    record[1 + 1024 + 5] = 200     # green plane, row 0, column 5
    for name in list(Config.CIFAR_TRAIN_FILES) + [Config.CIFAR_TEST_FILE]:
        (tmp_path / name).write_bytes(record.tobytes())
    _, test = load_cifar10(tmp_path, expected_records=1)
    assert test.y[0] == 7
    assert test.x[0, 0, 5, 1] == 200
    assert test.x[0].sum() == 200


def test_missing_batch_file(cifar_dir):
    (cifar_dir / Config.CIFAR_TEST_FILE).unlink()
    with pytest.raises(DatasetError, match="missing"):
        load_cifar10(cifar_dir, expected_records=TINY_RECORDS)


def test_truncated_batch_file(cifar_dir):
    path = cifar_dir / Config.CIFAR_TRAIN_FILES[2]
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(DatasetError, match="multiple"):
        load_cifar10(cifar_dir, expected_records=TINY_RECORDS)


def test_wrong_record_count(cifar_dir):
    with pytest.raises(DatasetError, match="records"):
        load_cifar10(cifar_dir)


def test_bad_label_byte(cifar_dir):
    path = cifar_dir / Config.CIFAR_TRAIN_FILES[0]
    data = bytearray(path.read_bytes())
    data[0] = 12
    path.write_bytes(bytes(data))
    with pytest.raises(DatasetError, match="label"):
        load_cifar10(cifar_dir, expected_records=TINY_RECORDS)


def test_stratified_holdout_is_balanced_and_disjoint(cifar_dir):
    train, test = load_cifar10(cifar_dir, expected_records=TINY_RECORDS)
    split = stratified_holdout(train, per_class=5, seed=3, test=test)
    assert split.validation.class_counts().tolist() == [5] * 10
    assert len(split.train) == len(train) - 50
    assert not set(split.train_indices) & set(split.validation_indices)
    assert split.test is test


def test_holdout_is_deterministic(cifar_dir):
    train, _ = load_cifar10(cifar_dir, expected_records=TINY_RECORDS)
    a = stratified_holdout(train, per_class=5, seed=3)
    b = stratified_holdout(train, per_class=5, seed=3)
    c = stratified_holdout(train, per_class=5, seed=4)
    assert np.array_equal(a.validation_indices, b.validation_indices)
    assert not np.array_equal(a.validation_indices, c.validation_indices)


def test_holdout_needs_enough_examples(cifar_dir):
    train, _ = load_cifar10(cifar_dir, expected_records=TINY_RECORDS)
    with pytest.raises(DatasetError):
        stratified_holdout(train, per_class=100)


def test_stratified_subset_sizes(cifar_dir):
    train, _ = load_cifar10(cifar_dir, expected_records=TINY_RECORDS)
    subset = stratified_subset(train, 53, seed=0)
    assert len(subset) == 53
    assert subset.class_counts().tolist() == [6, 6, 6, 5, 5, 5, 5, 5, 5, 5]


def test_reads_counter(cifar_dir):
    _, test = load_cifar10(cifar_dir, expected_records=TINY_RECORDS)
    test.features(np.arange(7))
    test.features()
    assert test.reads == 7 + TINY_RECORDS


def test_getitem_returns_labeled_image(cifar_dir):
    _, test = load_cifar10(cifar_dir, expected_records=TINY_RECORDS)
    item = test[3]
    assert item.label == 3
    assert item.image.is_cifar()


def test_label_range_checked():
    with pytest.raises(DatasetError):
        LabeledImage(None, 10)


def test_dataset_length_mismatch():
    with pytest.raises(DatasetError):
        Dataset(np.zeros((3, 2)), [0, 1])


# -- synthetic ------------------------------------------------------------------

def test_synth_blobs_are_separable():
    data = synth_blobs(10, 16, 30, separation=12.0, seed=0)
    x = data.features()
    means = np.stack([x[data.y == c].mean(axis=0) for c in range(10)])
    nearest = np.argmin(((x[:, None, :] - means[None]) ** 2).sum(axis=2), axis=1)
    assert np.mean(nearest == data.y) > 0.95


def test_synth_blobs_binary_codes_for_few_dims():
    assert synth_blobs(10, 4, 5, separation=3.0).x.shape == (50, 4)
    with pytest.raises(SpecError):
        synth_blobs(10, 3, 5, separation=3.0)


def test_blobs_as_images_shape():
    images = blobs_as_images(synth_blobs(10, 8, 2, 5.0))
    assert images.example_shape == Config.INPUT_SHAPE


# -- processing -------------------------------------------------------------------

def test_channel_standardization():
    images = np.random.default_rng(0).normal(3.0, 2.0, size=(50, 4, 4, 3)).astype(np.float32)
    mean, std = transforms.channel_stats(images)
    out = transforms.channel_standardizer(mean, std)(images)
    assert np.allclose(out.mean(axis=(0, 1, 2)), 0.0, atol=1e-5)
    assert np.allclose(out.std(axis=(0, 1, 2)), 1.0, atol=1e-4)


def test_constant_channel_keeps_unit_std():
    _, std = transforms.channel_stats(np.ones((2, 2, 2, 3)))
    assert std.tolist() == [1.0, 1.0, 1.0]


def test_standardizer_checks_channels():
    with pytest.raises(ShapeMismatchError):
        transforms.channel_standardizer([0, 0, 0], [1, 1, 1])(np.zeros((1, 2, 2, 4)))


def test_pipeline_runs_stages_in_order():
    pipeline = ProcessingPipeline().add_stage(lambda x: x + 1, "inc").add_stage(transforms.flatten)
    assert pipeline.stage_names == ["inc", "flatten"]
    assert pipeline.run(np.zeros((2, 2, 2, 3))).shape == (2, 12)


def test_dataset_applies_pipeline():
    clear_pipelines()
    pipeline = get_pipeline("flat").add_stage(transforms.flatten)
    assert get_pipeline("flat") is pipeline
    data = Dataset(np.zeros((4, 2, 2, 3), dtype=np.uint8), [0, 1, 2, 3], pipeline=pipeline)
    assert data.features().shape == (4, 12)
    assert data.subset([0, 1]).pipeline is pipeline
    clear_pipelines()
