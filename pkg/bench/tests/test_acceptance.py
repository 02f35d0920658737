"""Desk-scale smoke runs on the real CIFAR-10 binaries.

Skipped unless MEMCLF_DATA_DIR points at the extracted binary batches.
Thresholds are well below the full-scale accuracies; a 5,000-image
subset and 30 epochs cannot reproduce those.
"""
import numpy as np
import pytest

from app.bonsai import BonsaiSpec, bonsai_train
from app.core.config import DESK, Config
from app.core.rng import seeded_rng
from app.core.sizing import kept_count
from app.directconv import CnnModel, train_cnn
from app.fastgrnn import FastGrnnSpec, fastgrnn_train
from app.fastgrnn.search import fastgrnn_sweep, sweep_jobs
from app.harness import evaluate, prepare_split, run_experiment
from app.protonn import protonn_train

pytestmark = pytest.mark.slow

EPOCHS = DESK.epoch_cap
SMALLEST_CNN = "A,C2(16,3),C1(8,3),C1(32,3),M,Dr,D*"


@pytest.fixture(scope="module")
def desk_split(request):
    data_dir = request.getfixturevalue("data_dir")
    return prepare_split(data_dir, DESK, seed=0)


def test_subset_is_stratified(desk_split):
    counts = np.bincount(desk_split.train.y, minlength=Config.NUM_CLASSES)
    assert counts.sum() == DESK.train_subset
    assert set(counts) == {DESK.train_subset // Config.NUM_CLASSES}
    assert len(desk_split.validation) == Config.HOLDOUT_PER_CLASS * Config.NUM_CLASSES


def test_fastgrnn_channel_smoke(desk_split):
    spec = FastGrnnSpec("channel", 60, 0.3, 0.3)
    model, history = fastgrnn_train(desk_split, spec, epochs=EPOCHS, budget_kb=16, seed=0)
    assert history.best_val_acc >= 0.35
    assert model.footprint().total_bytes <= 16 * 1024
    cell = model.cells[0]
    assert np.count_nonzero(cell.W) == kept_count(0.3, cell.W.size)
    assert np.count_nonzero(cell.U) == kept_count(0.3, cell.U.size)


def test_direct_conv_smoke(desk_split):
    model = CnnModel.initialize(SMALLEST_CNN, seeded_rng(0))
    _, history = train_cnn(model, desk_split, epochs=EPOCHS, seed=0)
    assert history.best_val_acc >= 0.40


def test_bonsai_smoke(desk_split):
    model, _, history = bonsai_train(desk_split, BonsaiSpec(3, 11), epochs=EPOCHS, seed=0)
    assert history.best_val_acc >= 0.18
    assert model.footprint().total_bytes <= 64 * 1024


def test_protonn_smoke(desk_split):
    model, history = protonn_train(desk_split, 2, 4, density=1.0, gamma=1.5,
                                   lr=Config.PROTONN_LRS[1], epochs=EPOCHS, seed=0)
    assert history.best_val_acc >= 0.12
    assert evaluate(model, desk_split.validation) == pytest.approx(history.best_val_acc)


def test_fastgrnn_accuracy_grows_with_budget(desk_split):
    budgets = (8, 16, 32, 64)
    jobs = sweep_jobs("channel", budgets, DESK)
    candidates = fastgrnn_sweep(desk_split, "channel", budgets, DESK, seed=0)
    by_budget = {}
    for cand in candidates:
        budget = jobs[cand.order][0]
        by_budget[budget] = max(by_budget.get(budget, 0.0), cand.val_acc)
    accs = [by_budget[b] for b in budgets]
    inversions = sum(1 for a, b in zip(accs, accs[1:]) if b < a)
    assert inversions <= 1, accs


def test_protonn_cells_need_no_training(desk_split):
    report = run_experiment(["protonn"], [8, 16], desk_split, scale=DESK)
    assert not report.get("ProtoNN", 8).feasible
    assert not report.get("ProtoNN", 16).feasible
    assert report.selected_models() == []
