import os
from decimal import Decimal

import numpy as np

from app import models  # noqa: F401
from app.core.rng import seeded_rng
from app.core.serialization import load_model
from app.fastgrnn import FastGrnnSpec, init_fastgrnn
from app.harness import EvalReport, ResultCell
from app.managers.results_manager import RESULTS_FILE, ResultsManager, model_filename
from app.managers.training_pool import TrainingPool


def _cell(row="FastGRNN Channel", budget=8, acc=0.48, model=None):
    return ResultCell(row, budget, spec="channel,hidden=4,dw=1,du=1", size_bytes=7752,
                      size_kb=Decimal("7.57"), val_acc=acc, test_acc=acc, model=model)


def test_model_filename():
    assert model_filename("FastGRNN Channel", 64) == "fastgrnn_channel_64KB.bin"
    assert model_filename("Direct Conv", 8) == "direct_conv_8KB.bin"


def test_save_writes_results_and_models(tmp_path):
    model = init_fastgrnn(FastGrnnSpec("channel", 4), seeded_rng(0))
    report = EvalReport()
    report.add(_cell(model=model))
    report.add(ResultCell.infeasible("ProtoNN", 8))
    manager = ResultsManager(str(tmp_path / "out"))
    ok, message, path = manager.save(report)
    assert ok and path.endswith(RESULTS_FILE)
    assert "2 cells, 1 models" in message
    loaded = load_model(manager.model_path("FastGRNN Channel", 8))
    assert np.array_equal(loaded.head_w, model.head_w)

    again = manager.load()
    assert again.get("FastGRNN Channel", 8).test_acc == 0.48
    assert not again.get("ProtoNN", 8).feasible


def test_merge_keeps_existing_cells(tmp_path):
    manager = ResultsManager(str(tmp_path))
    first = EvalReport()
    first.add(_cell("Bonsai", 8, 0.15))
    first.add(_cell("Bonsai", 16, 0.15))
    manager.save(first)
    update = EvalReport()
    update.add(_cell("Bonsai", 16, 0.2))
    manager.save(update, merge=True)
    merged = manager.load()
    assert merged.get("Bonsai", 8).val_acc == 0.15
    assert merged.get("Bonsai", 16).val_acc == 0.2


def test_load_without_results(tmp_path):
    assert ResultsManager(str(tmp_path)).load().cells == {}


def test_save_reports_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    ok, message, path = ResultsManager(str(blocker)).save(EvalReport())
    assert not ok and path is None
    assert message.startswith("error saving results")
    assert not os.path.isdir(blocker)


def test_pool_keeps_submission_order():
    def work(i):
        return i * i

    assert TrainingPool(4).map(work, range(12)) == [i * i for i in range(12)]
    assert TrainingPool(1).map(work, []) == []
    assert TrainingPool(0).workers == 1
