import os
from decimal import Decimal

import pytest

from app import bonsai
from app.bonsai.training import init_bonsai
from app.core.config import Config
from app.core.rng import seeded_rng
from app.core.training import TrainingHistory
from app.harness import EvalReport, ResultCell, emit_report
import main as main_module
from main import main


@pytest.fixture(autouse=True)
def no_data_dir(monkeypatch):
    monkeypatch.delenv(Config.DATA_DIR_ENV, raising=False)


@pytest.mark.parametrize("argv,expected", [
    (["--family", "fastgrnn", "--mode", "row", "--hidden", "45", "--dw", "0.2", "--du", "0.2"],
     "7752 B (7.57KB)"),
    (["--family", "fastgrnn", "--mode", "multi", "--hidden", "12"], "8128 B (7.94KB)"),
    (["--family", "bonsai", "--depth", "2", "--dim", "3"], "15800 B (15.43KB)"),
    (["--family", "protonn", "--d", "2", "--m", "4"], "24772 B (24.19KB)"),
    (["--family", "directconv", "--arch", "A,C1(4,5),M,C1(4,5),Dr,D*"], "6584 B (6.43KB)"),
])
def test_sizes(capsys, argv, expected):
    assert main(["sizes"] + argv) == 0
    assert capsys.readouterr().out.strip() == expected


@pytest.mark.parametrize("argv", [
    ["sizes", "--family", "fastgrnn", "--hidden", "45", "--dw", "1.5"],
    ["sizes", "--family", "fastgrnn", "--hidden", "45", "--dw", "abc"],
    ["sizes", "--family", "svm"],
    ["search", "--family", "bonsai", "--budget", "12"],
    [],
])
def test_bad_flags_exit_two(capsys, argv):
    assert main(argv) == 2


def test_missing_spec_flag(capsys):
    assert main(["sizes", "--family", "bonsai", "--depth", "2"]) == 2
    assert "--dim" in capsys.readouterr().err


def test_bad_architecture_text(capsys):
    assert main(["sizes", "--family", "directconv", "--arch", "A,C9(4,5),D*"]) == 2
    assert "error:" in capsys.readouterr().err


def test_protonn_search_below_its_smallest_model(tmp_path, capsys):
    out = tmp_path / "results"
    assert main(["search", "--family", "protonn", "--budget", "8", "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "ProtoNN @ 8KB: no feasible model"
    assert "no feasible model" in (out / "results.csv").read_text()


def test_search_needs_data(tmp_path, capsys):
    assert main(["search", "--family", "bonsai", "--budget", "8", "--out", str(tmp_path)]) == 2
    assert Config.DATA_DIR_ENV in capsys.readouterr().err


def test_report_renders_csv(tmp_path, capsys):
    report = EvalReport()
    report.add(ResultCell("Bonsai", 16, spec="depth=2,dim=3", size_bytes=15800,
                          size_kb=Decimal("15.43"), val_acc=0.16, test_acc=0.153))
    path = tmp_path / "results.csv"
    path.write_text(emit_report(report, "csv"))
    assert main(["report", "--in", str(path)]) == 0
    out = capsys.readouterr().out
    assert "| Bonsai |  | **0.153 [15.43KB]** |" in out
    assert main(["report", "--in", str(path), "--format", "csv"]) == 0
    assert capsys.readouterr().out == path.read_text()


def test_report_rejects_bad_input(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    assert main(["report", "--in", str(path)]) == 2
    assert main(["report", "--in", str(tmp_path / "missing.csv")]) == 2


def test_experiment_rejects_bad_config(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text("budgets: [7]\n")
    assert main(["experiment", "--config", str(path)]) == 2


def test_train_and_eval_need_data(tmp_path):
    model = os.path.join(tmp_path, "m.bin")
    assert main(["train", "--family", "bonsai", "--depth", "1", "--dim", "2", "--model-out", model]) == 2
    assert not os.path.exists(model)


@pytest.mark.parametrize("lr_flag,expected", [([], Config.BONSAI_LR), (["--lr", "0"], 0.0)])
def test_train_passes_the_learning_rate(tmp_path, monkeypatch, capsys, lr_flag, expected):
    seen = {}

    def fake_train(split, spec, epochs, lr, seed):
        seen["lr"] = lr
        model = init_bonsai(spec, Config.INPUT_DIM, seeded_rng(seed))
        return model, model, TrainingHistory(best_val_acc=0.5)

    monkeypatch.setattr(main_module, "prepare_split", lambda *args, **kwargs: None)
    monkeypatch.setattr(bonsai, "bonsai_train", fake_train)
    model = tmp_path / "m.bin"
    argv = ["train", "--family", "bonsai", "--depth", "1", "--dim", "2", "--data-dir", str(tmp_path),
            "--model-out", str(model)] + lr_flag
    assert main(argv) == 0
    assert seen["lr"] == expected
    assert model.exists()


def test_eval_reports_unreadable_models(tmp_path, capsys):
    assert main(["eval", "--model", str(tmp_path / "missing.bin")]) == 1
    assert capsys.readouterr().err.startswith("error: cannot read")
    broken = tmp_path / "broken.bin"
    broken.write_bytes(b"B\x01")
    assert main(["eval", "--model", str(broken)]) == 1
    assert "error:" in capsys.readouterr().err
