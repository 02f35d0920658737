"""Results manager for persisting selected models and the results CSV."""

import os
import re

from app.core.errors import MemClfError
from app.core.logs import get_logger
from app.core.serialization import save_model
from app.harness.experiment import EvalReport
from app.harness.report import emit_report, parse_report

log = get_logger("results")

RESULTS_FILE = "results.csv"
MODELS_DIR = "models"


def model_filename(row, budget_kb):
    """`FastGRNN Channel` at 64KB -> `fastgrnn_channel_64KB.bin`."""
    slug = re.sub(r"[^a-z0-9]+", "_", row.lower()).strip("_")
    return f"{slug}_{budget_kb}KB.bin"


class ResultsManager:
    """Owns one output directory: results.csv plus one model file per selected cell."""

    def __init__(self, output_dir="results"):
        self.output_dir = output_dir
        self.results_path = os.path.join(output_dir, RESULTS_FILE)
        self.models_dir = os.path.join(output_dir, MODELS_DIR)

    def load(self) -> EvalReport:
        """Existing results, or an empty report when none were written yet."""
        if not os.path.exists(self.results_path):
            return EvalReport()
        with open(self.results_path, "r", encoding="utf-8") as f:
            return parse_report(f.read())

    def save(self, report: EvalReport, merge=False):
        """Write results.csv and every model the report still holds.

        merge=True keeps cells already on disk that `report` does not replace.
        Returns (success, message, path).
        """
        try:
            os.makedirs(self.output_dir, exist_ok=True)
            if merge:
                merged = self.load()
                for cell in report.cells.values():
                    merged.add(cell)
                report = merged
            saved = self._save_models(report)
            with open(self.results_path, "w", encoding="utf-8", newline="") as f:
                f.write(emit_report(report, "csv"))
            message = f"results saved: {self.results_path} ({len(report.cells)} cells, {saved} models)"
            log.info("results saved", path=self.results_path, cells=len(report.cells), models=saved)
            return True, message, self.results_path
        except (OSError, MemClfError) as e:
            log.error("saving results failed", error=str(e))
            return False, f"error saving results: {e}", None

    def _save_models(self, report):
        saved = 0
        for cell in report.cells.values():
            if cell.model is None:
                continue
            os.makedirs(self.models_dir, exist_ok=True)
            save_model(self.model_path(cell.row, cell.budget_kb), cell.model)
            saved += 1
        return saved

    def model_path(self, row, budget_kb):
        return os.path.join(self.models_dir, model_filename(row, budget_kb))
