"""Budget-driven experiments across model families and their reports."""
from app.harness.evaluation import AccessAudit, evaluate
from app.harness.experiment import (
    REPORT_ROWS, EvalReport, ResultCell, prepare_split, run_experiment,
)
from app.harness.report import emit_report, parse_report
