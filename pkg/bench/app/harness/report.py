"""Budget-by-method tables in markdown and CSV, and reading the CSV back."""
from decimal import Decimal, InvalidOperation
import io

import pandas as pd

from app.core.config import Config
from app.core.errors import SpecError
from app.harness.experiment import EvalReport, ResultCell

CSV_COLUMNS = ["row", "budget_kb", "status", "spec", "size_bytes", "size_kb", "val_acc", "test_acc"]
NO_FEASIBLE = "no feasible model"
EMPTY_CELL = "--"


def format_accuracy(value):
    return f"{value:.{Config.ACCURACY_DECIMALS}f}"


def format_cell(cell: ResultCell | None) -> str:
    """`0.657 [58.23KB]`; `--` when nothing fits; blank when the cell was never run."""
    if cell is None:
        return ""
    if not cell.feasible:
        return EMPTY_CELL
    size = f" [{cell.size_kb:.2f}KB]" if cell.size_kb is not None else ""
    if cell.score is None:
        return size.strip()
    suffix = "" if cell.test_acc is not None else " (val)"
    return f"{format_accuracy(cell.score)}{size}{suffix}"


def _markdown(report: EvalReport) -> str:
    header = ["Method"] + [f"{b}KB" for b in report.budgets]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    best = report.best_per_budget()
    for row in report.rows:
        cells = [row]
        for budget in report.budgets:
            text = format_cell(report.get(row, budget))
            if row in best.get(budget, ()):
                text = f"**{text}**"
            cells.append(text)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _frame(report: EvalReport) -> pd.DataFrame:
    records = []
    for row in report.rows:
        for budget in report.budgets:
            cell = report.get(row, budget)
            if cell is None:
                continue
            records.append({
                "row": row,
                "budget_kb": budget,
                "status": "ok" if cell.feasible else NO_FEASIBLE,
                "spec": cell.spec,
                "size_bytes": "" if cell.size_bytes is None else str(cell.size_bytes),
                "size_kb": "" if cell.size_kb is None else f"{cell.size_kb:.2f}",
                "val_acc": "" if cell.val_acc is None else format_accuracy(cell.val_acc),
                "test_acc": "" if cell.test_acc is None else format_accuracy(cell.test_acc),
            })
    return pd.DataFrame(records, columns=CSV_COLUMNS)


def emit_report(report: EvalReport, fmt="markdown") -> str:
    if fmt in ("markdown", "md"):
        return _markdown(report)
    if fmt == "csv":
        return _frame(report).to_csv(index=False, lineterminator="\n")
    raise SpecError(f"unknown report format {fmt!r}, expected markdown or csv")


def _optional(value, convert, column, line):
    if value == "":
        return None
    try:
        return convert(value)
    except (ValueError, InvalidOperation):
        raise SpecError(f"results line {line}: bad {column} value {value!r}") from None


def parse_report(text: str) -> EvalReport:
    """Rebuild an EvalReport from `emit_report(..., "csv")` output."""
    report = EvalReport()
    if not text.strip():
        return report
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SpecError(f"malformed results CSV: {e}") from None
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise SpecError(f"results CSV lacks columns {missing}")

    for line, rec in enumerate(frame.to_dict("records"), start=2):
        budget = _optional(rec["budget_kb"], int, "budget_kb", line)
        if budget not in Config.BUDGETS_KB:
            raise SpecError(f"results line {line}: budget {rec['budget_kb']!r} not in {Config.BUDGETS_KB}")
        if rec["status"] == NO_FEASIBLE:
            report.add(ResultCell.infeasible(rec["row"], budget))
            continue
        if rec["status"] != "ok":
            raise SpecError(f"results line {line}: unknown status {rec['status']!r}")
        report.add(ResultCell(
            row=rec["row"],
            budget_kb=budget,
            spec=rec["spec"],
            size_bytes=_optional(rec["size_bytes"], int, "size_bytes", line),
            size_kb=_optional(rec["size_kb"], Decimal, "size_kb", line),
            val_acc=_optional(rec["val_acc"], float, "val_acc", line),
            test_acc=_optional(rec["test_acc"], float, "test_acc", line),
        ))
    return report
