"""Runs every requested family at every budget and collects one report."""
from dataclasses import dataclass, field
from decimal import Decimal

from app.core.config import Config, DESK
from app.core.errors import NoFeasibleModelError, SpecError
from app.core.logs import get_logger
from app import bonsai, fastgrnn, protonn
from app.directconv import sampling_search
from app.data.cifar import load_cifar10, stratified_holdout, stratified_subset
from app.harness.evaluation import AccessAudit
from app.processing import transforms
from app.processing.pipeline import clear_pipelines, get_pipeline

log = get_logger("experiment")

FAMILY_ROWS = {
    "directconv": ("Direct Conv",),
    "protonn": ("ProtoNN",),
    "bonsai": ("Bonsai",),
    "fastgrnn": ("FastGRNN Row", "FastGRNN Channel", "FastGRNN Multi"),
}
REPORT_ROWS = tuple(row for rows in FAMILY_ROWS.values() for row in rows)
FASTGRNN_ROW_MODES = {"FastGRNN Row": "row", "FastGRNN Channel": "channel", "FastGRNN Multi": "multi"}


@dataclass
class ResultCell:
    row: str
    budget_kb: int
    feasible: bool = True
    spec: str = ""
    size_bytes: int | None = None
    size_kb: Decimal | None = None
    val_acc: float | None = None
    test_acc: float | None = None
    model: object = field(default=None, repr=False, compare=False)

    @classmethod
    def infeasible(cls, row, budget_kb):
        return cls(row, budget_kb, feasible=False)

    @classmethod
    def from_candidate(cls, row, budget_kb, candidate):
        fp = candidate.footprint
        return cls(row, budget_kb, True, str(candidate.spec), fp.total_bytes, fp.total_kb,
                   candidate.val_acc, None, candidate.model)

    @property
    def score(self):
        """Accuracy shown in the report: test when measured, validation otherwise."""
        return self.test_acc if self.test_acc is not None else self.val_acc


@dataclass
class EvalReport:
    budgets: tuple = Config.BUDGETS_KB
    cells: dict = field(default_factory=dict)     # (row, budget_kb) -> ResultCell
    test_reads: int = 0

    def add(self, cell: ResultCell):
        self.cells[(cell.row, cell.budget_kb)] = cell
        if cell.budget_kb not in self.budgets:
            self.budgets = tuple(sorted(set(self.budgets) | {cell.budget_kb}))

    def get(self, row, budget_kb):
        return self.cells.get((row, budget_kb))

    @property
    def rows(self):
        present = {row for row, _ in self.cells}
        known = [row for row in REPORT_ROWS if row in present]
        return known + sorted(present - set(REPORT_ROWS))

    def best_per_budget(self):
        """budget -> rows whose accuracy, at report precision, is the column maximum."""
        best = {}
        for budget in self.budgets:
            scored = [(round(c.score, Config.ACCURACY_DECIMALS), c.row)
                      for c in (self.get(row, budget) for row in self.rows)
                      if c is not None and c.feasible and c.score is not None]
            if scored:
                top = max(s for s, _ in scored)
                best[budget] = [row for s, row in scored if s == top]
        return best

    def selected_models(self):
        """Distinct models selected anywhere in the report, first occurrence order."""
        seen, models = set(), []
        for cell in self.cells.values():
            if cell.model is not None and id(cell.model) not in seen:
                seen.add(id(cell.model))
                models.append(cell.model)
        return models


def prepare_split(data_dir, scale=DESK, seed=0, standardize=False):
    """Load CIFAR-10, hold out the validation set and apply the scale's training subset."""
    if data_dir is None:
        raise SpecError(f"no data directory given and {Config.DATA_DIR_ENV} is unset")
    train, test = load_cifar10(data_dir)
    split = stratified_holdout(train, Config.HOLDOUT_PER_CLASS, seed, test)
    if scale.train_subset is not None and scale.train_subset < len(split.train):
        split.train = stratified_subset(split.train, scale.train_subset, seed)
        split.train.name = "train"
    if standardize:
        mean, std = transforms.channel_stats(split.train.features())
        clear_pipelines()
        pipeline = get_pipeline("standardize").add_stage(transforms.channel_standardizer(mean, std))
        for dataset in (split.train, split.validation, split.test):
            dataset.pipeline = pipeline
    log.info("split ready", scale=scale.name, n_train=len(split.train), n_validation=len(split.validation))
    return split


def _run_directconv(split, budgets, scale, seed, workers):
    for budget in budgets:
        try:
            result = sampling_search(budget, split, n=scale.cnn_samples, seed=seed,
                                     partial_epochs=scale.epochs(Config.CNN_PARTIAL_EPOCHS),
                                     full_epochs=scale.epochs(Config.CNN_FULL_EPOCHS), workers=workers)
            yield ResultCell.from_candidate("Direct Conv", budget, result.best)
        except NoFeasibleModelError:
            yield ResultCell.infeasible("Direct Conv", budget)


def _run_protonn(split, budgets, scale, seed, workers):
    input_dim = split.train.x[0].size
    feasible = [b for b in budgets if protonn.feasible_grid(b, input_dim)]
    candidates = protonn.protonn_sweep(split, max(feasible), scale, seed, workers) if feasible else []
    for budget in budgets:
        if budget not in feasible:
            yield ResultCell.infeasible("ProtoNN", budget)
        else:
            yield ResultCell.from_candidate("ProtoNN", budget, protonn.select_for_budget(candidates, budget))


def _run_bonsai(split, budgets, scale, seed, workers):
    sweep = bonsai.bonsai_sweep(split, max(budgets), scale, seed, workers)
    for budget in budgets:
        try:
            yield ResultCell.from_candidate("Bonsai", budget, bonsai.select_for_budget(sweep, budget))
        except NoFeasibleModelError:
            yield ResultCell.infeasible("Bonsai", budget)


def _run_fastgrnn(split, budgets, scale, seed, workers):
    for row, mode in FASTGRNN_ROW_MODES.items():
        candidates = fastgrnn.fastgrnn_sweep(split, mode, budgets, scale, seed, workers)
        for budget in budgets:
            try:
                yield ResultCell.from_candidate(row, budget, fastgrnn.select_for_budget(candidates, budget, mode))
            except NoFeasibleModelError:
                yield ResultCell.infeasible(row, budget)


_RUNNERS = {
    "directconv": _run_directconv,
    "protonn": _run_protonn,
    "bonsai": _run_bonsai,
    "fastgrnn": _run_fastgrnn,
}


def run_experiment(families, budgets, split, seed=0, scale=DESK, workers=1):
    """Search every family at every budget, then test each selected model once."""
    unknown = [f for f in families if f not in _RUNNERS]
    if unknown:
        raise SpecError(f"unknown families: {unknown}")
    budgets = tuple(sorted(set(budgets)))
    bad = [b for b in budgets if b not in Config.BUDGETS_KB]
    if bad or not budgets:
        raise SpecError(f"budgets must be a non-empty subset of {Config.BUDGETS_KB}, got {list(budgets)}")

    audit = AccessAudit(split.test) if split.test is not None else None
    report = EvalReport(budgets=budgets)
    for family in (f for f in FAMILY_ROWS if f in set(families)):
        log.info("family started", family=family, budgets=list(budgets), scale=scale.name)
        for cell in _RUNNERS[family](split, budgets, scale, seed, workers):
            report.add(cell)
            log.info("cell selected", row=cell.row, budget_kb=cell.budget_kb, spec=cell.spec or None,
                     val_acc=cell.val_acc)

    if audit is not None:
        test_accs = {id(model): audit.evaluate(model) for model in report.selected_models()}
        for cell in report.cells.values():
            if cell.model is not None:
                cell.test_acc = test_accs[id(cell.model)]
        audit.verify()
        report.test_reads = audit.reads
    return report
