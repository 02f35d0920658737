"""Candidate sweep per (budget, mode) and per-budget selection."""
from app.core.config import Config, FULL
from app.core.errors import NoFeasibleModelError
from app.core.logs import get_logger
from app.core.rng import derive_seed
from app.core.training import TrainedCandidate, select_best
from app.fastgrnn.candidates import build_candidates
from app.fastgrnn.model import SequenceMode
from app.fastgrnn.training import fastgrnn_train
from app.managers.training_pool import TrainingPool

log = get_logger("fastgrnn")


def sweep_jobs(mode, budgets=Config.BUDGETS_KB, scale=FULL):
    """(budget, spec) training jobs; desk scale keeps the closest scale.candidates(3) per budget."""
    jobs = []
    for budget in sorted(budgets):
        specs = build_candidates(budget, mode)
        for spec in specs[:scale.candidates(len(specs))]:
            if spec not in (s for _, s in jobs):
                jobs.append((budget, spec))
    return jobs


def fastgrnn_sweep(split, mode, budgets=Config.BUDGETS_KB, scale=FULL, seed=0, workers=1):
    """Train every candidate of `mode` across `budgets` once."""
    mode = SequenceMode.parse(mode)
    jobs = sweep_jobs(mode, budgets, scale)
    epochs = scale.epochs(Config.FASTGRNN_EPOCHS)
    log.info("fastgrnn sweep", mode=mode.value, candidates=len(jobs), epochs=epochs)

    def run(job):
        order, (budget, spec) = job
        model, history = fastgrnn_train(split, spec, epochs=epochs, budget_kb=budget,
                                        seed=derive_seed(seed, "fastgrnn", mode.value, order))
        log.info("candidate trained", spec=str(spec), budget_kb=budget, val_acc=history.best_val_acc)
        return TrainedCandidate(spec, model.footprint(), history.best_val_acc, model, history, order)

    return TrainingPool(workers).map(run, list(enumerate(jobs)))


def select_for_budget(candidates, budget_kb, mode=None):
    """Best validated candidate that fits, including ones trained for smaller budgets."""
    best = select_best(candidates, budget_kb)
    if best is None:
        family = "fastgrnn" if mode is None else f"fastgrnn-{SequenceMode.parse(mode).value}"
        raise NoFeasibleModelError(family, budget_kb)
    return best


def fastgrnn_search(budget_kb, mode, split, scale=FULL, seed=0, workers=1):
    """Best validated FastGRNN model of `mode` within `budget_kb`."""
    budgets = [b for b in Config.BUDGETS_KB if b <= budget_kb]
    return select_for_budget(fastgrnn_sweep(split, mode, budgets, scale, seed, workers), budget_kb, mode)
