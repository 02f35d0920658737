"""Sampling-based architecture search under a memory budget."""
from dataclasses import dataclass, field
from functools import lru_cache

from app.core.config import Config
from app.core.errors import NoFeasibleModelError, SpecError
from app.core.logs import get_logger
from app.core.rng import derive_seed, seeded_rng
from app.core.training import TrainedCandidate, select_best
from app.directconv.arch import enumerate_models
from app.directconv.model import CnnModel
from app.directconv.planner import cnn_footprint
from app.directconv.training import train_cnn
from app.managers.training_pool import TrainingPool

log = get_logger("directconv")


@lru_cache(maxsize=1)
def footprint_table():
    """(arch, footprint) for every enumerated architecture, in enumeration order."""
    return tuple((arch, cnn_footprint(arch)) for arch in enumerate_models())


def feasible_archs(budget_kb, archs=None):
    """(order, arch, footprint) of the architectures fitting `budget_kb`."""
    table = footprint_table() if archs is None else [(a, cnn_footprint(a)) for a in archs]
    return [(i, arch, fp) for i, (arch, fp) in enumerate(table) if fp.fits(budget_kb)]


@dataclass
class CnnSearchResult:
    budget_kb: int
    best: TrainedCandidate
    pool: list = field(default_factory=list)   # partially trained candidates


def sampling_search(budget_kb, split, n=Config.CNN_SAMPLES, seed=0,
                    partial_epochs=Config.CNN_PARTIAL_EPOCHS, full_epochs=Config.CNN_FULL_EPOCHS,
                    patience=Config.CNN_PATIENCE, workers=1, archs=None):
    """Sample feasible architectures, partially train each, fully train the best.

    `archs` restricts the search space (all enumerated models by default).
    """
    if budget_kb not in Config.BUDGETS_KB:
        raise SpecError(f"budget must be one of {Config.BUDGETS_KB}, got {budget_kb}")
    feasible = feasible_archs(budget_kb, archs)
    if not feasible:
        raise NoFeasibleModelError("directconv", budget_kb)

    rng = seeded_rng(derive_seed(seed, "directconv", budget_kb))
    if n >= len(feasible):
        picked = feasible
    else:
        chosen = sorted(rng.choice(len(feasible), size=n, replace=False).tolist())
        picked = [feasible[i] for i in chosen]
    log.info("sampling architectures", budget_kb=budget_kb, feasible=len(feasible), sampled=len(picked))

    def run(entry, epochs, stop_patience):
        order, arch, fp = entry
        arch_seed = derive_seed(seed, "cnn", order)
        model = CnnModel.initialize(arch, seeded_rng(arch_seed))
        model, history = train_cnn(model, split, epochs=epochs, patience=stop_patience, seed=arch_seed)
        log.info("candidate trained", arch=str(arch), kb=str(fp.total_kb), val_acc=history.best_val_acc)
        return TrainedCandidate(arch, fp, history.best_val_acc, model, history, order)

    pool = TrainingPool(workers).map(lambda e: run(e, partial_epochs, None), picked)
    winner = select_best(pool)

    # same seed as the partial run, so full training replays its first epochs
    entry = (winner.order, winner.spec, winner.footprint)
    best = run(entry, full_epochs, patience)
    log.info("search done", budget_kb=budget_kb, arch=str(best.spec), val_acc=best.val_acc)
    return CnnSearchResult(budget_kb, best, pool)
