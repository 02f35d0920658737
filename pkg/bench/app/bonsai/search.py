"""Exhaustive depth x projection-dimension sweep with per-budget selection."""
from dataclasses import dataclass, field

import numpy as np

from app.core.config import Config, FULL
from app.core.errors import NoFeasibleModelError
from app.core.logs import get_logger
from app.core.rng import derive_seed
from app.core.training import TrainedCandidate, select_best
from app.bonsai.model import BonsaiSpec
from app.bonsai.training import bonsai_train
from app.managers.training_pool import TrainingPool

log = get_logger("bonsai")


def sweep_specs(max_budget_kb=Config.MAX_BUDGET_KB, input_dim=Config.INPUT_DIM):
    """For each depth, dims 1, 2, ... up to the first one that no longer fits."""
    specs = []
    for depth in range(1, Config.BONSAI_MAX_DEPTH + 1):
        dim = 1
        while BonsaiSpec(depth, dim).footprint(input_dim).fits(max_budget_kb):
            specs.append(BonsaiSpec(depth, dim))
            dim += 1
    return specs


def _budget_band(footprint, budgets):
    for budget in sorted(budgets):
        if footprint.fits(budget):
            return budget
    return None


def desk_specs(specs, scale, input_dim=Config.INPUT_DIM, budgets=Config.BUDGETS_KB):
    """Evenly spaced subset per budget band, so every budget keeps candidates."""
    if scale.candidate_divisor == 1:
        return specs
    bands = {}
    for spec in sorted(specs, key=lambda s: s.footprint(input_dim).total_bytes):
        bands.setdefault(_budget_band(spec.footprint(input_dim), budgets), []).append(spec)
    kept = set()
    for members in bands.values():
        count = scale.candidates(len(members))
        for i in np.linspace(0, len(members) - 1, count).round().astype(int):
            kept.add(members[i])
    return [spec for spec in specs if spec in kept]


@dataclass
class BonsaiSweep:
    candidates: list
    depth_summary: dict = field(default_factory=dict)   # depth -> mean validation accuracy


def bonsai_sweep(split, max_budget_kb=Config.MAX_BUDGET_KB, scale=FULL, seed=0, workers=1):
    """Train every sweep spec once; selection per budget happens afterwards."""
    input_dim = split.train.x[0].size
    specs = sweep_specs(max_budget_kb, input_dim)
    order = {spec: i for i, spec in enumerate(specs)}
    specs = desk_specs(specs, scale, input_dim)
    epochs = scale.epochs(Config.BONSAI_EPOCHS)
    log.info("bonsai sweep", specs=len(specs), max_budget_kb=max_budget_kb, epochs=epochs)

    def run(spec):
        model, _, history = bonsai_train(split, spec, epochs=epochs,
                                         seed=derive_seed(seed, "bonsai", spec.depth, spec.dim))
        return TrainedCandidate(spec, model.footprint(), history.best_val_acc, model, history, order[spec])

    candidates = TrainingPool(workers).map(run, specs)
    summary = {}
    for depth in sorted({c.spec.depth for c in candidates}):
        summary[depth] = float(np.mean([c.val_acc for c in candidates if c.spec.depth == depth]))
    return BonsaiSweep(candidates, summary)


def select_for_budget(sweep: BonsaiSweep, budget_kb):
    best = select_best(sweep.candidates, budget_kb)
    if best is None:
        raise NoFeasibleModelError("bonsai", budget_kb)
    return best


def bonsai_search(budget_kb, split, scale=FULL, seed=0, workers=1):
    """Best validated Bonsai model within `budget_kb`."""
    return select_for_budget(bonsai_sweep(split, budget_kb, scale, seed, workers), budget_kb)
