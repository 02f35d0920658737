"""Grid search over projection dimension, prototype count, gamma and learning rate."""
from dataclasses import dataclass
import itertools

from app.core.config import Config, FULL
from app.core.errors import NoFeasibleModelError
from app.core.logs import get_logger
from app.core.rng import derive_seed, seeded_rng
from app.core.training import TrainedCandidate, select_best
from app.managers.training_pool import TrainingPool
from app.protonn.model import protonn_footprint
from app.protonn.training import protonn_train

log = get_logger("protonn")


@dataclass(frozen=True)
class ProtoNNSpec:
    d: int
    m: int
    gamma: float
    lr: float
    density: float = Config.PROTONN_DENSITY

    def footprint(self, input_dim=Config.INPUT_DIM):
        return protonn_footprint(self.d, self.m, self.density, input_dim)

    def __str__(self):
        return f"d={self.d},m={self.m},gamma={self.gamma:g},lr={self.lr:g},rho={self.density:g}"


def gamma_grid():
    return tuple(1.5 * 10.0 ** n for n in Config.PROTONN_GAMMA_EXPONENTS)


def full_grid():
    """Every grid cell in its canonical order (d, m, gamma, lr)."""
    return [ProtoNNSpec(d, m, g, lr)
            for d, m, g, lr in itertools.product(Config.PROTONN_DIMS, Config.PROTONN_DIMS,
                                                 gamma_grid(), Config.PROTONN_LRS)]


def feasible_grid(budget_kb, input_dim=Config.INPUT_DIM):
    return [spec for spec in full_grid() if spec.footprint(input_dim).fits(budget_kb)]


def _desk_cells(specs, scale, seed):
    """Keep scale.candidates(n) (gamma, lr) cells for every (d, m) pair."""
    if scale.candidate_divisor == 1:
        return specs
    groups = {}
    for spec in specs:
        groups.setdefault((spec.d, spec.m), []).append(spec)
    kept = []
    for (d, m), cells in groups.items():
        rng = seeded_rng(derive_seed(seed, "protonn", d, m))
        picks = sorted(rng.choice(len(cells), size=scale.candidates(len(cells)), replace=False).tolist())
        kept.extend(cells[i] for i in picks)
    return kept


def protonn_sweep(split, max_budget_kb=Config.MAX_BUDGET_KB, scale=FULL, seed=0, workers=1):
    """Train every grid cell feasible at the largest budget once."""
    input_dim = split.train.x[0].size
    order = {spec: i for i, spec in enumerate(full_grid())}
    specs = _desk_cells(feasible_grid(max_budget_kb, input_dim), scale, seed)
    epochs = scale.epochs(Config.PROTONN_EPOCHS)
    log.info("protonn sweep", cells=len(specs), max_budget_kb=max_budget_kb, epochs=epochs)

    def run(spec):
        model, history = protonn_train(split, spec.d, spec.m, spec.density, spec.gamma, spec.lr,
                                       epochs=epochs, seed=derive_seed(seed, "protonn", order[spec]))
        return TrainedCandidate(spec, model.footprint(), history.best_val_acc, model, history, order[spec])

    return TrainingPool(workers).map(run, specs)


def select_for_budget(candidates, budget_kb):
    best = select_best(candidates, budget_kb)
    if best is None:
        raise NoFeasibleModelError("protonn", budget_kb)
    return best


def protonn_grid_search(budget_kb, split, scale=FULL, seed=0, workers=1):
    """Best validated ProtoNN model within `budget_kb`."""
    input_dim = split.train.x[0].size
    if not feasible_grid(budget_kb, input_dim):
        raise NoFeasibleModelError("protonn", budget_kb)
    return select_for_budget(protonn_sweep(split, budget_kb, scale, seed, workers), budget_kb)
