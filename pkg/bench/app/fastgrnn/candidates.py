"""Hidden-size x density grids and the per-budget candidate pick."""
import itertools

from app.core.config import Config
from app.core.errors import SpecError
from app.fastgrnn.model import FastGrnnSpec, SequenceMode

# Hand-picked Multi models for the smallest budget, tried ahead of the grid.
MULTI_SMALL_BUDGET_KB = 8
MULTI_MANUAL_SPECS = ((12, 1.0, 1.0), (14, 0.1, 1.0))


def spec_grid(mode):
    """Every sweep spec for `mode`, hidden size ascending."""
    mode = SequenceMode.parse(mode)
    if mode is SequenceMode.MULTI:
        hiddens = range(Config.FASTGRNN_MULTI_HIDDEN_STEP, Config.FASTGRNN_MULTI_HIDDEN_MAX + 1,
                        Config.FASTGRNN_MULTI_HIDDEN_STEP)
        pairs = [(dw, 1.0) for dw in Config.FASTGRNN_DENSITIES + (1.0,)]
    else:
        hiddens = range(Config.FASTGRNN_HIDDEN_STEP, Config.FASTGRNN_HIDDEN_MAX + 1,
                        Config.FASTGRNN_HIDDEN_STEP)
        pairs = list(itertools.product(Config.FASTGRNN_DENSITIES, repeat=2)) + [(1.0, 1.0)]
    return [FastGrnnSpec(mode, h, dw, du) for h in hiddens for dw, du in pairs]


def build_candidates(budget_kb, mode, count=Config.FASTGRNN_CANDIDATES_PER_BUDGET,
                     input_dim=Config.FASTGRNN_INPUT_DIM):
    """The `count` feasible specs whose footprint comes closest to the budget."""
    if budget_kb not in Config.BUDGETS_KB:
        raise SpecError(f"budget must be one of {Config.BUDGETS_KB}, got {budget_kb}")
    mode = SequenceMode.parse(mode)
    feasible = [s for s in spec_grid(mode) if s.footprint(input_dim).fits(budget_kb)]
    # stable sort keeps grid order among equal sizes
    closest = sorted(feasible, key=lambda s: -s.footprint(input_dim).total_bytes)
    picks = []
    if mode is SequenceMode.MULTI and budget_kb == MULTI_SMALL_BUDGET_KB:
        picks = [FastGrnnSpec(mode, h, dw, du) for h, dw, du in MULTI_MANUAL_SPECS]
    for spec in closest:
        if len(picks) >= count:
            break
        if spec not in picks:
            picks.append(spec)
    return picks[:count]


def all_candidates(budgets=Config.BUDGETS_KB, modes=tuple(SequenceMode)):
    """(budget, spec) for every budget and mode, in budget-then-mode order."""
    return [(budget, spec) for budget in budgets for mode in modes
            for spec in build_candidates(budget, mode)]
