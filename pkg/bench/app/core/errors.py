"""Exception types raised across the package."""


class MemClfError(Exception):
    """Base class for all package errors."""


class ShapeMismatchError(MemClfError, ValueError):
    pass


class SpecError(MemClfError, ValueError):
    """Invalid hyperparameters, model specs or unparseable spec text."""


class DatasetError(MemClfError):
    pass


class NonFiniteLossError(MemClfError, ArithmeticError):
    def __init__(self, epoch, batch, loss):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
        self.loss = loss


class NoFeasibleModelError(MemClfError):
    def __init__(self, family, budget_kb):
        super().__init__(f"no feasible {family} model for {budget_kb}KB")
        self.family = family
        self.budget_kb = budget_kb


class PlanViolationError(MemClfError, AssertionError):
    """The in-place executor touched an address the traversal plan forbids."""


class SerializationError(MemClfError):
    pass
