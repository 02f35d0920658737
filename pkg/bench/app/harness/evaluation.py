import numpy as np

from app.core.config import Config
from app.core.errors import DatasetError
from app.core.logs import get_logger
from app.core.training import accuracy, batched_scores

log = get_logger("evaluation")


def evaluate(model, dataset, batch_size=Config.EVAL_BATCH_SIZE):
    """Fraction of argmax-correct predictions; ties go to the lowest class index."""
    if len(dataset) == 0:
        raise DatasetError(f"cannot evaluate on the empty dataset {dataset.name!r}")
    scores = batched_scores(model.predict_scores, dataset, batch_size)
    return accuracy(np.asarray(scores), dataset.y)


class AccessAudit:
    """Counts reads of one dataset from the moment it is created.

    The test set must only be read by final evaluation, so after a run the
    counter has to equal (#evaluated models) x len(dataset).
    """

    def __init__(self, dataset):
        self.dataset = dataset
        self.start = dataset.reads
        self.evaluations = 0

    @property
    def reads(self):
        return self.dataset.reads - self.start

    def evaluate(self, model):
        self.evaluations += 1
        return evaluate(model, self.dataset)

    @property
    def expected_reads(self):
        return self.evaluations * len(self.dataset)

    def verify(self):
        if self.reads != self.expected_reads:
            raise DatasetError(f"{self.dataset.name} set read {self.reads} times, "
                               f"expected {self.expected_reads} from {self.evaluations} evaluations")
        log.debug("access audit passed", dataset=self.dataset.name, reads=self.reads)
        return True
