"""Loop helpers shared by every family's trainer."""
import copy
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_softmax, softmax

from app.core.errors import NonFiniteLossError


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    n = logits.shape[0]
    logp = log_softmax(logits, axis=1)
    loss = -float(np.mean(logp[np.arange(n), labels]))
    grad = softmax(logits, axis=1)
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return loss, grad.astype(logits.dtype, copy=False)


def one_hot(labels, num_classes):
    out = np.zeros((len(labels), num_classes), dtype=np.float32)
    out[np.arange(len(labels)), labels] = 1.0
    return out


def minibatches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def check_finite(loss, epoch, batch):
    if not np.isfinite(loss):
        raise NonFiniteLossError(epoch, batch, loss)


def batched_scores(score_fn, dataset, batch_size=1000):
    """Apply `score_fn` to a dataset's features chunk by chunk."""
    n = len(dataset)
    chunks = [score_fn(dataset.features(np.arange(i, min(i + batch_size, n))))
              for i in range(0, n, batch_size)]
    if not chunks:
        return np.zeros((0, 0), dtype=np.float32)
    return np.concatenate(chunks)


def stage_of(epoch, epochs):
    """1 dense, 2 iterative hard thresholding, 3 frozen support; equal thirds."""
    if epoch < epochs // 3:
        return 1
    if epoch < 2 * epochs // 3:
        return 2
    return 3


def accuracy(scores, labels):
    """Fraction of argmax-correct rows; np.argmax resolves ties to the lowest class."""
    if len(labels) == 0:
        return 0.0
    return float(np.mean(np.argmax(scores, axis=1) == labels))


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    val_acc: float
    lr: float
    phase: int = 1


@dataclass
class TrainingHistory:
    records: list = field(default_factory=list)
    best_epoch: int | None = None
    best_val_acc: float = -1.0
    stopped_early: bool = False

    def add(self, record: EpochRecord):
        self.records.append(record)

    @property
    def losses(self):
        return [r.loss for r in self.records]

    @property
    def val_accs(self):
        return [r.val_acc for r in self.records]


@dataclass
class TrainedCandidate:
    """One trained model and how it scored on the validation set."""
    spec: object
    footprint: object
    val_acc: float
    model: object = None
    history: TrainingHistory | None = None
    order: int = 0     # position in the family's candidate ordering, the tie-break


def select_best(candidates, budget_kb=None):
    """Highest validation accuracy among candidates fitting the budget; ties to the lower order."""
    feasible = [c for c in candidates if budget_kb is None or c.footprint.fits(budget_kb)]
    if not feasible:
        return None
    return max(feasible, key=lambda c: (c.val_acc, -c.order))


class EarlyStopping:
    """Tracks the best validation accuracy and the parameters that produced it.

    patience=None never stops but still keeps the best snapshot.
    """

    def __init__(self, patience=None):
        self.patience = patience
        self.best_acc = -1.0
        self.best_epoch = None
        self.best_state = None
        self.bad_epochs = 0

    def update(self, epoch, val_acc, state) -> bool:
        """Record an epoch; return True when training should stop."""
        if val_acc > self.best_acc:
            self.best_acc = val_acc
            self.best_epoch = epoch
            self.best_state = copy.deepcopy(state)
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        return self.patience is not None and self.bad_epochs >= self.patience
