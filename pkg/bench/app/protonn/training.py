import numpy as np
from scipy.cluster.vq import kmeans2

from app.core.config import Config
from app.core.logs import get_logger
from app.core.optim import AdamState, adam_step
from app.core.rng import seeded_rng
from app.core.sparsity import hard_threshold_array
from app.core.training import (
    EarlyStopping, EpochRecord, TrainingHistory, accuracy, batched_scores,
    check_finite, minibatches, one_hot,
)
from app.processing.transforms import flatten
from app.protonn.model import ProtoNNModel, protonn_loss

log = get_logger("protonn")

BLOCKS = ("W", "B", "Z")


def prototypes_per_class(m, num_classes=Config.NUM_CLASSES):
    """m / L prototypes per class, the remainder going to the lowest classes."""
    base, extra = divmod(m, num_classes)
    return [base + (1 if c < extra else 0) for c in range(num_classes)]


def init_prototypes(projected, labels, m, rng, num_classes=Config.NUM_CLASSES):
    """Per-class k-means in projected space; returns (B, Z)."""
    d = projected.shape[1]
    centres, owners = [], []
    for c, count in enumerate(prototypes_per_class(m, num_classes)):
        if count == 0:
            continue
        members = projected[labels == c]
        if len(members) == 0:
            members = projected
        start = members[rng.choice(len(members), size=count, replace=len(members) < count)]
        if len(members) > count:
            start, _ = kmeans2(members.astype(np.float64), start.astype(np.float64), minit="matrix")
        centres.append(np.asarray(start).reshape(count, d))
        owners.extend([c] * count)
    B = np.concatenate(centres).astype(np.float32)
    Z = one_hot(np.array(owners), num_classes).T.copy()
    return B, Z


def protonn_train(split, d, m, density=1.0, gamma=1.5, lr=0.01, epochs=Config.PROTONN_EPOCHS,
                  patience=Config.PROTONN_PATIENCE, batch_size=Config.PROTONN_BATCH_SIZE, seed=0):
    """Alternating Adam passes over W, B and Z on the squared-error loss.

    W is hard-thresholded back to `density` after every epoch; the
    best-validation snapshot is returned with the history.
    """
    rng = seeded_rng(seed)
    train, validation = split.train, split.validation
    input_dim = int(np.prod(train.example_shape))
    L = Config.NUM_CLASSES

    W = rng.normal(0.0, 1.0 / np.sqrt(input_dim), size=(d, input_dim)).astype(np.float32)
    if density < 1.0:
        W, _ = hard_threshold_array(W, density)
    projected = batched_scores(lambda x: flatten(x) @ W.T, train)
    B, Z = init_prototypes(projected, train.y, m, rng, L)
    model = ProtoNNModel(W, B, Z, float(gamma), density)

    params = model.params()
    states = {name: AdamState(learning_rate=lr) for name in BLOCKS}
    stopper = EarlyStopping(patience)
    history = TrainingHistory()

    for epoch in range(epochs):
        losses = []
        for block in BLOCKS:
            for batch, idx in enumerate(minibatches(len(train), batch_size, rng)):
                x = train.features(idx)
                x = flatten(x)
                loss, grads = protonn_loss(model, x, one_hot(train.y[idx], L))
                check_finite(loss, epoch, batch)
                adam_step({block: params[block]}, {block: grads[block]}, states[block])
                losses.append(loss)
        if density < 1.0:
            params["W"][...] = hard_threshold_array(params["W"], density)[0]

        val_acc = accuracy(batched_scores(model.predict_scores, validation), validation.y)
        history.add(EpochRecord(epoch, float(np.mean(losses)), val_acc, lr))
        log.debug("epoch done", d=d, m=m, gamma=gamma, epoch=epoch, val_acc=val_acc)
        if stopper.update(epoch, val_acc, {k: v.copy() for k, v in params.items()}):
            history.stopped_early = True
            break

    if stopper.best_state is not None:
        for name, value in stopper.best_state.items():
            params[name][...] = value
    history.best_epoch = stopper.best_epoch
    history.best_val_acc = stopper.best_acc
    log.info("protonn trained", d=d, m=m, gamma=gamma, lr=lr, val_acc=history.best_val_acc)
    return model, history
