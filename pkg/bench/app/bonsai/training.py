import copy

import numpy as np

from app.core.config import Config
from app.core.logs import get_logger
from app.core.optim import AdamState, adam_step
from app.core.rng import seeded_rng
from app.core.sparsity import hard_threshold_array
from app.core.training import (
    EarlyStopping, EpochRecord, TrainingHistory, accuracy, batched_scores,
    check_finite, minibatches, stage_of,
)
from app.bonsai.model import DENSITIES, BonsaiModel, bonsai_loss

log = get_logger("bonsai")


def init_bonsai(spec, input_dim, rng, num_classes=Config.NUM_CLASSES):
    def normal(shape, fan_in):
        return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape).astype(np.float32)

    return BonsaiModel(
        spec,
        Z=normal((spec.dim, input_dim), input_dim),
        W=normal((spec.nodes, num_classes, spec.dim), spec.dim),
        V=normal((spec.nodes, num_classes, spec.dim), spec.dim),
        T=normal((spec.internal_nodes, spec.dim), spec.dim),
    )


def branch_sharpness(epoch, epochs, top=Config.BONSAI_MAX_BRANCH_SHARPNESS):
    """Linear ramp from 1 to `top`, reached when the thresholding phase ends."""
    end = max(1, 2 * epochs // 3)
    return 1.0 + (top - 1.0) * min(1.0, (epoch + 1) / end)


def threshold_params(params):
    masks = {}
    for name, p in params.items():
        p[...], masks[name] = hard_threshold_array(p, DENSITIES[name])
    return masks


def bonsai_train(split, spec, epochs=Config.BONSAI_EPOCHS, lr=Config.BONSAI_LR,
                 batch_size=Config.BONSAI_BATCH_SIZE, seed=0):
    """Three-phase Adam training; returns (best snapshot, final model, history).

    No early stopping. Validation accuracy is measured in hard mode and the
    snapshot is only taken once the parameters are sparse.
    """
    rng = seeded_rng(seed)
    train, validation = split.train, split.validation
    input_dim = int(np.prod(train.example_shape))
    model = init_bonsai(spec, input_dim, rng)
    params = model.params()
    state = AdamState(learning_rate=lr)
    tracker = EarlyStopping(patience=None)
    history = TrainingHistory()
    masks = None

    for epoch in range(epochs):
        phase = stage_of(epoch, epochs)
        sharpness = branch_sharpness(epoch, epochs)
        if phase == 3 and masks is None:
            masks = threshold_params(params)
        losses = []
        for batch, idx in enumerate(minibatches(len(train), batch_size, rng)):
            loss, grads = bonsai_loss(model, train.features(idx), train.y[idx], sharpness)
            check_finite(loss, epoch, batch)
            adam_step(params, grads, state, masks if phase == 3 else None)
            if phase == 2:
                threshold_params(params)
            losses.append(loss)

        val_acc = accuracy(batched_scores(model.predict_scores, validation), validation.y)
        history.add(EpochRecord(epoch, float(np.mean(losses)) if losses else 0.0, val_acc, lr, phase))
        log.debug("epoch done", spec=str(spec), epoch=epoch, phase=phase, val_acc=val_acc)
        if phase >= 2:
            tracker.update(epoch, val_acc, {k: v.copy() for k, v in params.items()})

    final = copy.deepcopy(model)
    if tracker.best_state is not None:
        for name, value in tracker.best_state.items():
            params[name][...] = value
    history.best_epoch = tracker.best_epoch
    history.best_val_acc = max(tracker.best_acc, 0.0)
    log.info("bonsai trained", spec=str(spec), best_epoch=history.best_epoch, val_acc=history.best_val_acc)
    return model, final, history
