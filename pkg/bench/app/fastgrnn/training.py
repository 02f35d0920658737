import numpy as np

from app.core.config import Config
from app.core.logs import get_logger
from app.core.optim import AdamState, adam_step, step_decay
from app.core.rng import seeded_rng
from app.core.sparsity import hard_threshold_array
from app.core.training import (
    EarlyStopping, EpochRecord, TrainingHistory, accuracy, batched_scores,
    check_finite, minibatches, stage_of,
)
from app.fastgrnn.model import FastGrnnCell, FastGrnnModel, fastgrnn_loss

log = get_logger("fastgrnn")


def init_fastgrnn(spec, rng, input_dim=Config.FASTGRNN_INPUT_DIM, num_classes=Config.NUM_CLASSES,
                  dtype=np.float32):
    """Uniform +-1/sqrt(fan_in) weights, zero biases, zeta and nu at their configured starts."""
    def uniform(shape, fan_in):
        limit = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-limit, limit, size=shape).astype(dtype)

    h = spec.hidden
    cells = [
        FastGrnnCell(
            W=uniform((h, input_dim), input_dim),
            U=uniform((h, h), h),
            b_z=np.zeros(h, dtype=dtype),
            b_h=np.zeros(h, dtype=dtype),
            zeta=np.array([Config.FASTGRNN_ZETA_INIT], dtype=dtype),
            nu=np.array([Config.FASTGRNN_NU_INIT], dtype=dtype),
            dw=spec.dw, du=spec.du,
        )
        for _ in range(spec.mode.cells)
    ]
    features = spec.mode.cells * h
    return FastGrnnModel(spec, cells, uniform((num_classes, features), features),
                         np.zeros(num_classes, dtype=dtype))


def sparse_densities(model):
    """Parameter name -> target density for every thresholded matrix."""
    out = {}
    for i in range(len(model.cells)):
        if model.spec.dw < 1.0:
            out[f"cell{i}.W"] = model.spec.dw
        if model.spec.du < 1.0:
            out[f"cell{i}.U"] = model.spec.du
    return out


def threshold_params(params, densities):
    masks = {}
    for name, density in densities.items():
        params[name][...], masks[name] = hard_threshold_array(params[name], density)
    return masks


def lr_decay_epoch(epochs, budget_kb=None):
    """Epoch of the x0.1 drop, scaled with the schedule; None when the budget skips it."""
    if budget_kb is not None and budget_kb < Config.FASTGRNN_LR_DECAY_MIN_BUDGET_KB:
        return None
    return int(round(Config.FASTGRNN_LR_DECAY_EPOCH * epochs / Config.FASTGRNN_EPOCHS))


def weight_decay_for(budget_kb):
    if budget_kb is not None and budget_kb >= Config.FASTGRNN_WEIGHT_DECAY_MIN_BUDGET_KB:
        return Config.FASTGRNN_WEIGHT_DECAY
    return 0.0


def fastgrnn_train(split, spec, epochs=Config.FASTGRNN_EPOCHS, batch_size=Config.FASTGRNN_BATCH_SIZE,
                   lr=Config.FASTGRNN_LR, budget_kb=None, seed=0):
    """Three-stage Adam training; returns (model, history).

    Stage 1 trains densely, stage 2 projects W and U back onto their
    densities after every epoch, stage 3 fine-tunes on the frozen support.
    The model is rolled back to its best validation epoch of stages 2-3.
    """
    rng = seeded_rng(seed)
    train, validation = split.train, split.validation
    model = init_fastgrnn(spec, rng)
    params = model.params()
    densities = sparse_densities(model)
    decay_at = lr_decay_epoch(epochs, budget_kb)
    state = AdamState(learning_rate=lr, weight_decay=weight_decay_for(budget_kb))
    tracker = EarlyStopping(patience=None)
    history = TrainingHistory()
    masks = None

    for epoch in range(epochs):
        stage = stage_of(epoch, epochs)
        if stage == 3 and masks is None:
            masks = threshold_params(params, densities)
        state.learning_rate = step_decay(lr, epoch, decay_at, Config.FASTGRNN_LR_DECAY_FACTOR)
        losses = []
        for batch, idx in enumerate(minibatches(len(train), batch_size, rng)):
            loss, grads = fastgrnn_loss(model, train.features(idx), train.y[idx])
            check_finite(loss, epoch, batch)
            adam_step(params, grads, state, masks)
            losses.append(loss)
        if stage == 2:
            threshold_params(params, densities)

        val_acc = accuracy(batched_scores(model.predict_scores, validation), validation.y)
        history.add(EpochRecord(epoch, float(np.mean(losses)) if losses else 0.0, val_acc,
                                state.learning_rate, stage))
        log.debug("epoch done", spec=str(spec), epoch=epoch, stage=stage, val_acc=val_acc)
        if stage >= 2:
            tracker.update(epoch, val_acc, {k: v.copy() for k, v in params.items()})

    if tracker.best_state is not None:
        for name, value in tracker.best_state.items():
            params[name][...] = value
    history.best_epoch = tracker.best_epoch
    history.best_val_acc = max(tracker.best_acc, 0.0)
    log.info("fastgrnn trained", spec=str(spec), best_epoch=history.best_epoch,
             val_acc=history.best_val_acc)
    return model, history
