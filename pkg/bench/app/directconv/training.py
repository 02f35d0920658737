import numpy as np

from app.core.config import Config
from app.core.logs import get_logger
from app.core.optim import AdamState, adam_step, exponential_decay
from app.core.rng import seeded_rng
from app.core.training import (
    EarlyStopping, EpochRecord, TrainingHistory, accuracy, batched_scores,
    check_finite, minibatches, softmax_cross_entropy,
)

log = get_logger("directconv")


def train_cnn(model, split, epochs=Config.CNN_FULL_EPOCHS, lr_init=Config.CNN_LR_INIT,
              lr_decay=Config.CNN_LR_DECAY, patience=Config.CNN_PATIENCE,
              batch_size=Config.CNN_BATCH_SIZE, seed=0):
    """Adam on softmax cross-entropy; returns the best-validation snapshot and its history."""
    rng = seeded_rng(seed)
    train, validation = split.train, split.validation
    state = AdamState(learning_rate=lr_init)
    stopper = EarlyStopping(patience)
    history = TrainingHistory()
    params = model.flat_params()

    for epoch in range(epochs):
        state.learning_rate = exponential_decay(lr_init, lr_decay, epoch)
        losses = []
        for batch, idx in enumerate(minibatches(len(train), batch_size, rng)):
            logits, caches = model.forward(train.features(idx), train=True, rng=rng)
            loss, dlogits = softmax_cross_entropy(logits, train.y[idx])
            check_finite(loss, epoch, batch)
            grads, _ = model.backward(caches, dlogits)
            adam_step(params, grads, state)
            losses.append(loss)

        val_acc = accuracy(batched_scores(model.predict_scores, validation), validation.y)
        history.add(EpochRecord(epoch, float(np.mean(losses)) if losses else 0.0, val_acc, state.learning_rate))
        log.debug("epoch done", arch=str(model.arch), epoch=epoch, loss=history.losses[-1], val_acc=val_acc)
        if stopper.update(epoch, val_acc, model.params):
            history.stopped_early = True
            break

    if stopper.best_state is not None:
        model.params = stopper.best_state
    history.best_epoch = stopper.best_epoch
    history.best_val_acc = stopper.best_acc
    log.info("cnn trained", arch=str(model.arch), epochs=len(history.records),
             best_epoch=history.best_epoch, val_acc=history.best_val_acc)
    return model, history
