# Adam with bias correction and decoupled weight decay, plus the learning-rate
# schedules used by the training recipes.
from dataclasses import dataclass, field

import numpy as np

from app.core.config import Config
from app.core.errors import ShapeMismatchError


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = Config.ADAM_BETA1
    beta2: float = Config.ADAM_BETA2
    epsilon: float = Config.ADAM_EPSILON
    weight_decay: float = 0.0
    step: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState, masks: dict | None = None):
    """Update `params` in place and return (params, state).

    `masks` optionally maps parameter names to boolean supports; masked-out
    entries receive no update and stay exactly zero.
    """
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    lr = state.learning_rate

    for name, p in params.items():
        if name not in grads:
            continue
        g = np.asarray(grads[name])
        if g.shape != p.shape:
            raise ShapeMismatchError(f"gradient for {name!r} has shape {g.shape}, parameter {p.shape}")
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
            state.first_moment[name] = m
            state.second_moment[name] = v
        elif m.shape != p.shape:
            raise ShapeMismatchError(f"moment for {name!r} has shape {m.shape}, parameter {p.shape}")

        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)

        update = (lr / bc1) * m / (np.sqrt(v / bc2) + state.epsilon)
        if state.weight_decay > 0.0:
            update = update + lr * state.weight_decay * p
        p -= update.astype(p.dtype, copy=False)

        if masks is not None and name in masks:
            p *= masks[name]

    return params, state


def exponential_decay(lr_init, decay, epoch):
    return lr_init * decay ** epoch


def step_decay(lr_init, epoch, decay_epoch, factor):
    if decay_epoch is None or epoch < decay_epoch:
        return lr_init
    return lr_init * factor
