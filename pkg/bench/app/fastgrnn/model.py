"""FastGRNN cell, image sequencing modes and the classifier built on them.

One step of a cell, with a shared pre-activation a = W x_t + U h_prev:

    z   = sigmoid(a + b_z)
    h~  = tanh(a + b_h)
    h_t = (zeta * (1 - z) + nu) * h~ + z * h_prev
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from app.core.config import Config
from app.core.errors import ShapeMismatchError, SpecError
from app.core.sizing import check_density, footprint_bytes, matrix_cost
from app.core.training import softmax_cross_entropy


class SequenceMode(str, Enum):
    ROW = "row"          # all red rows, then green, then blue
    CHANNEL = "channel"  # red row r, green row r, blue row r, then row r + 1
    MULTI = "multi"      # one cell per channel, each over its 32 rows

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise SpecError(f"unknown sequencing mode {value!r}, expected one of "
                            f"{[m.value for m in cls]}") from None

    @property
    def cells(self):
        return Config.INPUT_SHAPE[2] if self is SequenceMode.MULTI else 1


@dataclass(frozen=True)
class FastGrnnSpec:
    mode: SequenceMode
    hidden: int
    dw: float = 1.0
    du: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", SequenceMode.parse(self.mode))
        if self.hidden < 1:
            raise SpecError(f"hidden dimension must be >= 1, got {self.hidden}")
        check_density(self.dw)
        check_density(self.du)

    def footprint(self, input_dim=Config.FASTGRNN_INPUT_DIM):
        return fastgrnn_footprint(self.mode, self.hidden, self.dw, self.du, input_dim)

    def __str__(self):
        return f"{self.mode.value},hidden={self.hidden},dw={self.dw:g},du={self.du:g}"


def fastgrnn_footprint(mode, hidden, dw=1.0, du=1.0, input_dim=Config.FASTGRNN_INPUT_DIM,
                       num_classes=Config.NUM_CLASSES):
    """W and U sparse below density 1; biases, zeta, nu and the head always dense."""
    mode = SequenceMode.parse(mode)
    w_dense, w_nnz = matrix_cost(hidden * input_dim, dw)
    u_dense, u_nnz = matrix_cost(hidden * hidden, du)
    cell_dense = w_dense + u_dense + 2 * hidden + 2
    cells = mode.cells
    head = num_classes * cells * hidden + num_classes
    return footprint_bytes(cells * cell_dense + head, cells * (w_nnz + u_nnz))


@dataclass
class SequencePlan:
    """The (channel, row) visited at every step, one list per cell."""
    mode: SequenceMode
    steps: list

    @property
    def cells(self):
        return len(self.steps)

    def covered(self):
        return sorted(pair for cell in self.steps for pair in cell)


def sequence_plan(mode, rows=Config.INPUT_SHAPE[0], channels=Config.INPUT_SHAPE[2]):
    mode = SequenceMode.parse(mode)
    if mode is SequenceMode.ROW:
        steps = [[(c, r) for c in range(channels) for r in range(rows)]]
    elif mode is SequenceMode.CHANNEL:
        steps = [[(c, r) for r in range(rows) for c in range(channels)]]
    else:
        steps = [[(c, r) for r in range(rows)] for c in range(channels)]
    return SequencePlan(mode, steps)


def sequence_image(images, mode, rows=Config.INPUT_SHAPE[0]):
    """Per-cell step sequences, each (n, steps, width), for HWC images.

    Accepts one image (rows, width, 3) or a batch of them.
    """
    mode = SequenceMode.parse(mode)
    images = np.asarray(images)
    single = images.ndim == 3
    if single:
        images = images[None]
    expected = (rows, Config.INPUT_SHAPE[1], Config.INPUT_SHAPE[2])
    if images.ndim != 4 or images.shape[1:] != expected:
        raise ShapeMismatchError(f"expected images of shape {expected}, got {images.shape[-3:]}")
    n, h, w, c = images.shape
    if mode is SequenceMode.ROW:
        seqs = [images.transpose(0, 3, 1, 2).reshape(n, c * h, w)]
    elif mode is SequenceMode.CHANNEL:
        seqs = [images.transpose(0, 1, 3, 2).reshape(n, h * c, w)]
    else:
        seqs = [images[..., ch] for ch in range(c)]
    return [s[0] for s in seqs] if single else seqs


@dataclass
class FastGrnnCell:
    W: np.ndarray       # hidden x input
    U: np.ndarray       # hidden x hidden
    b_z: np.ndarray
    b_h: np.ndarray
    zeta: np.ndarray    # shape (1,)
    nu: np.ndarray      # shape (1,)
    dw: float = 1.0
    du: float = 1.0

    def __post_init__(self):
        h = self.W.shape[0]
        if self.U.shape != (h, h) or self.b_z.shape != (h,) or self.b_h.shape != (h,):
            raise ShapeMismatchError(f"cell parameters disagree on hidden size {h}")

    @property
    def hidden(self):
        return self.W.shape[0]

    @property
    def input_dim(self):
        return self.W.shape[1]

    def params(self):
        return {"W": self.W, "U": self.U, "b_z": self.b_z, "b_h": self.b_h,
                "zeta": self.zeta, "nu": self.nu}


def _step(cell, x_t, h_prev):
    a = x_t @ cell.W.T + h_prev @ cell.U.T
    z = expit(a + cell.b_z)
    c = np.tanh(a + cell.b_h)
    h_t = (cell.zeta[0] * (1.0 - z) + cell.nu[0]) * c + z * h_prev
    return h_t, (x_t, h_prev, z, c)


def cell_step(cell: FastGrnnCell, x_t, h_prev):
    """One recurrence step for a vector or a batch of rows."""
    x_t, h_prev = np.asarray(x_t), np.asarray(h_prev)
    if x_t.shape[-1] != cell.input_dim or h_prev.shape[-1] != cell.hidden:
        raise ShapeMismatchError(
            f"cell takes ({cell.input_dim}, {cell.hidden}), got ({x_t.shape[-1]}, {h_prev.shape[-1]})")
    return _step(cell, x_t, h_prev)[0]


def cell_step_backward(cell: FastGrnnCell, cache, d_h, grads):
    """Accumulate parameter gradients of one step into `grads`; return d h_prev."""
    x_t, h_prev, z, c = cache
    zeta, nu = cell.zeta[0], cell.nu[0]
    d_c = d_h * (zeta * (1.0 - z) + nu)
    d_z = d_h * (h_prev - zeta * c)
    grads["zeta"] += np.sum(d_h * (1.0 - z) * c)
    grads["nu"] += np.sum(d_h * c)
    d_az = d_z * z * (1.0 - z)
    d_ac = d_c * (1.0 - c * c)
    grads["b_z"] += d_az.sum(axis=0)
    grads["b_h"] += d_ac.sum(axis=0)
    d_a = d_az + d_ac
    grads["W"] += d_a.T @ x_t
    grads["U"] += d_a.T @ h_prev
    return d_h * z + d_a @ cell.U


@dataclass
class FastGrnnModel:
    spec: FastGrnnSpec
    cells: list
    head_w: np.ndarray      # classes x (cells * hidden)
    head_b: np.ndarray

    def __post_init__(self):
        if len(self.cells) != self.spec.mode.cells:
            raise ShapeMismatchError(f"{self.spec.mode.value} mode needs {self.spec.mode.cells} cells, "
                                     f"got {len(self.cells)}")
        if self.head_w.shape[1] != len(self.cells) * self.spec.hidden:
            raise ShapeMismatchError(f"head expects {self.head_w.shape[1]} features")

    @property
    def mode(self):
        return self.spec.mode

    @property
    def input_dim(self):
        return self.cells[0].input_dim

    def params(self):
        out = {}
        for i, cell in enumerate(self.cells):
            for name, p in cell.params().items():
                out[f"cell{i}.{name}"] = p
        out["head.W"] = self.head_w
        out["head.b"] = self.head_b
        return out

    def footprint(self):
        return fastgrnn_footprint(self.mode, self.spec.hidden, self.spec.dw, self.spec.du,
                                  self.input_dim, self.head_w.shape[0])

    def as_images(self, x):
        x = np.asarray(x)
        return x.reshape(len(x), -1, self.input_dim, Config.INPUT_SHAPE[2])

    def run_cells(self, images, keep_caches=False):
        """Final hidden state of every cell, plus the per-step caches if asked."""
        images = self.as_images(images)
        seqs = sequence_image(images, self.mode, rows=images.shape[1])
        finals, caches = [], []
        for cell, seq in zip(self.cells, seqs):
            h = np.zeros((len(seq), cell.hidden), dtype=cell.W.dtype)
            steps = []
            for t in range(seq.shape[1]):
                h, cache = _step(cell, seq[:, t].astype(cell.W.dtype, copy=False), h)
                if keep_caches:
                    steps.append(cache)
            finals.append(h)
            caches.append(steps)
        return finals, caches

    def predict_scores(self, x):
        finals, _ = self.run_cells(x)
        return np.concatenate(finals, axis=1) @ self.head_w.T + self.head_b


def fastgrnn_classify(model: FastGrnnModel, image):
    """Ten logits for one 32x32x3 image."""
    image = np.asarray(image)
    if image.shape != Config.INPUT_SHAPE:
        raise ShapeMismatchError(f"expected an image of shape {Config.INPUT_SHAPE}, got {image.shape}")
    return model.predict_scores(image[None])[0]


def fastgrnn_loss(model: FastGrnnModel, x, labels):
    """Cross-entropy and its gradients for every parameter, by backprop through time."""
    finals, caches = model.run_cells(x, keep_caches=True)
    features = np.concatenate(finals, axis=1)
    logits = features @ model.head_w.T + model.head_b
    loss, d_logits = softmax_cross_entropy(logits, labels)

    grads = {"head.W": d_logits.T @ features, "head.b": d_logits.sum(axis=0)}
    d_features = d_logits @ model.head_w
    hidden = model.spec.hidden
    for i, (cell, steps) in enumerate(zip(model.cells, caches)):
        cell_grads = {name: np.zeros_like(p) for name, p in cell.params().items()}
        d_h = d_features[:, i * hidden:(i + 1) * hidden]
        for cache in reversed(steps):
            d_h = cell_step_backward(cell, cache, d_h, cell_grads)
        for name, g in cell_grads.items():
            grads[f"cell{i}.{name}"] = g
    return loss, grads
