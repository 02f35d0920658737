"""Sparse-projection prototype classifier with Gaussian-kernel scoring.

score(x)[c] = sum_j exp(-gamma^2 * ||W x - b_j||^2) * Z[c, j]
"""
from dataclasses import dataclass

import numpy as np

from app.core.config import Config
from app.core.errors import ShapeMismatchError, SpecError
from app.core.sizing import footprint_bytes, matrix_cost
from app.processing.transforms import flatten


@dataclass
class ProtoNNModel:
    W: np.ndarray          # d x D projection
    B: np.ndarray          # m x d prototypes, one per row
    Z: np.ndarray          # L x m prototype label scores
    gamma: float
    density: float = 1.0

    def __post_init__(self):
        d, _ = self.W.shape
        m, d_b = self.B.shape
        if d_b != d:
            raise ShapeMismatchError(f"prototypes are {d_b}-dimensional, projection gives {d}")
        if self.Z.shape[1] != m:
            raise ShapeMismatchError(f"Z has {self.Z.shape[1]} columns for {m} prototypes")
        if d < 1 or m < 1:
            raise SpecError("ProtoNN needs d >= 1 and m >= 1")

    @property
    def dim(self):
        return self.W.shape[0]

    @property
    def prototypes(self):
        return self.B.shape[0]

    @property
    def input_dim(self):
        return self.W.shape[1]

    def params(self):
        return {"W": self.W, "B": self.B, "Z": self.Z}

    def footprint(self):
        return protonn_footprint(self.dim, self.prototypes, self.density,
                                 self.input_dim, self.Z.shape[0])

    def similarities(self, x):
        """(n, m) kernel values for a batch of flattened inputs."""
        x = np.asarray(x)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeMismatchError(f"expected n x {self.input_dim} inputs, got {x.shape}")
        projected = x @ self.W.T
        diff = projected[:, None, :] - self.B[None, :, :]
        return np.exp(-(self.gamma ** 2) * np.sum(diff * diff, axis=2))

    def predict_scores(self, x):
        x = np.asarray(x)
        return self.similarities(flatten(x)) @ self.Z.T


def protonn_predict(model: ProtoNNModel, x):
    """Class scores for one flattened input."""
    x = np.asarray(x).reshape(-1)
    if x.size != model.input_dim:
        raise ShapeMismatchError(f"expected {model.input_dim} features, got {x.size}")
    return model.predict_scores(x[None])[0]


def protonn_loss(model: ProtoNNModel, x, targets):
    """Mean squared error against one-hot targets and its gradients w.r.t. W, B, Z."""
    n = len(x)
    projected = x @ model.W.T
    diff = projected[:, None, :] - model.B[None, :, :]
    g2 = model.gamma ** 2
    sim = np.exp(-g2 * np.sum(diff * diff, axis=2))
    residual = sim @ model.Z.T - targets
    loss = float(np.sum(residual * residual) / n)

    d_scores = 2.0 * residual / n
    d_sim = d_scores @ model.Z
    d_dist = d_sim * sim * (-g2)
    row = d_dist.sum(axis=1)[:, None]
    d_projected = 2.0 * (row * projected - d_dist @ model.B)
    grads = {
        "W": d_projected.T @ x,
        "B": -2.0 * (d_dist.T @ projected - d_dist.sum(axis=0)[:, None] * model.B),
        "Z": d_scores.T @ sim,
    }
    return loss, grads


def protonn_footprint(d, m, density=1.0, input_dim=Config.INPUT_DIM, num_classes=Config.NUM_CLASSES):
    """Sparse W below density 1, dense B, Z and gamma."""
    if d < 1 or m < 1:
        raise SpecError(f"ProtoNN needs d >= 1 and m >= 1, got d={d}, m={m}")
    dense, nnz = matrix_cost(d * input_dim, density)
    dense += d * m + num_classes * m + 1
    return footprint_bytes(dense, nnz)
