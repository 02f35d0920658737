"""Shallow decision tree over a learned low-dimensional projection.

Nodes are heap-indexed: the children of node k are 2k+1 (left) and 2k+2
(right). With x_hat = Z x every node k contributes

    I_k(x) * (W_k x_hat) * tanh(sigma * V_k x_hat)

to the class scores, where I_k is the probability (soft mode) or the
indicator (hard mode) of reaching k.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from app.core.config import Config
from app.core.errors import ShapeMismatchError, SpecError
from app.core.sizing import footprint_bytes, matrix_cost
from app.core.training import softmax_cross_entropy
from app.processing.transforms import flatten


@dataclass(frozen=True)
class BonsaiSpec:
    depth: int
    dim: int

    def __post_init__(self):
        if not 1 <= self.depth <= Config.BONSAI_MAX_DEPTH:
            raise SpecError(f"tree depth must lie in 1..{Config.BONSAI_MAX_DEPTH}, got {self.depth}")
        if self.dim < 1:
            raise SpecError(f"projection dimension must be >= 1, got {self.dim}")

    @property
    def nodes(self):
        return 2 ** (self.depth + 1) - 1

    @property
    def internal_nodes(self):
        return 2 ** self.depth - 1

    def footprint(self, input_dim=Config.INPUT_DIM):
        return bonsai_footprint(self, input_dim)

    def __str__(self):
        return f"depth={self.depth},dim={self.dim}"


def bonsai_footprint(spec: BonsaiSpec, input_dim=Config.INPUT_DIM, num_classes=Config.NUM_CLASSES):
    """Sparse Z, W, V and theta at their configured densities."""
    blocks = (
        (spec.dim * input_dim, Config.BONSAI_Z_DENSITY),
        (spec.nodes * num_classes * spec.dim, Config.BONSAI_WV_DENSITY),
        (spec.nodes * num_classes * spec.dim, Config.BONSAI_WV_DENSITY),
        (spec.internal_nodes * spec.dim, Config.BONSAI_THETA_DENSITY),
    )
    dense = nnz = 0
    for size, density in blocks:
        d, s = matrix_cost(size, density)
        dense += d
        nnz += s
    return footprint_bytes(dense, nnz)


DENSITIES = {"Z": Config.BONSAI_Z_DENSITY, "W": Config.BONSAI_WV_DENSITY,
             "V": Config.BONSAI_WV_DENSITY, "T": Config.BONSAI_THETA_DENSITY}


@dataclass
class BonsaiModel:
    spec: BonsaiSpec
    Z: np.ndarray       # dim x D
    W: np.ndarray       # nodes x L x dim
    V: np.ndarray       # nodes x L x dim
    T: np.ndarray       # internal nodes x dim (branching parameters theta)
    sigma: float = Config.BONSAI_SIGMA

    def __post_init__(self):
        s = self.spec
        if self.W.shape[0] != s.nodes or self.V.shape != self.W.shape:
            raise ShapeMismatchError(f"expected {s.nodes} node predictors, got {self.W.shape}")
        if self.T.shape != (s.internal_nodes, s.dim) or self.Z.shape[0] != s.dim:
            raise ShapeMismatchError("branching or projection shape disagrees with the BonsaiSpec")

    @property
    def input_dim(self):
        return self.Z.shape[1]

    def params(self):
        return {"Z": self.Z, "W": self.W, "V": self.V, "T": self.T}

    def footprint(self):
        return bonsai_footprint(self.spec, self.input_dim, self.W.shape[1])

    def project(self, x):
        x = flatten(x)
        if x.shape[1] != self.input_dim:
            raise ShapeMismatchError(f"expected {self.input_dim} features, got {x.shape[1]}")
        return x @ self.Z.T

    def node_scores(self, x_hat):
        wx = np.einsum("kld,nd->nkl", self.W, x_hat)
        vx = np.tanh(self.sigma * np.einsum("kld,nd->nkl", self.V, x_hat))
        return wx, vx

    def branch_probs(self, x_hat, sharpness=1.0):
        """(n, internal) probability of taking the left child."""
        return expit(sharpness * (x_hat @ self.T.T))

    def indicators(self, x_hat, mode="hard", sharpness=1.0):
        """(n, nodes) reach probabilities (soft) or path indicators (hard)."""
        n = len(x_hat)
        reach = np.zeros((n, self.spec.nodes), dtype=x_hat.dtype)
        reach[:, 0] = 1.0
        if mode == "soft":
            left = self.branch_probs(x_hat, sharpness)
        elif mode == "hard":
            left = (x_hat @ self.T.T >= 0).astype(x_hat.dtype)
        else:
            raise SpecError(f"unknown prediction mode {mode!r}")
        for k in range(self.spec.internal_nodes):
            reach[:, 2 * k + 1] = reach[:, k] * left[:, k]
            reach[:, 2 * k + 2] = reach[:, k] * (1.0 - left[:, k])
        return reach

    def predict_scores(self, x, mode="hard", sharpness=1.0):
        x_hat = self.project(x)
        wx, vx = self.node_scores(x_hat)
        reach = self.indicators(x_hat, mode, sharpness)
        return np.einsum("nk,nkl->nl", reach, wx * vx)


def bonsai_predict(model: BonsaiModel, x, mode="hard", sharpness=1.0):
    """Class scores for one flattened input."""
    return model.predict_scores(np.asarray(x).reshape(1, -1), mode, sharpness)[0]


def hard_path(model: BonsaiModel, x):
    """Heap indices of the root-to-leaf path taken by one input."""
    x_hat = model.project(np.asarray(x).reshape(1, -1))[0]
    path = [0]
    while path[-1] < model.spec.internal_nodes:
        k = path[-1]
        path.append(2 * k + 1 if float(model.T[k] @ x_hat) >= 0 else 2 * k + 2)
    return path


def bonsai_loss(model: BonsaiModel, x, labels, sharpness=1.0,
                reg=Config.BONSAI_REG_WV_THETA, reg_z=Config.BONSAI_REG_Z):
    """Soft-mode cross-entropy plus L2 terms, and gradients for Z, W, V, T."""
    x = flatten(x)
    x_hat = x @ model.Z.T
    wx, vx = model.node_scores(x_hat)
    left = model.branch_probs(x_hat, sharpness)
    reach = model.indicators(x_hat, "soft", sharpness)
    node = wx * vx
    scores = np.einsum("nk,nkl->nl", reach, node)
    loss, d_scores = softmax_cross_entropy(scores, labels)

    d_reach = np.einsum("nl,nkl->nk", d_scores, node)
    d_node = reach[:, :, None] * d_scores[:, None, :]
    d_wx = d_node * vx
    d_vx_pre = d_node * wx * (1.0 - vx * vx) * model.sigma

    grads = {
        "W": np.einsum("nkl,nd->kld", d_wx, x_hat),
        "V": np.einsum("nkl,nd->kld", d_vx_pre, x_hat),
    }
    d_xhat = np.einsum("nkl,kld->nd", d_wx, model.W) + np.einsum("nkl,kld->nd", d_vx_pre, model.V)

    d_theta_pre = np.zeros_like(left)
    for k in range(model.spec.internal_nodes - 1, -1, -1):
        d_left_child, d_right_child = d_reach[:, 2 * k + 1], d_reach[:, 2 * k + 2]
        q = left[:, k]
        d_reach[:, k] += d_left_child * q + d_right_child * (1.0 - q)
        d_q = reach[:, k] * (d_left_child - d_right_child)
        d_theta_pre[:, k] = d_q * q * (1.0 - q) * sharpness
    grads["T"] = d_theta_pre.T @ x_hat
    d_xhat += d_theta_pre @ model.T
    grads["Z"] = d_xhat.T @ x

    penalty = 0.0
    for name, lam in (("W", reg), ("V", reg), ("T", reg), ("Z", reg_z)):
        p = getattr(model, name)
        penalty += 0.5 * lam * float(np.sum(p * p))
        grads[name] = grads[name] + lam * p
    return loss + penalty, grads
