"""Batched forward and backward passes for the candidate layers.

Activations are N x H x W x C (or N x F once flattened). Each forward
returns (output, cache); each backward takes the cache and returns
(input gradient, parameter gradients). The code is dtype-agnostic so the
gradient checks can run it in float64.
"""
import numpy as np

from app.core.config import Config
from app.core.errors import ShapeMismatchError


def init_params(layer, in_shape, rng, dtype=np.float32):
    """Fan-in scaled uniform weights, zero biases."""
    def uniform(shape, fan_in):
        limit = np.sqrt(6.0 / fan_in)
        return rng.uniform(-limit, limit, size=shape).astype(dtype)

    if layer.kind == "C1":
        k, c, o = layer.kernel, in_shape[2], layer.output_dim
        return {"w": uniform((k, k, c, o), k * k * c), "b": np.zeros(o, dtype=dtype)}
    if layer.kind == "C2":
        k, c, o = layer.kernel, in_shape[2], layer.output_dim
        return {"dw": uniform((k, k, c), k * k), "pw": uniform((c, o), c),
                "b": np.zeros(o, dtype=dtype)}
    if layer.is_dense:
        n = int(np.prod(in_shape))
        return {"w": uniform((n, layer.output_dim), n), "b": np.zeros(layer.output_dim, dtype=dtype)}
    return {}


# -- convolutions -----------------------------------------------------------

def conv_forward(x, w, b):
    n, h, wd, c = x.shape
    k, _, c_in, c_out = w.shape
    if c != c_in:
        raise ShapeMismatchError(f"conv expects {c_in} channels, got {c}")
    ho, wo = h - k + 1, wd - k + 1
    y = np.zeros((n, ho, wo, c_out), dtype=np.result_type(x, w))
    for i in range(k):
        for j in range(k):
            y += x[:, i:i + ho, j:j + wo, :] @ w[i, j]
    y += b
    return y, (x,)


def conv_backward(dy, cache, w):
    (x,) = cache
    k = w.shape[0]
    _, ho, wo, c_out = dy.shape
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    dy_flat = dy.reshape(-1, c_out)
    for i in range(k):
        for j in range(k):
            window = x[:, i:i + ho, j:j + wo, :]
            dw[i, j] = window.reshape(-1, window.shape[-1]).T @ dy_flat
            dx[:, i:i + ho, j:j + wo, :] += dy @ w[i, j].T
    return dx, {"w": dw, "b": dy.sum(axis=(0, 1, 2))}


def depthwise_forward(x, dw, pw, b):
    """Depthwise k x k (multiplier 1), pointwise projection, ReLU."""
    n, h, wd, c = x.shape
    k = dw.shape[0]
    if dw.shape[2] != c:
        raise ShapeMismatchError(f"depthwise conv expects {dw.shape[2]} channels, got {c}")
    ho, wo = h - k + 1, wd - k + 1
    u = np.zeros((n, ho, wo, c), dtype=np.result_type(x, dw))
    for i in range(k):
        for j in range(k):
            u += x[:, i:i + ho, j:j + wo, :] * dw[i, j]
    v = u @ pw + b
    return np.maximum(v, 0), (x, u, v)


def depthwise_backward(dy, cache, dw, pw):
    x, u, v = cache
    k = dw.shape[0]
    _, ho, wo, _ = dy.shape
    dv = dy * (v > 0)
    c = u.shape[-1]
    grads = {
        "pw": u.reshape(-1, c).T @ dv.reshape(-1, dv.shape[-1]),
        "b": dv.sum(axis=(0, 1, 2)),
    }
    du = dv @ pw.T
    ddw = np.zeros_like(dw)
    dx = np.zeros_like(x)
    for i in range(k):
        for j in range(k):
            ddw[i, j] = (x[:, i:i + ho, j:j + wo, :] * du).sum(axis=(0, 1, 2))
            dx[:, i:i + ho, j:j + wo, :] += du * dw[i, j]
    grads["dw"] = ddw
    return dx, grads


# -- pooling ------------------------------------------------------------------

def _blocks(x):
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    return x[:, :2 * ho, :2 * wo, :].reshape(n, ho, 2, wo, 2, c)


def avgpool_forward(x):
    return _blocks(x).mean(axis=(2, 4)), (x.shape,)


def avgpool_backward(dy, cache):
    (shape,) = cache
    dx = np.zeros(shape, dtype=dy.dtype)
    ho, wo = dy.shape[1], dy.shape[2]
    spread = np.repeat(np.repeat(dy / 4.0, 2, axis=1), 2, axis=2)
    dx[:, :2 * ho, :2 * wo, :] = spread
    return dx, {}


def maxpool_forward(x):
    blocks = _blocks(x)
    n, ho, _, wo, _, c = blocks.shape
    # window entries in row-major order; argmax keeps the first maximum
    flat = blocks.transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, 4)
    arg = flat.argmax(axis=-1)
    y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    return y, (x.shape, arg)


def maxpool_backward(dy, cache):
    shape, arg = cache
    n, ho, wo, c = dy.shape
    flat = np.zeros((n, ho, wo, c, 4), dtype=dy.dtype)
    np.put_along_axis(flat, arg[..., None], dy[..., None], axis=-1)
    blocks = flat.reshape(n, ho, wo, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    dx = np.zeros(shape, dtype=dy.dtype)
    dx[:, :2 * ho, :2 * wo, :] = blocks.reshape(n, 2 * ho, 2 * wo, c)
    return dx, {}


# -- dense and dropout ------------------------------------------------------------

def dense_forward(x, w, b, relu):
    flat = x.reshape(len(x), -1)
    z = flat @ w + b
    y = np.maximum(z, 0) if relu else z
    return y, (x.shape, flat, z, relu)


def dense_backward(dy, cache, w):
    shape, flat, z, relu = cache
    dz = dy * (z > 0) if relu else dy
    grads = {"w": flat.T @ dz, "b": dz.sum(axis=0)}
    return (dz @ w.T).reshape(shape), grads


def dropout_forward(x, train, rng, rate=Config.CNN_DROPOUT_RATE):
    if not train or rate <= 0.0:
        return x, (None,)
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * keep, (keep,)


def dropout_backward(dy, cache):
    (keep,) = cache
    return (dy if keep is None else dy * keep), {}


def layer_forward(layer, params, x, train=False, rng=None):
    kind = layer.kind
    if kind == "C1":
        return conv_forward(x, params["w"], params["b"])
    if kind == "C2":
        return depthwise_forward(x, params["dw"], params["pw"], params["b"])
    if kind == "A":
        return avgpool_forward(x)
    if kind == "M":
        return maxpool_forward(x)
    if kind == "Dr":
        return dropout_forward(x, train, rng)
    return dense_forward(x, params["w"], params["b"], relu=(kind == "D"))


def layer_backward(layer, params, cache, dy):
    kind = layer.kind
    if kind == "C1":
        return conv_backward(dy, cache, params["w"])
    if kind == "C2":
        return depthwise_backward(dy, cache, params["dw"], params["pw"])
    if kind == "A":
        return avgpool_backward(dy, cache)
    if kind == "M":
        return maxpool_backward(dy, cache)
    if kind == "Dr":
        return dropout_backward(dy, cache)
    return dense_backward(dy, cache, params["w"])
