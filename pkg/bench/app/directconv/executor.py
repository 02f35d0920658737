"""Reference and in-place CNN executors for a single image."""
import numpy as np

from app.core.config import Config
from app.core.errors import PlanViolationError, ShapeMismatchError
from app.core.tensors import ImageTensor
from app.directconv.arch import output_shape
from app.directconv.layers import layer_forward
from app.directconv.planner import activation_peak, choose_plan


def _image_array(image):
    if isinstance(image, ImageTensor):
        image = image.to_array()
    image = np.asarray(image, dtype=np.float32)
    if image.shape != tuple(Config.INPUT_SHAPE):
        raise ShapeMismatchError(f"expected a 32x32x3 image, got {image.shape}")
    return image


def forward_naive(model, image):
    """Layer-at-a-time execution with a fresh buffer per layer."""
    x = _image_array(image)[None]
    for layer, params in zip(model.arch.layers, model.params):
        wide = {name: p.astype(np.float64) for name, p in params.items()}
        y, _ = layer_forward(layer, wide, x.astype(np.float64), train=False)
        x = y.astype(np.float32)
    return x[0]


class Arena:
    """Flat float32 activation memory with element-granular ownership.

    Every element is either free (owner -1) or owned by one tensor id;
    touching an element through the wrong owner is a plan violation.
    """

    def __init__(self, capacity):
        self.values = np.zeros(capacity, dtype=np.float32)
        self.owner = np.full(capacity, -1, dtype=np.int64)
        self._free = list(range(capacity - 1, -1, -1))
        self.live = 0
        self.peak = 0

    def allocate(self, n, owner):
        if n > len(self._free):
            raise PlanViolationError(
                f"tensor {owner} needs {n} values but only {len(self._free)} are stale")
        idx = np.array(self._free[len(self._free) - n:], dtype=np.int64)
        del self._free[len(self._free) - n:]
        self.owner[idx] = owner
        self.live += n
        self.peak = max(self.peak, self.live)
        return idx

    def _check(self, idx, owner, action):
        if np.any(self.owner[idx] != owner):
            raise PlanViolationError(f"tensor {owner} tried to {action} an address it does not own")

    def read(self, idx, owner):
        self._check(idx, owner, "read")
        return self.values[idx]

    def write(self, idx, values, owner):
        self._check(idx, owner, "write")
        self.values[idx] = values

    def release(self, idx, owner):
        idx = np.asarray(idx, dtype=np.int64).reshape(-1)
        self._check(idx, owner, "release")
        self.owner[idx] = -1
        self._free.extend(idx.tolist())
        self.live -= idx.size


def _pixel_op(layer, params):
    kind = layer.kind
    if kind == "C1":
        w = params["w"].astype(np.float64)
        b = params["b"].astype(np.float64)
        return lambda win: np.tensordot(win, w, axes=3) + b
    if kind == "C2":
        dw = params["dw"].astype(np.float64)
        pw = params["pw"].astype(np.float64)
        b = params["b"].astype(np.float64)
        return lambda win: np.maximum((win * dw).sum(axis=(0, 1)) @ pw + b, 0.0)
    if kind == "A":
        return lambda win: win.mean(axis=(0, 1))
    return lambda win: win.max(axis=(0, 1))


class InPlaceExecutor:
    """Runs a CnnModel inside an arena no larger than its declared activation bound."""

    def __init__(self, model):
        self.model = model
        self.bound = activation_peak(model.arch.layers) // Config.ACTIVATION_BYTES
        self.layer_peaks = []

    def run(self, image):
        image = _image_array(image)
        arena = Arena(self.bound)
        owner = 0
        addr = arena.allocate(image.size, owner).reshape(image.shape)
        arena.write(addr.reshape(-1), image.reshape(-1), owner)
        shape = image.shape

        for layer, params in zip(self.model.arch.layers, self.model.params):
            arena.peak = arena.live
            nxt = output_shape(layer, shape)
            if layer.kind == "Dr":
                pass
            elif layer.is_dense:
                addr, owner = self._dense(arena, layer, params, addr, owner)
            else:
                addr, owner = self._spatial(arena, layer, params, addr, owner, shape, nxt)
            self.layer_peaks.append(arena.peak * Config.ACTIVATION_BYTES)
            shape = nxt

        logits = arena.read(addr.reshape(-1), owner).copy()
        return logits, max(self.layer_peaks + [image.size * Config.ACTIVATION_BYTES])

    def _dense(self, arena, layer, params, addr, owner):
        x = arena.read(addr.reshape(-1), owner).astype(np.float64)
        z = x @ params["w"].astype(np.float64) + params["b"].astype(np.float64)
        if layer.kind == "D":
            z = np.maximum(z, 0.0)
        out = arena.allocate(z.size, owner + 1)
        arena.release(addr, owner)
        arena.write(out, z.astype(np.float32), owner + 1)
        return out, owner + 1

    def _spatial(self, arena, layer, params, addr, owner, shape, nxt):
        plan = choose_plan(layer, shape)
        op = _pixel_op(layer, params)
        k, s = plan.kernel, plan.stride
        new = owner + 1
        out_addr = np.empty(nxt, dtype=np.int64)

        for y, x in plan.initial_stale:
            arena.release(addr[y, x], owner)
        for t, ((oy, ox), stale) in enumerate(zip(plan.order, plan.stale_schedule())):
            window = addr[oy * s:oy * s + k, ox * s:ox * s + k]
            values = arena.read(window.reshape(-1), owner).reshape(window.shape).astype(np.float64)
            result = op(values)
            if len(stale):
                arena.release(addr[stale[:, 0], stale[:, 1]], owner)
            cell = arena.allocate(nxt[2], new)
            arena.write(cell, result.astype(np.float32), new)
            out_addr[oy, ox] = cell
        return out_addr, new


def forward_inplace(model, image):
    """(logits, measured peak activation bytes) of in-place execution."""
    return InPlaceExecutor(model).run(image)
