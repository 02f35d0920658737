"""Traversal plans for in-place layer execution and the activation bound they imply.

An input pixel is stale once every output pixel reading it has been
computed. Executing a plan step t means: read the window of output t,
release the pixels that went stale at t, then store output t in released
memory. The live value count after step t is therefore

    C_in * (H*W - released through t) + C_out * (t + 1)

and the layer's peak is the maximum of that and the resident input.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from app.core.config import Config
from app.core.errors import SpecError
from app.core.sizing import footprint_bytes
from app.directconv.arch import output_shape


@dataclass(frozen=True)
class TraversalPlan:
    in_h: int
    in_w: int
    kernel: int
    stride: int
    order: np.ndarray            # T x 2 output coordinates (row, col)
    stale_step: np.ndarray       # in_h x in_w, step after which the pixel is stale; -1 = never read
    segments: tuple = field(default=())  # ("row" | "col", n_steps) in visit order
    name: str = "row-major"

    @property
    def out_h(self):
        return (self.in_h - self.kernel) // self.stride + 1

    @property
    def out_w(self):
        return (self.in_w - self.kernel) // self.stride + 1

    @property
    def steps(self):
        return len(self.order)

    @property
    def initial_stale(self):
        return np.argwhere(self.stale_step < 0)

    def stale_at(self, t):
        """Input (row, col) addresses that become reusable once step t is done."""
        return np.argwhere(self.stale_step == t)

    def stale_schedule(self):
        """List over steps of the input addresses released at each step."""
        flat = self.stale_step.reshape(-1)
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat + 1, minlength=self.steps + 1)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        coords = np.stack(np.unravel_index(order, self.stale_step.shape), axis=1)
        return [coords[bounds[t + 1]:bounds[t + 2]] for t in range(self.steps)]

    def released_through(self):
        """Number of input pixels released once each step is done (initial ones included)."""
        counts = np.bincount(self.stale_step.reshape(-1) + 1, minlength=self.steps + 1)
        return counts[0] + np.cumsum(counts[1:])


def row_major_order(out_h, out_w):
    rows, cols = np.divmod(np.arange(out_h * out_w), out_w)
    return np.stack([rows, cols], axis=1), (("row", out_w),) * out_h


def herringbone_order(out_h, out_w):
    """Row segment s then column segment s of the shrinking unvisited corner region."""
    coords, segments = [], []
    for s in range(min(out_h, out_w)):
        row = [(s, x) for x in range(s, out_w)]
        col = [(y, s) for y in range(s + 1, out_h)]
        coords.extend(row)
        segments.append(("row", len(row)))
        if col:
            coords.extend(col)
            segments.append(("col", len(col)))
    return np.array(coords, dtype=np.int64).reshape(-1, 2), tuple(segments)


def _stale_steps(in_h, in_w, kernel, stride, order):
    out_h = (in_h - kernel) // stride + 1
    out_w = (in_w - kernel) // stride + 1
    position = np.empty((out_h, out_w), dtype=np.int64)
    position[order[:, 0], order[:, 1]] = np.arange(len(order))
    stale = np.full((in_h, in_w), -1, dtype=np.int64)
    for i in range(kernel):
        for j in range(kernel):
            view = stale[i:i + stride * (out_h - 1) + 1:stride, j:j + stride * (out_w - 1) + 1:stride]
            np.maximum(view, position, out=view)
    return stale


def _check_dims(in_h, in_w, kernel, stride):
    if min(in_h, in_w, kernel, stride) < 1 or kernel > in_h or kernel > in_w:
        raise SpecError(f"invalid plan dims {in_h}x{in_w}, kernel {kernel}, stride {stride}")


def plan_traversal(in_h, in_w, kernel, stride=1, order="row-major"):
    _check_dims(in_h, in_w, kernel, stride)
    out_h = (in_h - kernel) // stride + 1
    out_w = (in_w - kernel) // stride + 1
    if order == "row-major":
        coords, segments = row_major_order(out_h, out_w)
    elif order == "herringbone":
        coords, segments = herringbone_order(out_h, out_w)
    else:
        raise SpecError(f"unknown traversal order {order!r}")
    return TraversalPlan(in_h, in_w, kernel, stride, coords,
                         _stale_steps(in_h, in_w, kernel, stride, coords), segments, order)


def plan_herringbone(in_h, in_w, in_c, out_c, kernel):
    """Herringbone plan for a stride-1 valid convolution that grows the channel count."""
    if in_c < 1 or out_c <= in_c:
        raise SpecError(f"herringbone plan needs out_c > in_c, got {in_c} -> {out_c}")
    return plan_traversal(in_h, in_w, kernel, 1, "herringbone")


def plan_peak(plan: TraversalPlan, in_c, out_c) -> int:
    """Peak live activation values while executing `plan`."""
    resident = in_c * plan.in_h * plan.in_w
    t = np.arange(1, plan.steps + 1)
    live = in_c * (plan.in_h * plan.in_w - plan.released_through()) + out_c * t
    return int(max(resident, live.max(initial=0)))


@lru_cache(maxsize=None)
def _choose(in_h, in_w, in_c, out_c, kernel, stride):
    orders = ("herringbone", "row-major") if (out_c > in_c and stride == 1) else ("row-major",)
    best = None
    for name in orders:
        peak = plan_peak(plan_traversal(in_h, in_w, kernel, stride, name), in_c, out_c)
        if best is None or peak < best[1]:
            best = (name, peak)
    return best


def choose_plan(layer, in_shape) -> TraversalPlan:
    """The plan the in-place executor uses for a spatial layer."""
    h, w, c = in_shape
    kernel, stride, out_c = _geometry(layer, c)
    name, _ = _choose(h, w, c, out_c, kernel, stride)
    return plan_traversal(h, w, kernel, stride, name)


def _geometry(layer, in_c):
    if layer.is_pool:
        return 2, 2, in_c
    return layer.kernel, 1, layer.output_dim


def layer_peak(layer, in_shape, out_shape) -> int:
    """Peak live values for one layer under in-place execution."""
    if layer.kind == "Dr":
        return int(np.prod(in_shape))
    if layer.is_dense:
        return int(np.prod(in_shape)) + int(np.prod(out_shape))
    h, w, c = in_shape
    kernel, stride, out_c = _geometry(layer, c)
    return _choose(h, w, c, out_c, kernel, stride)[1]


def activation_peak(layers, input_shape=Config.INPUT_SHAPE) -> int:
    """High-water mark in bytes over the whole network, the input buffer included."""
    peak = int(np.prod(input_shape))
    shape = tuple(input_shape)
    for layer in layers:
        nxt = output_shape(layer, shape)
        peak = max(peak, layer_peak(layer, shape, nxt))
        shape = nxt
    return peak * Config.ACTIVATION_BYTES


def cnn_footprint(arch):
    """Dense parameters plus the in-place activation peak."""
    shapes = arch.shapes()
    return footprint_bytes(arch.param_count(), 0, activation_peak(arch.layers, shapes[0][0]))
