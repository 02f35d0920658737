from dataclasses import dataclass, field

import numpy as np

from app.core.config import Config
from app.core.errors import ShapeMismatchError
from app.directconv.arch import ArchSpec, parse_arch
from app.directconv.layers import init_params, layer_backward, layer_forward
from app.directconv.planner import cnn_footprint


@dataclass
class CnnModel:
    arch: ArchSpec
    params: list = field(default_factory=list)   # one dict per layer

    @classmethod
    def initialize(cls, arch, rng, dtype=np.float32):
        if isinstance(arch, str):
            arch = parse_arch(arch)
        params = [init_params(layer, s_in, rng, dtype) for layer, (s_in, _) in zip(arch.layers, arch.shapes())]
        return cls(arch, params)

    @property
    def shapes(self):
        return self.arch.shapes()

    def flat_params(self):
        """{'<layer>.<name>': array} views, the form the optimizer consumes."""
        return {f"{i}.{name}": p for i, layer_params in enumerate(self.params) for name, p in layer_params.items()}

    def param_count(self):
        return sum(p.size for p in self.flat_params().values())

    def footprint(self):
        return cnn_footprint(self.arch)

    def forward(self, x, train=False, rng=None):
        if tuple(x.shape[1:]) != tuple(Config.INPUT_SHAPE):
            raise ShapeMismatchError(f"expected N x 32 x 32 x 3 inputs, got {x.shape}")
        caches = []
        for layer, params in zip(self.arch.layers, self.params):
            x, cache = layer_forward(layer, params, x, train, rng)
            caches.append(cache)
        return x, caches

    def backward(self, caches, dlogits):
        grads = {}
        dy = dlogits
        for i in range(len(self.arch.layers) - 1, -1, -1):
            dy, layer_grads = layer_backward(self.arch.layers[i], self.params[i], caches[i], dy)
            for name, g in layer_grads.items():
                grads[f"{i}.{name}"] = g
        return grads, dy

    def predict_scores(self, x, batch_size=Config.EVAL_BATCH_SIZE):
        out = [self.forward(x[i:i + batch_size])[0] for i in range(0, len(x), batch_size)]
        if not out:
            return np.zeros((0, Config.NUM_CLASSES), dtype=np.float32)
        return np.concatenate(out)
