import numpy as np

from app.core.errors import SerializationError
from app.core.serialization import ModelCodec
from app.directconv.arch import KINDS, ArchSpec, LayerSpec
from app.directconv.model import CnnModel

# parameter names per layer kind, in payload order
_PARAM_ORDER = {"C1": ("w", "b"), "C2": ("dw", "pw", "b"), "D": ("w", "b"), "D*": ("w", "b")}


class CnnCodec(ModelCodec):
    tag = b"C"

    def encode(self, model, writer):
        writer.header_int(len(model.arch.layers))
        for layer in model.arch.layers:
            writer.header_byte(KINDS.index(layer.kind))
            writer.header_int(layer.output_dim or 0)
            writer.header_int(layer.kernel or 0)
        for layer, params in zip(model.arch.layers, model.params):
            for name in _PARAM_ORDER.get(layer.kind, ()):
                writer.dense(params[name])

    def decode(self, reader):
        layers = []
        for _ in range(reader.header_int()):
            code = reader.header_byte()
            if code >= len(KINDS):
                raise SerializationError(f"unknown layer code {code}")
            kind = KINDS[code]
            out, k = reader.header_int(), reader.header_int()
            if kind in ("C1", "C2"):
                layers.append(LayerSpec(kind, out, k))
            elif kind == "D":
                layers.append(LayerSpec(kind, out))
            else:
                layers.append(LayerSpec(kind))
        arch = ArchSpec(tuple(layers))
        # shapes come from a fresh initialization; values are then overwritten
        template = CnnModel.initialize(arch, np.random.default_rng(0))
        params = []
        for layer, layer_params in zip(arch.layers, template.params):
            params.append({name: reader.dense(layer_params[name].shape)
                           for name in _PARAM_ORDER.get(layer.kind, ())})
        return CnnModel(arch, params)
