import numpy as np

from app.core.config import Config
from app.core.serialization import ModelCodec, density_to_milli, milli_to_density
from app.protonn.model import ProtoNNModel


class ProtoNNCodec(ModelCodec):
    """Header: d, m, input dim, density (thousandths); gamma travels in the payload."""
    tag = b"P"

    def encode(self, model, writer):
        writer.header_int(model.dim)
        writer.header_int(model.prototypes)
        writer.header_int(model.input_dim)
        writer.header_int(density_to_milli(model.density))
        writer.sparse(model.W, model.density)
        writer.dense(model.B)
        writer.dense(model.Z)
        writer.dense(np.array([model.gamma], dtype=np.float32))

    def decode(self, reader):
        d, m, input_dim = reader.header_int(), reader.header_int(), reader.header_int()
        density = milli_to_density(reader.header_int())
        W = reader.sparse((d, input_dim), density)
        B = reader.dense((m, d))
        Z = reader.dense((Config.NUM_CLASSES, m))
        gamma = float(reader.dense((1,))[0])
        return ProtoNNModel(W.copy(), B.copy(), Z.copy(), gamma, density)

