from app.core.config import Config
from app.core.serialization import ModelCodec, density_to_milli, milli_to_density
from app.bonsai.model import DENSITIES, BonsaiModel, BonsaiSpec


class BonsaiCodec(ModelCodec):
    """Header: depth, projection dim, input dim, sigma (thousandths)."""
    tag = b"B"

    def encode(self, model, writer):
        writer.header_int(model.spec.depth)
        writer.header_int(model.spec.dim)
        writer.header_int(model.input_dim)
        writer.header_int(density_to_milli(model.sigma))
        for name, p in model.params().items():
            writer.sparse(p, DENSITIES[name])

    def decode(self, reader):
        spec = BonsaiSpec(reader.header_int(), reader.header_int())
        input_dim = reader.header_int()
        sigma = milli_to_density(reader.header_int())
        L = Config.NUM_CLASSES
        shapes = {
            "Z": (spec.dim, input_dim),
            "W": (spec.nodes, L, spec.dim),
            "V": (spec.nodes, L, spec.dim),
            "T": (spec.internal_nodes, spec.dim),
        }
        arrays = {name: reader.sparse(shape, DENSITIES[name]).copy() for name, shape in shapes.items()}
        return BonsaiModel(spec, sigma=sigma, **arrays)
