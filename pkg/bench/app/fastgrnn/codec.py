from app.core.config import Config
from app.core.errors import SerializationError
from app.core.serialization import ModelCodec, density_to_milli, milli_to_density
from app.fastgrnn.model import FastGrnnCell, FastGrnnModel, FastGrnnSpec, SequenceMode

_MODES = list(SequenceMode)


class FastGrnnCodec(ModelCodec):
    """Header: mode byte, hidden, input dim, W and U densities (thousandths)."""
    tag = b"F"

    def encode(self, model, writer):
        spec = model.spec
        writer.header_byte(_MODES.index(spec.mode))
        writer.header_int(spec.hidden)
        writer.header_int(model.input_dim)
        writer.header_int(density_to_milli(spec.dw))
        writer.header_int(density_to_milli(spec.du))
        for cell in model.cells:
            writer.sparse(cell.W, spec.dw)
            writer.sparse(cell.U, spec.du)
            for p in (cell.b_z, cell.b_h, cell.zeta, cell.nu):
                writer.dense(p)
        writer.dense(model.head_w)
        writer.dense(model.head_b)

    def decode(self, reader):
        index = reader.header_byte()
        if index >= len(_MODES):
            raise SerializationError(f"unknown sequencing mode byte {index}")
        mode = _MODES[index]
        hidden, input_dim = reader.header_int(), reader.header_int()
        dw, du = milli_to_density(reader.header_int()), milli_to_density(reader.header_int())
        spec = FastGrnnSpec(mode, hidden, dw, du)
        cells = []
        for _ in range(mode.cells):
            W = reader.sparse((hidden, input_dim), dw).copy()
            U = reader.sparse((hidden, hidden), du).copy()
            b_z, b_h = reader.dense((hidden,)).copy(), reader.dense((hidden,)).copy()
            zeta, nu = reader.dense((1,)).copy(), reader.dense((1,)).copy()
            cells.append(FastGrnnCell(W, U, b_z, b_h, zeta, nu, dw, du))
        L = Config.NUM_CLASSES
        head_w = reader.dense((L, mode.cells * hidden)).copy()
        head_b = reader.dense((L,)).copy()
        return FastGrnnModel(spec, cells, head_w, head_b)
