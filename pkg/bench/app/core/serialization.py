"""Little-endian model files.

Layout: family tag (1 byte), family header (extra bytes and 4-byte integer
spec fields), then the parameter payload: dense blocks as raw float32,
sparse blocks as (uint32 flat index, float32 value) pairs. The payload size
equals Footprint.total_bytes - activation_peak_bytes.
"""
from abc import ABC, abstractmethod
import struct

import numpy as np

from app.core.errors import SerializationError
from app.core.sizing import kept_count
from app.core.sparsity import to_sparse

_SPARSE_ENTRY = np.dtype([("index", "<u4"), ("value", "<f4")])


def density_to_milli(density: float) -> int:
    return int(round(float(density) * 1000))


def milli_to_density(milli: int) -> float:
    return milli / 1000.0


class PayloadWriter:
    def __init__(self, tag: bytes):
        self._header = bytearray(tag)
        self._payload = bytearray()

    def header_byte(self, value: int):
        self._header += struct.pack("<B", value)

    def header_int(self, value: int):
        self._header += struct.pack("<i", int(value))

    def dense(self, array):
        self._payload += np.asarray(array, dtype="<f4").tobytes()

    def sparse(self, array, density):
        """Store `array` dense at density 1, else as its top-k sparse entries."""
        if density >= 1.0:
            self.dense(array)
            return
        # flat indices follow C order of the original array
        matrix = to_sparse(np.asarray(array).reshape(1, -1), density)
        entries = np.empty(matrix.nnz, dtype=_SPARSE_ENTRY)
        entries["index"] = matrix.indices
        entries["value"] = matrix.values
        self._payload += entries.tobytes()

    @property
    def payload_size(self) -> int:
        return len(self._payload)

    def to_bytes(self) -> bytes:
        return bytes(self._header) + bytes(self._payload)


class PayloadReader:
    def __init__(self, data: bytes):
        self._data = memoryview(data)
        self._pos = 1
        self.tag = bytes(data[:1])

    def _take(self, n):
        if self._pos + n > len(self._data):
            raise SerializationError("model file is truncated")
        chunk = self._data[self._pos:self._pos + n]
        self._pos += n
        return chunk

    def header_byte(self) -> int:
        return struct.unpack("<B", self._take(1))[0]

    def header_int(self) -> int:
        return struct.unpack("<i", self._take(4))[0]

    def dense(self, shape):
        count = int(np.prod(shape))
        raw = self._take(4 * count)
        return np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape)

    def sparse(self, shape, density):
        if density >= 1.0:
            return self.dense(shape)
        size = int(np.prod(shape))
        nnz = kept_count(density, size)
        entries = np.frombuffer(self._take(_SPARSE_ENTRY.itemsize * nnz), dtype=_SPARSE_ENTRY)
        out = np.zeros(size, dtype=np.float32)
        if nnz and int(entries["index"].max()) >= size:
            raise SerializationError("sparse index out of range")
        out[entries["index"].astype(np.int64)] = entries["value"]
        return out.reshape(shape)

    def finish(self):
        if self._pos != len(self._data):
            raise SerializationError(f"{len(self._data) - self._pos} trailing bytes in model file")


class ModelCodec(ABC):
    tag: bytes = b"?"

    @abstractmethod
    def encode(self, model, writer: PayloadWriter):
        pass

    @abstractmethod
    def decode(self, reader: PayloadReader):
        pass


_CODECS = {}


def register_codec(codec: ModelCodec, model_type):
    """Register `codec` for instances of `model_type` and for its tag byte."""
    _CODECS[codec.tag] = codec
    _CODECS[model_type] = codec


def _codec_for(model):
    for klass in type(model).__mro__:
        if klass in _CODECS:
            return _CODECS[klass]
    raise SerializationError(f"no codec registered for {type(model).__name__}")


def encode_model(model) -> bytes:
    codec = _codec_for(model)
    writer = PayloadWriter(codec.tag)
    codec.encode(model, writer)
    return writer.to_bytes()


def payload_size(model) -> int:
    codec = _codec_for(model)
    writer = PayloadWriter(codec.tag)
    codec.encode(model, writer)
    return writer.payload_size


def decode_model(data: bytes):
    if not data:
        raise SerializationError("empty model file")
    codec = _CODECS.get(bytes(data[:1]))
    if codec is None:
        raise SerializationError(f"unknown family tag {bytes(data[:1])!r}")
    reader = PayloadReader(data)
    model = codec.decode(reader)
    reader.finish()
    return model


def save_model(path, model):
    with open(path, "wb") as f:
        f.write(encode_model(model))


def load_model(path):
    # family packages register their codecs on import
    import app.models  # noqa: F401
    with open(path, "rb") as f:
        return decode_model(f.read())
