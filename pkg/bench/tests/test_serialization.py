import numpy as np
import pytest

from app import models  # noqa: F401  registers every codec
from app.bonsai import BonsaiSpec
from app.bonsai.training import init_bonsai, threshold_params as threshold_bonsai
from app.core.errors import SerializationError
from app.core.rng import seeded_rng
from app.core.serialization import decode_model, encode_model, load_model, payload_size, save_model
from app.core.sparsity import hard_threshold_array
from app.directconv import CnnModel
from app.fastgrnn import FastGrnnSpec, init_fastgrnn
from app.fastgrnn.training import sparse_densities, threshold_params as threshold_fastgrnn
from app.protonn import ProtoNNModel


def _cnn(seed):
    return CnnModel.initialize("A,C2(8,3),M,C1(4,1),D(16),Dr,D*", seeded_rng(seed))


def _protonn(seed, density=0.3):
    rng = seeded_rng(seed)
    W = rng.normal(size=(4, 3072)).astype(np.float32)
    if density < 1.0:
        W, _ = hard_threshold_array(W, density)
    return ProtoNNModel(W, rng.normal(size=(6, 4)).astype(np.float32),
                        rng.normal(size=(10, 6)).astype(np.float32), 0.75, density)


def _bonsai(seed):
    model = init_bonsai(BonsaiSpec(2, 3), 3072, seeded_rng(seed))
    threshold_bonsai(model.params())
    return model


def _fastgrnn(seed, mode="channel", dw=0.2, du=0.3):
    model = init_fastgrnn(FastGrnnSpec(mode, 7, dw, du), seeded_rng(seed))
    threshold_fastgrnn(model.params(), sparse_densities(model))
    return model


BUILDERS = {
    "directconv": _cnn,
    "protonn": _protonn,
    "protonn-dense": lambda seed: _protonn(seed, 1.0),
    "bonsai": _bonsai,
    "fastgrnn-channel": _fastgrnn,
    "fastgrnn-multi": lambda seed: _fastgrnn(seed, "multi", 0.1, 1.0),
    "fastgrnn-row-dense": lambda seed: _fastgrnn(seed, "row", 1.0, 1.0),
}


def _arrays(model):
    if isinstance(model, CnnModel):
        return model.flat_params()
    return model.params()


@pytest.mark.parametrize("name", sorted(BUILDERS))
@pytest.mark.parametrize("seed", [0, 1])
def test_payload_size_matches_footprint(name, seed):
    model = BUILDERS[name](seed)
    fp = model.footprint()
    assert payload_size(model) == fp.total_bytes - fp.activation_peak_bytes


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_decoded_model_is_identical(name):
    model = BUILDERS[name](3)
    decoded = decode_model(encode_model(model))
    assert type(decoded) is type(model)
    assert decoded.footprint() == model.footprint()
    original = _arrays(model)
    restored = _arrays(decoded)
    assert original.keys() == restored.keys()
    for key, value in original.items():
        assert np.array_equal(restored[key], value), key


def test_fastgrnn_spec_survives():
    model = _fastgrnn(0, "multi", 0.1, 1.0)
    assert decode_model(encode_model(model)).spec == model.spec


def test_cnn_architecture_survives():
    model = _cnn(0)
    assert decode_model(encode_model(model)).arch == model.arch


def test_unknown_tag():
    with pytest.raises(SerializationError, match="tag"):
        decode_model(b"Q" + bytes(16))
    with pytest.raises(SerializationError):
        decode_model(b"")


def test_truncated_file():
    data = encode_model(_bonsai(0))
    with pytest.raises(SerializationError, match="truncated"):
        decode_model(data[:-3])


def test_trailing_bytes():
    data = encode_model(_protonn(0))
    with pytest.raises(SerializationError, match="trailing"):
        decode_model(data + b"\x00")


def test_bad_fastgrnn_mode_byte():
    data = bytearray(encode_model(_fastgrnn(0)))
    data[1] = 9
    with pytest.raises(SerializationError, match="mode"):
        decode_model(bytes(data))


def test_unregistered_model_type():
    with pytest.raises(SerializationError):
        encode_model(object())


def test_save_and_load(tmp_path):
    path = tmp_path / "model.bin"
    model = _fastgrnn(2)
    save_model(path, model)
    loaded = load_model(path)
    assert np.array_equal(loaded.cells[0].W, model.cells[0].W)
