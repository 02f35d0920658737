import numpy as np
import pytest

from app.bonsai import (
    BonsaiModel, BonsaiSpec, BonsaiSweep, bonsai_footprint, bonsai_loss, bonsai_predict, bonsai_train,
    hard_path, select_for_budget, sweep_specs,
)
from app.bonsai.search import desk_specs
from app.bonsai.training import branch_sharpness, init_bonsai
from app.core.config import DESK, FULL, Config
from app.core.errors import NoFeasibleModelError, ShapeMismatchError, SpecError
from app.core.rng import seeded_rng
from app.core.sizing import kept_count
from app.core.training import TrainedCandidate

from tests.helpers import numeric_grad, rel_error


def test_footprint_is_byte_exact():
    fp = bonsai_footprint(BonsaiSpec(2, 3))
    assert fp.sparse_nonzero_count == 1843 + 63 + 63 + 6
    assert fp.dense_param_count == 0
    assert fp.total_bytes == 15800
    assert str(fp.total_kb) == "15.43"


@pytest.mark.parametrize("depth,dim,published_kb", [
    (5, 1, 7.88), (2, 6, 30.85), (3, 11, 60.86), (5, 12, 94.52),
])
def test_footprints_near_published_sizes(depth, dim, published_kb):
    kb = float(BonsaiSpec(depth, dim).footprint().total_kb)
    assert abs(kb - published_kb) / published_kb <= 0.005


def test_spec_validation():
    assert BonsaiSpec(3, 4).nodes == 15
    assert BonsaiSpec(3, 4).internal_nodes == 7
    with pytest.raises(SpecError):
        BonsaiSpec(0, 4)
    with pytest.raises(SpecError):
        BonsaiSpec(9, 4)
    with pytest.raises(SpecError):
        BonsaiSpec(2, 0)


def test_sweep_stops_at_the_first_dim_over_budget():
    specs = sweep_specs(128)
    assert all(s.footprint().fits(128) for s in specs)
    for depth in range(1, Config.BONSAI_MAX_DEPTH + 1):
        dims = [s.dim for s in specs if s.depth == depth]
        assert dims == list(range(1, len(dims) + 1))
        assert not BonsaiSpec(depth, len(dims) + 1).footprint().fits(128)


def test_desk_specs_cover_every_budget_band():
    specs = sweep_specs(128)
    kept = desk_specs(specs, DESK)
    assert set(kept) <= set(specs)
    for budget in Config.BUDGETS_KB:
        assert any(s.footprint().fits(budget) for s in kept)
    assert desk_specs(specs, FULL) is specs


def _random_model(spec, input_dim, seed, dtype=np.float64):
    rng = seeded_rng(seed)
    return BonsaiModel(
        spec,
        Z=rng.normal(size=(spec.dim, input_dim)).astype(dtype),
        W=rng.normal(size=(spec.nodes, 10, spec.dim)).astype(dtype),
        V=rng.normal(size=(spec.nodes, 10, spec.dim)).astype(dtype),
        T=rng.normal(size=(spec.internal_nodes, spec.dim)).astype(dtype),
    )


def test_hard_path_reaches_a_leaf():
    spec = BonsaiSpec(3, 4)
    model = _random_model(spec, 6, seed=0)
    x = seeded_rng(1).normal(size=6)
    path = hard_path(model, x)
    assert len(path) == spec.depth + 1
    assert path[0] == 0
    assert path[-1] >= spec.internal_nodes
    for parent, child in zip(path, path[1:]):
        assert child in (2 * parent + 1, 2 * parent + 2)


def test_hard_prediction_sums_the_path_nodes():
    model = _random_model(BonsaiSpec(2, 3), 5, seed=2)
    x = seeded_rng(3).normal(size=5)
    x_hat = model.Z @ x
    expected = sum((model.W[k] @ x_hat) * np.tanh(model.sigma * (model.V[k] @ x_hat))
                   for k in hard_path(model, x))
    assert np.allclose(bonsai_predict(model, x), expected)


def test_sharp_soft_mode_approaches_hard_mode():
    model = _random_model(BonsaiSpec(2, 3), 5, seed=4)
    x = seeded_rng(5).normal(size=5)
    assert np.allclose(bonsai_predict(model, x, "soft", sharpness=1e4), bonsai_predict(model, x), atol=1e-3)
    with pytest.raises(SpecError):
        bonsai_predict(model, x, "fuzzy")


def test_model_rejects_wrong_shapes():
    spec = BonsaiSpec(2, 3)
    good = _random_model(spec, 5, seed=0)
    with pytest.raises(ShapeMismatchError):
        BonsaiModel(spec, good.Z, good.W[:3], good.V[:3], good.T)
    with pytest.raises(ShapeMismatchError):
        good.project(np.zeros((1, 4)))


def test_loss_gradients():
    model = _random_model(BonsaiSpec(2, 3), 5, seed=6)
    for p in model.params().values():
        p *= 0.5
    rng = seeded_rng(7)
    x = rng.normal(size=(4, 5))
    labels = rng.integers(0, 10, size=4)
    _, grads = bonsai_loss(model, x, labels, sharpness=2.0)

    def f():
        return bonsai_loss(model, x, labels, sharpness=2.0)[0]

    for name, p in model.params().items():
        assert rel_error(grads[name], numeric_grad(f, p)) <= 1e-4, name


def test_sharpness_ramp():
    assert branch_sharpness(0, 150) > 1.0
    assert branch_sharpness(99, 150) == pytest.approx(Config.BONSAI_MAX_BRANCH_SHARPNESS)
    assert branch_sharpness(149, 150) == pytest.approx(Config.BONSAI_MAX_BRANCH_SHARPNESS)


def test_init_shapes():
    model = init_bonsai(BonsaiSpec(2, 4), 8, seeded_rng(0))
    assert model.Z.shape == (4, 8)
    assert model.W.shape == model.V.shape == (7, 10, 4)
    assert model.T.shape == (3, 4)


def test_training_keeps_the_configured_densities(blob_split):
    spec = BonsaiSpec(2, 4)
    model, final, history = bonsai_train(blob_split, spec, epochs=6, seed=0)
    kept = {"Z": kept_count(0.2, 4 * 8), "W": kept_count(0.3, 7 * 10 * 4),
            "V": kept_count(0.3, 7 * 10 * 4), "T": kept_count(0.62, 3 * 4)}
    assert kept == {"Z": 6, "W": 84, "V": 84, "T": 7}
    for trained in (model, final):
        for name, p in trained.params().items():
            assert np.count_nonzero(p) == kept[name], name
    assert [r.phase for r in history.records] == [1, 1, 2, 2, 3, 3]
    assert history.best_epoch >= 2
    assert 0.0 <= history.best_val_acc <= 1.0


def test_select_for_budget():
    small = TrainedCandidate(BonsaiSpec(2, 3), BonsaiSpec(2, 3).footprint(), 0.3, order=0)
    large = TrainedCandidate(BonsaiSpec(2, 6), BonsaiSpec(2, 6).footprint(), 0.4, order=1)
    sweep = BonsaiSweep([small, large])
    assert select_for_budget(sweep, 16) is small
    assert select_for_budget(sweep, 32) is large
    with pytest.raises(NoFeasibleModelError):
        select_for_budget(sweep, 8)
