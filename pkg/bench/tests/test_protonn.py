import numpy as np
import pytest

from app.core.config import DESK, FULL, Config
from app.core.errors import NoFeasibleModelError, ShapeMismatchError, SpecError
from app.core.rng import seeded_rng
from app.core.sizing import kept_count
from app.core.training import TrainedCandidate, one_hot
from app.protonn import (
    ProtoNNModel, ProtoNNSpec, feasible_grid, full_grid, protonn_footprint, protonn_grid_search,
    protonn_loss, protonn_predict, protonn_train, select_for_budget,
)
from app.protonn.search import _desk_cells, gamma_grid
from app.protonn.training import init_prototypes, prototypes_per_class

from tests.helpers import numeric_grad, rel_error


def test_footprint_of_smallest_dense_cell():
    fp = protonn_footprint(2, 4, 1.0)
    assert fp.dense_param_count == 2 * 3072 + 2 * 4 + 10 * 4 + 1
    assert fp.total_bytes == 24772
    # published size is 24.77 "KB" of 1000 bytes
    assert abs(float(fp.total_kb) - 24.77) / 24.77 <= 0.03


def test_sparse_projection_costs_eight_bytes_per_nonzero():
    fp = protonn_footprint(4, 8, 0.1)
    assert fp.sparse_nonzero_count == kept_count(0.1, 4 * 3072)
    assert fp.dense_param_count == 4 * 8 + 10 * 8 + 1


def test_no_cell_fits_the_two_smallest_budgets():
    assert feasible_grid(8) == []
    assert feasible_grid(16) == []
    assert {spec.d for spec in feasible_grid(32)} == {2}


def test_grid_layout():
    grid = full_grid()
    assert len(grid) == 6 * 6 * 9 * 3
    assert (grid[0].d, grid[0].m, grid[0].gamma, grid[0].lr) == (2, 2, gamma_grid()[0], 0.1)
    assert len(gamma_grid()) == 9
    assert str(grid[0]) == "d=2,m=2,gamma=0.00015,lr=0.1,rho=1"


def test_bad_sizes():
    with pytest.raises(SpecError):
        protonn_footprint(0, 4)
    with pytest.raises(SpecError):
        protonn_footprint(2, 4, density=0.0)


def test_model_shape_checks():
    with pytest.raises(ShapeMismatchError):
        ProtoNNModel(np.zeros((3, 5)), np.zeros((4, 2)), np.zeros((10, 4)), 1.0)
    with pytest.raises(ShapeMismatchError):
        ProtoNNModel(np.zeros((3, 5)), np.zeros((4, 3)), np.zeros((10, 5)), 1.0)


def _small_model(rng, dtype=np.float64):
    return ProtoNNModel(rng.normal(size=(3, 6)).astype(dtype), rng.normal(size=(4, 3)).astype(dtype),
                        rng.normal(size=(10, 4)).astype(dtype), 0.7)


def test_prediction_follows_the_kernel_formula():
    rng = seeded_rng(0)
    model = _small_model(rng)
    x = rng.normal(size=6)
    z = model.W @ x
    expected = sum(np.exp(-0.49 * np.sum((z - b) ** 2)) * model.Z[:, j] for j, b in enumerate(model.B))
    assert np.allclose(protonn_predict(model, x), expected)
    with pytest.raises(ShapeMismatchError):
        protonn_predict(model, np.zeros(5))


def test_loss_gradients():
    rng = seeded_rng(1)
    model = _small_model(rng)
    x = rng.normal(size=(5, 6))
    targets = one_hot(rng.integers(0, 10, size=5), 10).astype(np.float64)
    _, grads = protonn_loss(model, x, targets)

    def f():
        return protonn_loss(model, x, targets)[0]

    for name, p in model.params().items():
        assert rel_error(grads[name], numeric_grad(f, p)) <= 1e-4, name


def test_prototypes_split_across_classes():
    assert prototypes_per_class(4) == [1, 1, 1, 1, 0, 0, 0, 0, 0, 0]
    assert sum(prototypes_per_class(64)) == 64
    assert prototypes_per_class(20) == [2] * 10


def test_init_prototypes_assigns_labels():
    rng = seeded_rng(0)
    projected = rng.normal(size=(100, 3))
    labels = np.arange(100) % 10
    B, Z = init_prototypes(projected, labels, 20, rng)
    assert B.shape == (20, 3)
    assert Z.shape == (10, 20)
    assert Z.sum(axis=0).tolist() == [1.0] * 20
    assert Z.sum(axis=1).tolist() == [2.0] * 10


def test_training_learns_blobs_and_keeps_density(blob_split):
    model, history = protonn_train(blob_split, d=8, m=20, density=0.5, gamma=0.5, lr=0.01,
                                   epochs=4, seed=0)
    assert np.count_nonzero(model.W) <= kept_count(0.5, 8 * 8)
    assert model.footprint().sparse_nonzero_count == kept_count(0.5, 64)
    assert len(history.records) <= 4
    assert history.best_val_acc > 0.5


def test_training_is_seeded(blob_split):
    a, _ = protonn_train(blob_split, d=4, m=10, gamma=0.5, epochs=2, seed=3)
    b, _ = protonn_train(blob_split, d=4, m=10, gamma=0.5, epochs=2, seed=3)
    assert np.array_equal(a.W, b.W)
    assert np.array_equal(a.B, b.B)


def test_empty_pool_is_infeasible():
    with pytest.raises(NoFeasibleModelError) as e:
        select_for_budget([], 16)
    assert e.value.budget_kb == 16


def test_select_for_budget_prefers_accuracy_then_order():
    cells = [
        TrainedCandidate(ProtoNNSpec(2, 2, 1.5, 0.1), protonn_footprint(2, 2), 0.2, order=0),
        TrainedCandidate(ProtoNNSpec(2, 4, 1.5, 0.1), protonn_footprint(2, 4), 0.3, order=1),
        TrainedCandidate(ProtoNNSpec(4, 4, 1.5, 0.1), protonn_footprint(4, 4), 0.9, order=2),
    ]
    assert select_for_budget(cells, 32).spec.m == 4
    assert select_for_budget(cells, 64).spec.d == 4


def test_desk_scale_keeps_a_share_of_every_pair():
    specs = feasible_grid(32)
    kept = _desk_cells(specs, DESK, seed=0)
    pairs = {(s.d, s.m) for s in specs}
    assert {(s.d, s.m) for s in kept} == pairs
    assert len(kept) == len(pairs) * DESK.candidates(27)
    assert _desk_cells(specs, FULL, seed=0) is specs


@pytest.mark.slow
def test_grid_search_on_blobs(blob_split):
    best = protonn_grid_search(8, blob_split, scale=DESK, seed=0)
    assert best.footprint.fits(8)
    assert 0.0 <= best.val_acc <= 1.0
    assert Config.PROTONN_DENSITY == best.spec.density
