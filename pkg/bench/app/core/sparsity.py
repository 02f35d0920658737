import numpy as np

from app.core.sizing import kept_count
from app.core.tensors import DenseMatrix, SparseMatrix


def top_k_mask(values, k):
    """Boolean mask of the k largest |values|; equal magnitudes go to the lower flat index."""
    flat = np.asarray(values).reshape(-1)
    mask = np.zeros(flat.size, dtype=bool)
    if k > 0:
        order = np.argsort(-np.abs(flat), kind="stable")
        mask[order[:k]] = True
    return mask.reshape(np.shape(values))


def hard_threshold_array(array, density):
    """Zero all but round(density * size) largest-magnitude entries.

    Returns (pruned copy, support mask). Density 1 keeps everything.
    """
    array = np.asarray(array)
    k = kept_count(density, array.size)
    if k == array.size:
        return array.copy(), np.ones(array.shape, dtype=bool)
    mask = top_k_mask(array, k)
    return np.where(mask, array, 0).astype(array.dtype), mask


def hard_threshold(matrix: DenseMatrix, density: float) -> SparseMatrix:
    dense = matrix.to_array()
    k = kept_count(density, dense.size)
    mask = top_k_mask(dense, k).reshape(-1)
    indices = np.flatnonzero(mask)
    return SparseMatrix(matrix.rows, matrix.cols, indices, dense.reshape(-1)[indices])


def to_sparse(array, density):
    """Sparse storage of a 2-D parameter array at the given density."""
    array = np.asarray(array, dtype=np.float32)
    if array.ndim == 1:
        array = array.reshape(1, -1)
    return hard_threshold(DenseMatrix.from_array(array), density)
