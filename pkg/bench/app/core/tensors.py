"""Numeric value types shared by every model family."""
from dataclasses import dataclass

import numpy as np

from app.core.config import Config
from app.core.errors import ShapeMismatchError


@dataclass(frozen=True)
class ImageTensor:
    """H x W x C float32 pixel grid, height-major then width then channel."""
    height: int
    width: int
    channels: int
    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32).reshape(-1)
        if data.size != self.height * self.width * self.channels:
            raise ShapeMismatchError(
                f"image data holds {data.size} values, expected "
                f"{self.height}x{self.width}x{self.channels}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array):
        array = np.asarray(array, dtype=np.float32)
        if array.ndim != 3:
            raise ShapeMismatchError(f"expected an HxWxC array, got shape {array.shape}")
        h, w, c = array.shape
        return cls(h, w, c, array)

    @property
    def shape(self):
        return (self.height, self.width, self.channels)

    def to_array(self):
        return self.data.reshape(self.shape)

    def is_cifar(self):
        return self.shape == Config.INPUT_SHAPE


@dataclass(frozen=True)
class DenseMatrix:
    rows: int
    cols: int
    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32).reshape(-1)
        if data.size != self.rows * self.cols:
            raise ShapeMismatchError(
                f"dense matrix data holds {data.size} values, expected {self.rows}x{self.cols}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array):
        array = np.asarray(array, dtype=np.float32)
        if array.ndim == 1:
            array = array.reshape(1, -1)
        if array.ndim != 2:
            raise ShapeMismatchError(f"expected a 2-D array, got shape {array.shape}")
        return cls(array.shape[0], array.shape[1], array)

    def to_array(self):
        return self.data.reshape(self.rows, self.cols)


@dataclass(frozen=True)
class SparseMatrix:
    """(flat index, value) pairs over a fixed dense shape."""
    rows: int
    cols: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        values = np.asarray(self.values, dtype=np.float32).reshape(-1)
        if indices.size != values.size:
            raise ShapeMismatchError("sparse matrix needs one value per index")
        size = self.rows * self.cols
        if indices.size > size:
            raise ShapeMismatchError(f"{indices.size} entries exceed {self.rows}x{self.cols}")
        if indices.size:
            if indices[0] < 0 or indices[-1] >= size:
                raise ShapeMismatchError("flat index out of range")
            if np.any(np.diff(indices) <= 0):
                raise ShapeMismatchError("flat indices must be strictly increasing")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @property
    def nnz(self):
        return int(self.indices.size)

    @property
    def density(self):
        size = self.rows * self.cols
        return self.nnz / size if size else 0.0

    def to_dense(self):
        out = np.zeros(self.rows * self.cols, dtype=np.float32)
        out[self.indices] = self.values
        return DenseMatrix(self.rows, self.cols, out)

    def to_array(self):
        return self.to_dense().to_array()
