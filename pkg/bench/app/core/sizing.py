"""Byte-exact size model.

Dense parameters cost 4 bytes, sparse nonzeros 8 bytes (value + flat index),
CNN activations ACTIVATION_BYTES per live value. All arithmetic is integer;
kilobytes are derived only for display.
"""
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP

from app.core.config import Config
from app.core.errors import SpecError


@dataclass(frozen=True)
class Footprint:
    dense_param_count: int
    sparse_nonzero_count: int
    activation_peak_bytes: int
    total_bytes: int

    @property
    def total_kb(self) -> Decimal:
        return kb(self.total_bytes)

    @property
    def param_bytes(self) -> int:
        return self.total_bytes - self.activation_peak_bytes

    def fits(self, budget_kb: int) -> bool:
        return self.total_bytes <= budget_kb * 1024

    def __add__(self, other):
        return footprint_bytes(
            self.dense_param_count + other.dense_param_count,
            self.sparse_nonzero_count + other.sparse_nonzero_count,
            max(self.activation_peak_bytes, other.activation_peak_bytes),
        )

    def describe(self) -> str:
        return f"{self.total_bytes} B ({format_kb(self.total_bytes)})"


def kb(total_bytes: int) -> Decimal:
    """total_bytes / 1024 rounded half-up to 2 decimals."""
    return (Decimal(total_bytes) / Decimal(1024)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def format_kb(total_bytes: int) -> str:
    return f"{kb(total_bytes)}KB"


def footprint_bytes(dense_count: int, sparse_nnz: int, activation_peak: int = 0) -> Footprint:
    if dense_count < 0 or sparse_nnz < 0 or activation_peak < 0:
        raise SpecError("footprint inputs must be non-negative")
    total = (Config.DENSE_PARAM_BYTES * dense_count
             + Config.SPARSE_ENTRY_BYTES * sparse_nnz
             + activation_peak)
    return Footprint(int(dense_count), int(sparse_nnz), int(activation_peak), int(total))


def check_density(density: float) -> float:
    density = float(density)
    if not 0.0 < density <= 1.0:
        raise SpecError(f"density must lie in (0, 1], got {density}")
    return density


def kept_count(density: float, size: int) -> int:
    """round(density * size), half-up, computed on the decimal density."""
    check_density(density)
    exact = Decimal(repr(float(density))) * Decimal(int(size))
    return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def matrix_cost(size: int, density: float) -> tuple[int, int]:
    """(dense_count, sparse_nnz) for a matrix of `size` entries stored at `density`.

    Density 1.0 means dense storage; anything lower is stored sparse.
    """
    density = check_density(density)
    if density >= 1.0:
        return size, 0
    return 0, kept_count(density, size)
