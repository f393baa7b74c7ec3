"""
Periodic grids over flat tori X = (C/Lambda)^n carried as 2n real axes ordered
x_1, y_1, ..., x_n, y_n, and the complex difference calculus on them.

Array-level stencils act on the trailing 2n axes, so a stack of fields
(a whole path in time) is differentiated in one call.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .helpers import memoize
from .pointwise_calculus import HERMITIAN_TOL

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class TorusGrid:
    complex_dim: int
    points_per_axis: int
    period: float = 2 * math.pi

    def __post_init__(self):
        if self.complex_dim not in (1, 2):
            raise DomainError(f"complex dimension must be 1 or 2, got {self.complex_dim}")
        if self.points_per_axis < 8 or self.points_per_axis % 2:
            raise DomainError(f"points per axis must be an even integer >= 8, got {self.points_per_axis}")
        if not self.period > 0:
            raise DomainError(f"period must be positive, got {self.period}")

    @property
    def real_dim(self) -> int:
        return 2 * self.complex_dim

    @property
    def spacing(self) -> float:
        return self.period / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.real_dim

    @property
    def total_points(self) -> int:
        return self.points_per_axis ** self.real_dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.real_dim

    @property
    def volume(self) -> float:
        return self.period ** self.real_dim

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Real coordinate arrays (x_1, y_1, ..., x_n, y_n), each of the grid shape."""
        return grid_coordinates(self)


@memoize
def grid_coordinates(grid: TorusGrid) -> tuple[np.ndarray, ...]:
    axis = np.arange(grid.points_per_axis) * grid.spacing
    return tuple(np.meshgrid(*([axis] * grid.real_dim), indexing="ij"))


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise DomainError(f"field shape {values.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("field has non-finite values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: TorusGrid, value: float = 0.0) -> ScalarField:
        return cls(grid, np.full(grid.shape, float(value)))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def _other(self, other) -> np.ndarray | float:
        if isinstance(other, ScalarField):
            check_same_grid(self.grid, other.grid)
            return other.values
        return float(other)

    def __add__(self, other) -> ScalarField:
        return ScalarField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other) -> ScalarField:
        return ScalarField(self.grid, self.values - self._other(other))

    def __mul__(self, other) -> ScalarField:
        """Scalar multiple, or pointwise product with another field."""
        return ScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self) -> ScalarField:
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class Form11Field:
    """(1,1)-form field: an n x n Hermitian matrix at every grid point."""
    grid: TorusGrid
    matrices: np.ndarray

    def __post_init__(self):
        matrices = np.asarray(self.matrices, dtype=complex)
        n = self.grid.complex_dim
        if matrices.shape != self.grid.shape + (n, n):
            raise DomainError(f"form shape {matrices.shape} does not match grid {self.grid.shape} x ({n}, {n})")
        asymmetry = np.max(np.abs(matrices - np.swapaxes(matrices.conj(), -1, -2)))
        if asymmetry > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(matrices)))):
            raise DomainError(f"form is not Hermitian (defect {asymmetry:.3e})")
        object.__setattr__(self, "matrices", matrices)

    @classmethod
    def constant(cls, grid: TorusGrid, matrix) -> Form11Field:
        matrix = np.asarray(matrix, dtype=complex)
        return cls(grid, np.broadcast_to(matrix, grid.shape + matrix.shape).copy())

    def __add__(self, other: Form11Field) -> Form11Field:
        check_same_grid(self.grid, other.grid)
        return Form11Field(self.grid, self.matrices + other.matrices)


def check_same_grid(first: TorusGrid, second: TorusGrid) -> None:
    if first != second:
        raise DomainError(f"grid mismatch: {first} vs {second}")


# array-level stencils on the trailing real axes

def _axis(values: np.ndarray, grid: TorusGrid, real_axis: int) -> int:
    return values.ndim - grid.real_dim + real_axis


def first_difference(values: np.ndarray, grid: TorusGrid, real_axis: int) -> np.ndarray:
    axis = _axis(values, grid, real_axis)
    return (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2 * grid.spacing)


def second_difference(values: np.ndarray, grid: TorusGrid, real_axis: int) -> np.ndarray:
    axis = _axis(values, grid, real_axis)
    return (np.roll(values, -1, axis) - 2 * values + np.roll(values, 1, axis)) / grid.spacing ** 2


def mixed_difference(values: np.ndarray, grid: TorusGrid, first_axis: int, second_axis: int) -> np.ndarray:
    if first_axis == second_axis:
        return second_difference(values, grid, first_axis)
    return first_difference(first_difference(values, grid, first_axis), grid, second_axis)


def gradient_array(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """
    Complex gradient d_j f = (D_{x_j} - i D_{y_j}) f / 2.
    :return: array of shape values.shape + (n,)
    """
    components = [0.5 * (first_difference(values, grid, 2 * j) - 1j * first_difference(values, grid, 2 * j + 1))
                  for j in range(grid.complex_dim)]
    return np.stack(components, axis=-1)


def hessian_array(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """
    Complex Hessian d_j d_kbar f = ((D_xjxk + D_yjyk) + i (D_xjyk - D_yjxk)) f / 4.
    Mixed stencils are products of central differences, which commute exactly,
    so the output is Hermitian with a real diagonal.
    :return: array of shape values.shape + (n, n)
    """
    n = grid.complex_dim
    hessian = np.zeros(values.shape + (n, n), dtype=complex)
    for j in range(n):
        hessian[..., j, j] = 0.25 * (second_difference(values, grid, 2 * j)
                                     + second_difference(values, grid, 2 * j + 1))
        for k in range(j + 1, n):
            real = (mixed_difference(values, grid, 2 * j, 2 * k)
                    + mixed_difference(values, grid, 2 * j + 1, 2 * k + 1))
            imag = (mixed_difference(values, grid, 2 * j, 2 * k + 1)
                    - mixed_difference(values, grid, 2 * j + 1, 2 * k))
            hessian[..., j, k] = 0.25 * (real + 1j * imag)
            hessian[..., k, j] = 0.25 * (real - 1j * imag)
    return hessian


def laplacian_array(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    return 0.25 * sum(second_difference(values, grid, axis) for axis in range(grid.real_dim))


@memoize
def difference_symbols(grid: TorusGrid) -> dict[str, np.ndarray]:
    """
    Exact Fourier symbols (numpy.fft.fftn convention) of the stencils above.
    Keys: "gradient" (..., n), "antigradient" (..., n) for d_jbar, "hessian" (..., n, n).
    """
    h = grid.spacing
    angles = 2 * np.pi * np.fft.fftfreq(grid.points_per_axis)
    mesh = np.meshgrid(*([angles] * grid.real_dim), indexing="ij")
    first = [1j * np.sin(angle) / h for angle in mesh]
    second = [(2 * np.cos(angle) - 2) / h ** 2 for angle in mesh]

    def mixed(a: int, b: int) -> np.ndarray:
        return second[a] if a == b else first[a] * first[b]

    n = grid.complex_dim
    gradient = np.stack([0.5 * (first[2 * j] - 1j * first[2 * j + 1]) for j in range(n)], axis=-1)
    antigradient = np.stack([0.5 * (first[2 * j] + 1j * first[2 * j + 1]) for j in range(n)], axis=-1)
    hessian = np.zeros(grid.shape + (n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            hessian[..., j, k] = 0.25 * ((mixed(2 * j, 2 * k) + mixed(2 * j + 1, 2 * k + 1))
                                         + 1j * (mixed(2 * j, 2 * k + 1) - mixed(2 * j + 1, 2 * k)))
    return {"gradient": gradient, "antigradient": antigradient, "hessian": hessian}


# field-level operations

def complex_gradient(f: ScalarField) -> np.ndarray:
    return gradient_array(f.values, f.grid)


def complex_hessian(f: ScalarField) -> Form11Field:
    return Form11Field(f.grid, hessian_array(f.values, f.grid))


def laplacian(f: ScalarField) -> ScalarField:
    """Trace of the complex Hessian, (1/4) of the real Laplacian."""
    return ScalarField(f.grid, laplacian_array(f.values, f.grid))


def integrate(f: ScalarField, weight=None) -> float:
    """
    Riemann sum of f * weight * h^{2n}.
    :param weight: ScalarField, array of the grid shape, or None for weight 1
    """
    if weight is None:
        weighted = f.values
    elif isinstance(weight, ScalarField):
        check_same_grid(f.grid, weight.grid)
        weighted = f.values * weight.values
    else:
        weight = np.asarray(weight, dtype=float)
        if weight.shape != f.grid.shape:
            raise DomainError(f"grid mismatch: weight shape {weight.shape} vs grid shape {f.grid.shape}")
        weighted = f.values * weight
    return float(np.sum(weighted) * f.grid.cell_volume)
