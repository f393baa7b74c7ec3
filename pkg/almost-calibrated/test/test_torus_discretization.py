import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hspace.errors import DomainError
from hspace.formulas import random_trig_field
from hspace.torus_discretization import (Form11Field, ScalarField, TorusGrid, complex_gradient, complex_hessian,
                                         difference_symbols, hessian_array, integrate, laplacian)


def gradient_error(points):
    grid = TorusGrid(1, points)
    x, _ = grid.coordinates()
    gradient = complex_gradient(ScalarField(grid, np.sin(x)))
    return float(np.max(np.abs(gradient[..., 0] - 0.5 * np.cos(x))))


@pytest.mark.parametrize("complex_dim, points", [(3, 16), (1, 9), (1, 4), (2, 0)])
def test_grid_validation(complex_dim, points):
    with pytest.raises(DomainError):
        TorusGrid(complex_dim, points)


def test_grid_geometry():
    grid = TorusGrid(2, 8)
    assert grid.shape == (8, 8, 8, 8)
    assert grid.total_points == 8 ** 4
    assert grid.spacing == pytest.approx(2 * math.pi / 8)
    assert grid.volume == pytest.approx((2 * math.pi) ** 4)


def test_scalar_field_validation():
    grid = TorusGrid(1, 8)
    with pytest.raises(DomainError):
        ScalarField(grid, np.zeros((8, 9)))
    values = np.zeros(grid.shape)
    values[0, 0] = np.nan
    with pytest.raises(DomainError):
        ScalarField(grid, values)
    field = ScalarField.constant(grid, 2.0)
    with pytest.raises(ValueError):
        field.values[0, 0] = 1.0


def test_scalar_field_arithmetic():
    grid = TorusGrid(1, 8)
    x, y = grid.coordinates()
    first, second = ScalarField(grid, np.sin(x)), ScalarField(grid, np.cos(y))
    assert_allclose((first * second).values, np.sin(x) * np.cos(y))
    assert_allclose((2 * first - 1.0).values, 2 * np.sin(x) - 1)
    assert_allclose((-first + second).values, np.cos(y) - np.sin(x))
    with pytest.raises(DomainError):
        first + ScalarField.constant(TorusGrid(1, 16))


def test_gradient_of_constant_is_zero():
    grid = TorusGrid(1, 16)
    assert np.all(complex_gradient(ScalarField.constant(grid, 3.0)) == 0)
    assert np.all(complex_hessian(ScalarField.constant(grid, 3.0)).matrices == 0)


def test_gradient_of_trigonometric_fields():
    grid = TorusGrid(1, 64)
    x, y = grid.coordinates()
    assert_allclose(complex_gradient(ScalarField(grid, np.sin(x)))[..., 0], 0.5 * np.cos(x), atol=2e-3)
    assert_allclose(complex_gradient(ScalarField(grid, np.cos(y)))[..., 0], 0.5j * np.sin(y), atol=2e-3)


def test_gradient_converges_at_second_order():
    ratio = gradient_error(32) / gradient_error(64)
    assert ratio == pytest.approx(4.0, rel=0.1)


def test_hessian_of_trigonometric_fields():
    grid = TorusGrid(1, 64)
    x, y = grid.coordinates()
    hessian = complex_hessian(ScalarField(grid, -np.cos(x) - np.cos(y)))
    assert_allclose(np.real(hessian.matrices[..., 0, 0]), 0.25 * (np.cos(x) + np.cos(y)), atol=2e-3)

    product_grid = TorusGrid(2, 16)
    x1, _, x2, _ = product_grid.coordinates()
    hessian = complex_hessian(ScalarField(product_grid, np.cos(x1) * np.cos(x2)))
    assert_allclose(hessian.matrices[..., 0, 1], 0.25 * np.sin(x1) * np.sin(x2), atol=2e-2)
    assert_allclose(hessian.matrices[..., 1, 0], np.conj(hessian.matrices[..., 0, 1]))


def test_laplacian_is_trace_of_hessian(rng):
    grid = TorusGrid(2, 8)
    field = ScalarField(grid, rng.normal(size=grid.shape))
    trace = np.real(np.trace(complex_hessian(field).matrices, axis1=-2, axis2=-1))
    assert_allclose(laplacian(field).values, trace, atol=1e-12)


@pytest.mark.parametrize("complex_dim, points", [(1, 16), (2, 8)])
def test_difference_symbols_match_stencils(rng, complex_dim, points):
    grid = TorusGrid(complex_dim, points)
    values = rng.normal(size=grid.shape)
    symbols = difference_symbols(grid)
    spectrum = np.fft.fftn(values)
    through_symbol = np.fft.ifftn(symbols["hessian"] * spectrum[..., None, None], axes=tuple(range(grid.real_dim)))
    assert_allclose(through_symbol, hessian_array(values, grid), atol=1e-10)


def test_stencils_act_on_stacks_of_fields(rng):
    grid = TorusGrid(1, 8)
    stack = rng.normal(size=(3,) + grid.shape)
    stacked = hessian_array(stack, grid)
    assert_allclose(stacked[1], hessian_array(stack[1], grid))


def test_form_field_must_be_hermitian():
    grid = TorusGrid(1, 8)
    with pytest.raises(DomainError):
        Form11Field(grid, np.full(grid.shape + (1, 1), 1j))
    doubled = Form11Field.constant(grid, np.eye(1)) + Form11Field.constant(grid, np.eye(1))
    assert np.all(doubled.matrices == 2)


def test_integrate_values():
    grid = TorusGrid(1, 16)
    x, _ = grid.coordinates()
    assert integrate(ScalarField.constant(grid, 1.0)) == pytest.approx((2 * math.pi) ** 2, rel=1e-14)
    assert integrate(ScalarField(grid, np.sin(x))) == pytest.approx(0.0, abs=1e-12)
    assert integrate(ScalarField(grid, np.sin(x) ** 2)) == pytest.approx((2 * math.pi) ** 2 / 2, abs=1e-12)
    assert integrate(ScalarField.constant(grid, 1.0), 2 * np.ones(grid.shape)) == pytest.approx(2 * (2 * math.pi) ** 2)


def test_integrate_rejects_foreign_weights():
    grid = TorusGrid(1, 16)
    with pytest.raises(DomainError):
        integrate(ScalarField.constant(grid, 1.0), np.ones((8, 8)))
    with pytest.raises(DomainError):
        integrate(ScalarField.constant(grid, 1.0), ScalarField.constant(TorusGrid(1, 8), 1.0))


def hessian_errors(points):
    grid = TorusGrid(1, points)
    x, y = grid.coordinates()
    diagonal = complex_hessian(ScalarField(grid, -np.cos(x) - np.cos(y))).matrices[..., 0, 0]
    product_grid = TorusGrid(2, points // 2)
    x1, _, x2, _ = product_grid.coordinates()
    mixed = complex_hessian(ScalarField(product_grid, np.cos(x1) * np.cos(x2))).matrices[..., 0, 1]
    return (float(np.max(np.abs(diagonal - 0.25 * (np.cos(x) + np.cos(y))))),
            float(np.max(np.abs(mixed - 0.25 * np.sin(x1) * np.sin(x2)))))


def test_hessian_converges_at_second_order():
    coarse, fine = hessian_errors(32), hessian_errors(64)
    assert coarse[0] / fine[0] == pytest.approx(4.0, rel=0.1)
    assert coarse[1] / fine[1] == pytest.approx(4.0, rel=0.1)


@pytest.mark.parametrize("complex_dim, points", [(1, 16), (2, 8)])
def test_laplacian_integrates_by_parts(rng, complex_dim, points):
    grid = TorusGrid(complex_dim, points)
    f = random_trig_field(grid, rng, amplitude=1.0)
    g = random_trig_field(grid, rng, amplitude=1.0)
    assert abs(integrate(f * laplacian(g)) - integrate(g * laplacian(f))) <= 1e-10
    assert integrate(f * laplacian(f)) <= 0
