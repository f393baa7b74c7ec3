import numpy as np
import pytest

from hspace.curvature_lab import (TwoParamFamily, commutator_oracle, covariant_derivative, curvature_ensemble,
                                  curvature_tensor, metric_compatibility_check, q_field, sectional_curvature,
                                  sectional_curvature_routes, torsion_defect)
from hspace.errors import DegenerateInputError
from hspace.formulas import fourier_background, random_trig_field
from hspace.torus_discretization import ScalarField

ENSEMBLE_COLUMNS = ["draw_id", "k_route_a", "k_route_b", "denominator", "flat_flag"]


def random_family(bg, rng, amplitude=0.05):
    grid = bg.grid
    return TwoParamFamily(random_trig_field(grid, rng, amplitude=amplitude), random_trig_field(grid, rng, 1.0),
                          random_trig_field(grid, rng, 1.0))


def test_q_field_vanishes_on_constants(fourier_bg, rng):
    grid = fourier_bg.grid
    phi, psi = random_trig_field(grid, rng), random_trig_field(grid, rng, 1.0)
    assert np.all(q_field(fourier_bg, phi, psi, ScalarField.constant(grid, 2.0)).values == 0)


def test_covariant_derivative_along_a_resting_path(fourier_bg, rng):
    grid = fourier_bg.grid
    phi, psi, psi_dot = (random_trig_field(grid, rng) for _ in range(3))
    result = covariant_derivative(fourier_bg, phi, ScalarField.constant(grid), psi, psi_dot)
    np.testing.assert_allclose(result.values, psi_dot.values, atol=1e-15)


def test_curvature_tensor_vanishes_for_constant_directions(product_bg, rng):
    grid = product_bg.grid
    family = TwoParamFamily(random_trig_field(grid, rng, 0.05), random_trig_field(grid, rng, 1.0),
                            ScalarField.constant(grid, 1.0))
    assert curvature_tensor(product_bg, family).sup_norm() == 0.0


def test_curvature_tensor_is_antisymmetric(fourier_bg, rng):
    family = random_family(fourier_bg, rng)
    zeta = random_trig_field(fourier_bg.grid, rng, 1.0)
    swapped = TwoParamFamily(family.base, family.eta, family.psi)
    np.testing.assert_allclose(curvature_tensor(fourier_bg, family, zeta).values,
                               -curvature_tensor(fourier_bg, swapped, zeta).values, atol=1e-14)


@pytest.mark.parametrize("bg_name", ["fourier_bg", "product_bg"])
def test_curvature_tensor_matches_commutator(request, rng, bg_name):
    bg = request.getfixturevalue(bg_name)
    family = random_family(bg, rng)
    closed_form = curvature_tensor(bg, family)
    oracle = commutator_oracle(bg, family)
    assert oracle.sup_norm() > 0
    assert (closed_form - oracle).sup_norm() <= 1e-2 * oracle.sup_norm()


def test_connection_is_torsion_free(product_bg, rng):
    assert torsion_defect(product_bg, random_family(product_bg, rng)) <= 1e-12


def test_connection_is_metric_compatible(rng):
    bg = fourier_background(64)
    grid = bg.grid
    phi = random_trig_field(grid, rng, amplitude=0.05)
    velocity = random_trig_field(grid, rng, amplitude=1.0)
    fields = (random_trig_field(grid, rng, 1.0), random_trig_field(grid, rng, 1.0))
    rates = (random_trig_field(grid, rng, 1.0), ScalarField.constant(grid))
    result = metric_compatibility_check(bg, phi, velocity, fields, rates)
    assert result.steps == [1e-3, 5e-4]
    assert abs(result.derivatives[0] - result.derivatives[1]) <= 1e-4 * abs(result.derivatives[1])
    assert result.defects[-1] <= 5e-2 * abs(result.connection_value)
    with pytest.raises(DegenerateInputError):
        result.step_ratio


def test_compatibility_differences_converge_at_second_order(rng):
    bg = fourier_background(32)
    grid = bg.grid
    phi = random_trig_field(grid, rng, amplitude=0.05)
    velocity = random_trig_field(grid, rng, amplitude=0.1)
    fields = (random_trig_field(grid, rng, 1.0), random_trig_field(grid, rng, 1.0))
    rates = (random_trig_field(grid, rng, 1.0), random_trig_field(grid, rng, 1.0))
    result = metric_compatibility_check(bg, phi, velocity, fields, rates, step=1e-2, halvings=2)
    assert result.steps == [1e-2, 5e-3, 2.5e-3]
    assert 3.0 <= result.step_ratio <= 5.0


@pytest.mark.parametrize("bg_name", ["torus_bg", "fourier_bg", "product_bg"])
def test_sectional_curvature_is_non_positive(request, rng, bg_name):
    bg = request.getfixturevalue(bg_name)
    grid = bg.grid
    phi = random_trig_field(grid, rng, amplitude=0.05)
    for _ in range(3):
        result = sectional_curvature_routes(bg, phi, random_trig_field(grid, rng, 1.0),
                                            random_trig_field(grid, rng, 1.0))
        assert result.denominator > 0
        assert result.value <= 1e-10
        assert result.value_route_a == pytest.approx(result.value, rel=1e-6, abs=1e-10)


def test_plane_of_real_gradients_is_flat(torus_bg):
    grid = torus_bg.grid
    x, _ = grid.coordinates()
    value = sectional_curvature(torus_bg, ScalarField.constant(grid), ScalarField(grid, np.sin(x)),
                                ScalarField(grid, np.cos(x)))
    assert abs(value) <= 1e-10


def test_degenerate_plane_is_rejected(torus_bg, rng):
    grid = torus_bg.grid
    psi = random_trig_field(grid, rng, 1.0)
    with pytest.raises(DegenerateInputError):
        sectional_curvature(torus_bg, ScalarField.constant(grid), psi, psi * 2.0)
    with pytest.raises(DegenerateInputError):
        sectional_curvature(torus_bg, ScalarField.constant(grid), psi, ScalarField.constant(grid))


def test_curvature_ensemble_is_reproducible(fourier_bg):
    phi = ScalarField.constant(fourier_bg.grid)
    first = curvature_ensemble(fourier_bg, phi, np.random.default_rng(7), 4)
    second = curvature_ensemble(fourier_bg, phi, np.random.default_rng(7), 4)
    assert first == second
    assert [row["draw_id"] for row in first] == [0, 1, 2, 3]
    assert all(list(row) == ENSEMBLE_COLUMNS for row in first)
    assert all(row["k_route_b"] <= 1e-10 for row in first)
