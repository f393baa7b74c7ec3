import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hspace.errors import DomainError
from hspace.pointwise_calculus import (HermitianMatrix, calibrated_volume, curvature_integrand, curvature_terms,
                                       lagrangian_property_check, mixed_discriminant, omega_inverse_factor,
                                       pencil_eigensystem, pencil_eigenvalues, phase, phase_operator_derivatives,
                                       q_integrand, radius, wedge_oracle)


def random_pencil(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2, b @ b.conj().T + n * np.eye(n)


def random_vector(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def test_pencil_eigenvalues_of_diagonal_form():
    assert_allclose(pencil_eigenvalues(np.diag([1.0, 2.0]), np.eye(2)), [2.0, 1.0])
    assert_allclose(pencil_eigenvalues(np.zeros((3, 3)), np.diag([1.0, 2.0, 3.0])), [0.0, 0.0, 0.0])


def test_pencil_eigenvalues_match_characteristic_polynomial(rng):
    alpha, _ = random_pencil(rng, 3)
    roots = np.sort(np.real(np.roots(np.poly(alpha))))[::-1]
    assert_allclose(pencil_eigenvalues(alpha, np.eye(3)), roots, atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_eigenframe_diagonalizes_both_forms(rng, n):
    alpha, omega = random_pencil(rng, n)
    lambdas, frame = pencil_eigensystem(alpha, omega)
    assert np.all(np.diff(lambdas) <= 0)
    assert_allclose(frame.conj().T @ omega @ frame, np.eye(n), atol=1e-10)
    assert_allclose(frame.conj().T @ alpha @ frame, np.diag(lambdas), atol=1e-10)


def test_pencil_eigenvalues_are_batched(rng):
    forms = np.stack([random_pencil(rng, 2)[0] for _ in range(4)])
    batched = pencil_eigenvalues(forms, np.eye(2))
    assert batched.shape == (4, 2)
    assert_allclose(batched[2], pencil_eigenvalues(forms[2], np.eye(2)))


def test_omega_must_be_positive_definite():
    with pytest.raises(DomainError):
        omega_inverse_factor(np.diag([1.0, -1.0]))


def test_hermitian_matrix_validation():
    with pytest.raises(DomainError):
        HermitianMatrix(np.array([[1.0, 1.0j], [1.0j, 1.0]]))
    with pytest.raises(DomainError):
        HermitianMatrix(np.ones((2, 3)))
    assert HermitianMatrix.identity(3).dim == 3
    assert_allclose(pencil_eigenvalues(HermitianMatrix.diagonal([3.0, 1.0]), HermitianMatrix.identity(2)), [3, 1])


def test_phase_values():
    assert phase([1.0]) == pytest.approx(math.pi / 4)
    assert phase([1.0, 1.0]) == pytest.approx(math.pi / 2)
    assert phase([1.0, 2.0]) == pytest.approx(1.8925468811915387, abs=1e-15)
    assert radius([1.0]) == pytest.approx(math.sqrt(2))


def test_phase_is_additive_over_blocks(rng):
    first, second = rng.normal(size=2), rng.normal(size=3)
    assert phase(np.concatenate([first, second])) == pytest.approx(phase(first) + phase(second), abs=1e-14)


def test_calibrated_volume_values():
    calibration = calibrated_volume([1.0, 1.0], math.pi / 2)
    assert calibration.real_part == pytest.approx(2.0)
    assert calibration.imag_part == pytest.approx(0.0, abs=1e-15)
    assert calibration.tangent == pytest.approx(0.0, abs=1e-15)

    identity = calibrated_volume([0.0, 0.0, 0.0], 0.0)
    assert (identity.real_part, identity.imag_part) == (1.0, 0.0)

    # (1 + i)(1 + 2i)(1 + 3i) = -10
    product = calibrated_volume([1.0, 2.0, 3.0], 0.0)
    assert product.real_part == pytest.approx(-10.0, abs=1e-12)
    assert product.imag_part == pytest.approx(0.0, abs=1e-12)
    assert math.isnan(product.tangent)


def test_q_integrand_values(rng):
    lambdas = np.array([2.0, 0.5])
    calibrated = float(phase(lambdas))
    e1 = np.array([1.0, 0.0])
    assert q_integrand(lambdas, calibrated, e1, e1) == pytest.approx(-2.0 / 5.0)
    assert q_integrand(lambdas, calibrated, random_vector(rng, 2), np.zeros(2)) == 0.0

    u, v = random_vector(rng, 2), random_vector(rng, 2)
    theta_hat = calibrated + 0.3
    assert q_integrand(lambdas, theta_hat, u, v) == q_integrand(lambdas, theta_hat, v, u)


def test_q_integrand_requires_calibration():
    with pytest.raises(DomainError):
        q_integrand([0.0], math.pi, [1.0], [1.0])


def test_curvature_integrand_degenerate_planes(rng):
    lambdas = rng.normal(size=3)
    theta_hat = float(phase(lambdas)) + 0.2
    u = random_vector(rng, 3)
    assert curvature_integrand(lambdas, theta_hat, u, np.zeros(3)) == pytest.approx(0.0, abs=1e-15)
    scale = abs(curvature_terms(lambdas, theta_hat, u, u)[0])
    assert curvature_integrand(lambdas, theta_hat, u, u) == pytest.approx(0.0, abs=1e-12 * scale)


def test_curvature_integrand_is_non_positive(rng):
    for _ in range(200):
        n = int(rng.integers(1, 4))
        lambdas = rng.normal(scale=2.0, size=n)
        theta_hat = float(phase(lambdas)) + rng.uniform(-1.2, 1.2)
        value = curvature_integrand(lambdas, theta_hat, random_vector(rng, n), random_vector(rng, n))
        assert value <= 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_eigenframe_shortcuts_match_wedge_products(rng, n):
    for _ in range(50):
        alpha, omega = random_pencil(rng, n)
        lambdas, frame = pencil_eigensystem(alpha, omega)
        theta_hat = float(phase(lambdas)) + rng.uniform(-math.pi / 4, math.pi / 4)
        total = omega + 1j * alpha
        u, v = random_vector(rng, n), random_vector(rng, n)
        fu, fv = frame.conj().T @ u, frame.conj().T @ v

        volume = wedge_oracle([total] * n, theta_hat=theta_hat, omega=omega)
        calibration = calibrated_volume(lambdas, theta_hat)
        scale = float(radius(lambdas))
        assert_allclose(calibration.real_part, volume.real, rtol=1e-9, atol=1e-12 * scale)
        assert_allclose(calibration.imag_part, volume.imag, rtol=1e-9, atol=1e-12 * scale)

        def q_wedge(x, y):
            mixed = (wedge_oracle([total] * (n - 1), (x, y), theta_hat, omega)
                     + wedge_oracle([total] * (n - 1), (y, x), theta_hat, omega))
            return n / 2 * mixed.imag / volume.real

        q_scale = np.linalg.norm(fu) * np.linalg.norm(fv)
        assert_allclose(q_integrand(lambdas, theta_hat, fu, fv), q_wedge(u, v), rtol=1e-9, atol=1e-12 * q_scale)

        wedge = (q_wedge(u, v) ** 2 - q_wedge(u, u) * q_wedge(v, v)) * volume.real
        if n >= 2:
            wedge -= n * (n - 1) * wedge_oracle([total] * (n - 2), (u, u, v, v), theta_hat, omega).real
        pointwise = curvature_integrand(lambdas, theta_hat, fu, fv) * volume.real
        k_scale = abs(curvature_terms(lambdas, theta_hat, fu, fv)[0]) * volume.real
        assert_allclose(pointwise, wedge, rtol=1e-9, atol=1e-12 * k_scale)


def test_wedge_oracle_values():
    assert wedge_oracle([np.eye(2)] * 2) == pytest.approx(1.0)
    lambdas = np.array([0.5, -1.5, 2.0])
    expected = np.prod(1 + 1j * lambdas)
    assert wedge_oracle([np.eye(3) + 1j * np.diag(lambdas)] * 3) == pytest.approx(expected)
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert wedge_oracle([], (e1, e1, e2, e2)) == pytest.approx(0.5)


def test_wedge_oracle_rejects_bad_degrees():
    with pytest.raises(DomainError):
        wedge_oracle([np.eye(2)])
    with pytest.raises(DomainError):
        wedge_oracle([np.eye(2)], (np.ones(2),))
    with pytest.raises(DomainError):
        wedge_oracle([np.eye(4)] * 4)


def test_mixed_discriminant_is_symmetric_and_restricts_to_det(rng):
    forms = [random_pencil(rng, 3)[0] for _ in range(3)]
    assert mixed_discriminant([forms[0]] * 3) == pytest.approx(np.linalg.det(forms[0]))
    assert mixed_discriminant(forms) == pytest.approx(mixed_discriminant([forms[2], forms[0], forms[1]]))


def test_phase_operator_second_derivative_is_derivative_of_first(rng):
    mus = rng.normal(size=3)
    first, second = phase_operator_derivatives(mus)
    assert_allclose(first, 1 / (1 + mus ** 2))
    h = 1e-6
    numeric = (phase_operator_derivatives(mus + h)[0] - phase_operator_derivatives(mus - h)[0]) / (2 * h)
    assert_allclose(np.diag(second), numeric, rtol=1e-6)
    assert_allclose(second, second.T)


def test_lagrangian_properties():
    assert lagrangian_property_check([10.0], 0.1).holds

    steep = math.tan(math.radians(80))
    properties = lagrangian_property_check([steep, steep], math.radians(70))
    assert properties.hypothesis_met and properties.eigenvalue_bounds and properties.holds

    mixed = lagrangian_property_check([2.0, -0.5], 0.3)
    assert mixed.hypothesis_met and mixed.ordered_positive and mixed.negative_tail and mixed.holds

    below = lagrangian_property_check([0.1, -0.5], 0.3)
    assert not below.hypothesis_met
    assert below.holds


def test_negative_tail_angle_is_a_parameter():
    assert lagrangian_property_check([2.0, -0.5], 0.3, eta_1=0.1).negative_tail
    steep_tail = lagrangian_property_check([2.0, -0.5], 0.3, eta_1=1.2)
    assert steep_tail.hypothesis_met and not steep_tail.negative_tail and not steep_tail.holds


def test_lagrangian_properties_are_batched():
    properties = lagrangian_property_check(np.array([[2.0, -0.5], [0.1, -0.5]]), 0.3)
    assert list(properties.hypothesis_met) == [True, False]
