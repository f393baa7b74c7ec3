"""
Pointwise algebra of the Hermitian pencil (omega, alpha).

Every function accepts either a single point (vectors of shape (n,), matrices of
shape (n, n)) or a batch of points stacked along leading axes, so grid fields
are processed in one call. Matrices follow the convention A[i, j] = alpha_{i jbar}.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, NumericError

LOGGER = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """
    A pointwise (1,1)-form. Entries are symmetrized after validation.
    """
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise DomainError(f"expected a square matrix, got shape {entries.shape}")
        scale = max(1.0, float(np.max(np.abs(entries))))
        if np.max(np.abs(entries - entries.conj().T)) > HERMITIAN_TOL * scale:
            raise DomainError("matrix is not Hermitian")
        object.__setattr__(self, "entries", 0.5 * (entries + entries.conj().T))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> HermitianMatrix:
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def identity(cls, n: int) -> HermitianMatrix:
        return cls(np.eye(n))


@dataclass(frozen=True, eq=False)
class PhasePointData:
    lambdas: np.ndarray  # descending
    theta: float | np.ndarray
    radius: float | np.ndarray


@dataclass(frozen=True, eq=False)
class CalibrationData:
    """
    real_part = r cos(theta - theta_hat), imag_part = r sin(theta - theta_hat).
    tangent is nan wherever real_part <= 0.
    """
    theta_hat: float
    real_part: float | np.ndarray
    imag_part: float | np.ndarray
    tangent: float | np.ndarray


@dataclass(frozen=True, eq=False)
class LagrangianProperties:
    hypothesis_met: bool | np.ndarray
    ordered_positive: bool | np.ndarray  # mu_{n-1} > 0 and mu_{n-1} + mu_n >= 0
    eigenvalue_bounds: bool | np.ndarray  # mu_{n-1} >= tan(eta/2), mu_n >= -cot(eta)
    negative_tail: bool | np.ndarray  # mu_n < 0 forces sum(1/mu) < -tan(eta)

    @property
    def holds(self) -> bool:
        """True when every property holds wherever the hypothesis is met."""
        verdict = self.ordered_positive & self.eigenvalue_bounds & self.negative_tail
        return bool(np.all(verdict | ~np.asarray(self.hypothesis_met)))


def as_matrix(value) -> np.ndarray:
    if isinstance(value, HermitianMatrix):
        return value.entries
    return np.asarray(value, dtype=complex)


def _unwrap(value):
    value = np.asarray(value)
    return value[()] if value.ndim == 0 else value


def omega_inverse_factor(omega) -> np.ndarray:
    """
    Inverse Cholesky factor L^{-1} of omega = L L^H.
    :param omega: constant positive definite Hermitian matrix
    :return: lower triangular matrix with L^{-1} omega L^{-H} = I
    """
    omega = as_matrix(omega)
    smallest = float(np.linalg.eigvalsh(omega)[0])
    if smallest <= 0.0:
        raise DomainError(f"omega is not positive definite: smallest eigenvalue {smallest:.6e}")
    return np.linalg.inv(np.linalg.cholesky(omega))


def _normalized(alpha, omega) -> np.ndarray:
    l_inv = omega_inverse_factor(omega)
    normalized = l_inv @ as_matrix(alpha) @ l_inv.conj().T
    normalized = 0.5 * (normalized + np.swapaxes(normalized.conj(), -1, -2))
    if not np.all(np.isfinite(normalized)):
        bad = np.argwhere(~np.isfinite(normalized))[0]
        raise NumericError("non-finite entries in the pencil", location=tuple(int(i) for i in bad[:-2]))
    return normalized


def pencil_eigenvalues(alpha, omega) -> np.ndarray:
    """
    Eigenvalues of omega^{-1} alpha, descending along the last axis.
    """
    try:
        values = np.linalg.eigvalsh(_normalized(alpha, omega))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
    return values[..., ::-1]


def pencil_eigensystem(alpha, omega) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigenvalues (descending) and eigenframe W of the pencil.
    W^H omega W = I and W^H alpha W = diag(lambdas). Gradients move into the
    frame as W^H g, (1,1)-forms as W^H A W.
    """
    l_inv = omega_inverse_factor(omega)
    try:
        values, vectors = np.linalg.eigh(_normalized(alpha, omega))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigen-decomposition failed: {exc}") from exc
    return values[..., ::-1], l_inv.conj().T @ vectors[..., ::-1]


def phase(lambdas) -> float | np.ndarray:
    return _unwrap(np.sum(np.arctan(np.asarray(lambdas, dtype=float)), axis=-1))


def radius(lambdas) -> float | np.ndarray:
    return _unwrap(np.prod(np.hypot(1.0, np.asarray(lambdas, dtype=float)), axis=-1))


def phase_point_data(lambdas) -> PhasePointData:
    lambdas = np.sort(np.asarray(lambdas, dtype=float), axis=-1)[..., ::-1]
    return PhasePointData(lambdas=lambdas, theta=phase(lambdas), radius=radius(lambdas))


def calibrated_volume(lambdas, theta_hat: float) -> CalibrationData:
    delta = phase(lambdas) - theta_hat
    r = radius(lambdas)
    real_part = r * np.cos(delta)
    with np.errstate(invalid="ignore"):
        tangent = np.where(real_part > 0.0, np.tan(delta), np.nan)
    return CalibrationData(theta_hat=theta_hat, real_part=_unwrap(real_part),
                           imag_part=_unwrap(r * np.sin(delta)), tangent=_unwrap(tangent))


def _calibrated_tangent(lambdas, theta_hat: float) -> np.ndarray:
    calibration = calibrated_volume(lambdas, theta_hat)
    real_part = np.asarray(calibration.real_part)
    if np.any(real_part <= 0.0):
        worst = np.unravel_index(int(np.argmin(real_part)), real_part.shape) if real_part.ndim else ()
        raise DomainError(f"calibration violated: real part {float(np.min(real_part)):.3e} <= 0 at {worst}")
    return np.asarray(calibration.tangent)


def q_weights(lambdas, theta_hat: float) -> np.ndarray:
    """(tan(theta - theta_hat) - lambda_i) / (1 + lambda_i^2) per eigenvalue."""
    lambdas = np.asarray(lambdas, dtype=float)
    tangent = _calibrated_tangent(lambdas, theta_hat)
    return (tangent[..., None] - lambdas) / (1.0 + lambdas ** 2)


def q_integrand(lambdas, theta_hat: float, grad_psi, grad_eta) -> float | np.ndarray:
    """
    Connection form Q(grad psi, grad eta) with gradients given in the eigenframe.
    :param lambdas: pencil eigenvalues, shape (..., n)
    :param theta_hat: lifted phase
    :param grad_psi: complex gradient of psi in the eigenframe, shape (..., n)
    :param grad_eta: complex gradient of eta in the eigenframe, shape (..., n)
    :return: real value (or field of values)
    """
    weights = q_weights(lambdas, theta_hat)
    pairing = np.real(np.asarray(grad_psi) * np.conj(grad_eta))
    return _unwrap(np.sum(weights * pairing, axis=-1))


def curvature_terms(lambdas, theta_hat: float, grad_psi, grad_eta) -> tuple:
    """
    The three lines of the diagonalized curvature integrand.
    The third line is returned in its double-sum form.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    tangent = _calibrated_tangent(lambdas, theta_hat)[..., None]
    damping = 1.0 / (1.0 + lambdas ** 2)
    grad_psi = np.asarray(grad_psi, dtype=complex)
    grad_eta = np.asarray(grad_eta, dtype=complex)
    products = grad_psi * np.conj(grad_eta)
    scale = 1.0 + tangent[..., 0] ** 2

    norms = np.sum(damping * np.abs(grad_psi) ** 2, axis=-1) * np.sum(damping * np.abs(grad_eta) ** 2, axis=-1)
    first = -scale * norms
    second = scale * np.abs(np.sum(damping * products, axis=-1)) ** 2
    imaginary = (tangent - lambdas) * damping * np.imag(products)
    third = -np.einsum("...i,...j->...", imaginary, imaginary)
    return _unwrap(first), _unwrap(second), _unwrap(third)


def curvature_integrand(lambdas, theta_hat: float, grad_psi, grad_eta) -> float | np.ndarray:
    """
    Pointwise integrand of <R(psi, eta) eta, psi> relative to the calibrated
    real part. Non-positive by Cauchy-Schwarz.
    """
    first, second, third = curvature_terms(lambdas, theta_hat, grad_psi, grad_eta)
    return _unwrap(np.asarray(first) + second + third)


def phase_operator_derivatives(mus) -> tuple[np.ndarray, np.ndarray]:
    """
    First and second derivatives of sum(arctan) in the eigenframe.
    :return: (F^{i ibar} = 1/(1+mu_i^2), F^{i jbar, j ibar} = -(mu_i+mu_j)/((1+mu_i^2)(1+mu_j^2)))
    """
    mus = np.asarray(mus, dtype=float)
    first = 1.0 / (1.0 + mus ** 2)
    second = -(mus[..., :, None] + mus[..., None, :]) * first[..., :, None] * first[..., None, :]
    return first, second


def permutation_sign(permutation: Sequence[int]) -> int:
    inversions = sum(1 for i, j in itertools.combinations(range(len(permutation)), 2)
                     if permutation[i] > permutation[j])
    return -1 if inversions % 2 else 1


def mixed_discriminant(matrices: Sequence) -> complex | np.ndarray:
    """
    Normalized mixed discriminant D(A_1, ..., A_n) by explicit expansion:
    (1/n!) sum over sigma, tau of sgn(sigma) sgn(tau) prod_k A_k[sigma(k), tau(k)].
    D(A, ..., A) = det A. Batched over leading axes.
    """
    matrices = [as_matrix(matrix) for matrix in matrices]
    n = len(matrices)
    if n == 0:
        raise DomainError("mixed discriminant of an empty list")
    for matrix in matrices:
        if matrix.shape[-2:] != (n, n):
            raise DomainError(f"degree mismatch: {n} forms of shape {matrix.shape[-2:]}")
    permutations = [(p, permutation_sign(p)) for p in itertools.permutations(range(n))]
    total = 0.0
    for sigma, sign_sigma in permutations:
        for tau, sign_tau in permutations:
            term = sign_sigma * sign_tau
            for k, matrix in enumerate(matrices):
                term = term * matrix[..., sigma[k], tau[k]]
            total = total + term
    return _unwrap(np.asarray(total, dtype=complex) / math.factorial(n))


def one_form_product(u, v) -> np.ndarray:
    """Matrix of i u ^ conj(v): entries u_j conj(v_k)."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    return u[..., :, None] * np.conj(v)[..., None, :]


def complexified(omega, alpha) -> np.ndarray:
    """Omega = omega + i alpha as a complex matrix."""
    return as_matrix(omega) + 1j * as_matrix(alpha)


def wedge_oracle(forms: Sequence, one_forms: Sequence = (), theta_hat: float = 0.0, omega=None) -> complex:
    """
    Brute-force evaluation of e^{-i theta_hat} A_1 ^ ... ^ A_n / omega^n.
    :param forms: pointwise (1,1)-forms as matrices; complex combinations such as
        omega + i alpha are allowed
    :param one_forms: complex vectors taken in consecutive pairs (u, v), each pair
        standing for the (1,1)-form i u ^ conj(v)
    :param theta_hat: phase factor applied to the result
    :param omega: reference Kaehler form, identity by default
    :return: complex number
    """
    if len(one_forms) % 2:
        raise DomainError("one-forms must come in (u, v) pairs")
    matrices = [as_matrix(form) for form in forms]
    matrices += [one_form_product(one_forms[k], one_forms[k + 1]) for k in range(0, len(one_forms), 2)]
    if not matrices:
        raise DomainError("degree mismatch: empty wedge product")
    n = matrices[0].shape[-1]
    if n > 3:
        raise DomainError(f"wedge oracle supports n <= 3, got n = {n}")
    if len(matrices) != n or any(matrix.shape != (n, n) for matrix in matrices):
        raise DomainError(f"degree mismatch: {len(matrices)} two-forms in complex dimension {n}")
    omega = np.eye(n) if omega is None else as_matrix(omega)
    volume = float(np.real(np.linalg.det(omega)))
    return complex(np.exp(-1j * theta_hat) * mixed_discriminant(matrices) / volume)


def lagrangian_property_check(mus, eta: float, eta_1: float | None = None) -> LagrangianProperties:
    """
    Eigenvalue properties of a phase-constrained (n+1)-tuple mu_0 >= ... >= mu_n
    under the hypothesis sum(arctan mu) >= (n-1) pi/2 + eta.
    :param eta_1: angle of the negative-tail bound mu_{n-1} >= tan(eta_1), sum 1/mu < -tan(eta_1);
        the bound only promises some eta_1 > 0 depending on eta, None tests eta_1 = eta
    """
    eta_1 = eta if eta_1 is None else eta_1
    mus = np.sort(np.asarray(mus, dtype=float), axis=-1)[..., ::-1]
    n = mus.shape[-1] - 1
    hypothesis = np.asarray(phase(mus) >= (n - 1) * math.pi / 2 + eta)
    if n == 0:
        vacuous = np.ones_like(hypothesis, dtype=bool)
        return LagrangianProperties(_unwrap(hypothesis), _unwrap(vacuous), _unwrap(vacuous), _unwrap(vacuous))

    top = mus[..., n - 1]
    last = mus[..., n]
    ordered = (top > 0.0) & (top + last >= 0.0)
    bounds = (top >= math.tan(eta / 2)) & (last >= -1.0 / math.tan(eta))
    with np.errstate(divide="ignore"):
        reciprocal = np.sum(1.0 / mus, axis=-1)
    tail = (last >= 0.0) | ((top >= math.tan(eta_1)) & (reciprocal < -math.tan(eta_1)))
    if not np.all(hypothesis):
        LOGGER.debug("hypothesis not met at %d points", int(np.size(hypothesis) - np.count_nonzero(hypothesis)))
    return LagrangianProperties(_unwrap(hypothesis), _unwrap(ordered), _unwrap(bounds), _unwrap(tail))
