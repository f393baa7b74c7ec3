"""
Phase formulation of the epsilon-geodesic equation on X x [0, 1].

At every interior space-time point the (n+1) x (n+1) Hermitian matrix
    [ L^{-1} alpha_phi L^{-H}          L^{-1} d(phi_dot) e^s / (2 eps) ]
    [ (conjugate transpose)            e^{2s} phi_ddot / (4 eps^2)      ]
is formed in the omega-orthonormal frame (omega = L L^H) and the residual is
the sum of arctangents of its eigenvalues minus theta_hat.
"""
from __future__ import annotations

import logging

import numpy as np

from .calibrated_space import PathField
from .epsilon_problem import EpsilonProblem
from .errors import DomainError, NumericError
from .pointwise_calculus import complexified, mixed_discriminant, one_form_product
from .preconditioner import SliceFrozenPreconditioner
from .torus_discretization import check_same_grid, difference_symbols, gradient_array, hessian_array

LOGGER = logging.getLogger(__name__)


def _interior_times(problem: EpsilonProblem) -> np.ndarray:
    return np.arange(1, problem.time_steps - 1) / (problem.time_steps - 1)


def _slice_shape(problem: EpsilonProblem, values: np.ndarray) -> tuple:
    return (values.shape[0],) + (1,) * problem.bg.grid.real_dim


def time_scales(problem: EpsilonProblem) -> tuple[np.ndarray, np.ndarray]:
    """(e^s / (2 eps), e^{2s} / (4 eps^2)) at the interior times."""
    s = _interior_times(problem)
    growth = np.exp(s) / (2 * problem.epsilon)
    return growth, growth ** 2


def interior_derivatives(values: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    velocity = (values[2:] - values[:-2]) / (2 * tau)
    acceleration = (values[2:] - 2 * values[1:-1] + values[:-2]) / tau ** 2
    return velocity, acceleration


def _check_values(problem: EpsilonProblem, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    expected = (problem.time_steps,) + problem.bg.grid.shape
    if values.shape != expected:
        raise DomainError(f"space-time field shape {values.shape} differs from {expected}")
    return values


def _assemble(problem: EpsilonProblem, values: np.ndarray, with_alpha: bool) -> np.ndarray:
    bg = problem.bg
    grid = bg.grid
    n = grid.complex_dim
    tau = 1.0 / (problem.time_steps - 1)
    l_inv = bg.omega_inverse
    velocity, acceleration = interior_derivatives(values, tau)
    growth, corner_scale = time_scales(problem)
    shape = _slice_shape(problem, velocity)

    spatial = hessian_array(values[1:-1], grid)
    if with_alpha:
        spatial = spatial + bg.alpha.matrices
    matrices = np.empty(velocity.shape + (n + 1, n + 1), dtype=complex)
    matrices[..., :n, :n] = l_inv @ spatial @ l_inv.conj().T
    mixed = np.einsum("ij,...j->...i", l_inv, gradient_array(velocity, grid)) * growth.reshape(shape)[..., None]
    matrices[..., :n, n] = mixed
    matrices[..., n, :n] = mixed.conj()
    matrices[..., n, n] = acceleration * corner_scale.reshape(shape)
    return matrices


def augmented_matrices(problem: EpsilonProblem, path: PathField) -> np.ndarray:
    """
    Augmented matrices at the interior slices.
    :return: array of shape (m - 2,) + grid.shape + (n + 1, n + 1)
    """
    check_same_grid(problem.bg.grid, path.grid)
    return _assemble(problem, _check_values(problem, path.values), with_alpha=True)


def _eigen_failure(matrices: np.ndarray, exc: Exception) -> NumericError:
    finite = np.all(np.isfinite(matrices), axis=(-1, -2))
    location = tuple(int(i) for i in np.argwhere(~finite)[0]) if not np.all(finite) else None
    return NumericError(f"eigen-decomposition of the augmented matrix failed: {exc}", location=location)


def residual_array(problem: EpsilonProblem, values: np.ndarray) -> np.ndarray:
    values = _check_values(problem, values)
    matrices = _assemble(problem, values, with_alpha=True)
    try:
        mus = np.linalg.eigvalsh(matrices)
    except np.linalg.LinAlgError as exc:
        raise _eigen_failure(matrices, exc) from exc
    if not np.all(np.isfinite(mus)):
        raise _eigen_failure(matrices, ValueError("non-finite eigenvalues"))
    result = np.zeros_like(values)
    result[1:-1] = np.sum(np.arctan(mus), axis=-1) - problem.bg.require_theta_hat()
    return result


def residual(problem: EpsilonProblem, path: PathField) -> PathField:
    """Phase residual; boundary slices are zero."""
    check_same_grid(problem.bg.grid, path.grid)
    return path.with_values(residual_array(problem, path.values))


class Linearization:
    """
    Jacobian of the phase residual at a fixed space-time state.
    J d = Re tr(W dM(d)) with W = V diag(1/(1+mu^2)) V^H from the eigen-decomposition
    of the augmented matrices and dM(d) the augmented increment of d (no alpha).
    """

    def __init__(self, problem: EpsilonProblem, values: np.ndarray):
        self.problem = problem
        values = _check_values(problem, values)
        matrices = _assemble(problem, values, with_alpha=True)
        try:
            mus, vectors = np.linalg.eigh(matrices)
        except np.linalg.LinAlgError as exc:
            raise _eigen_failure(matrices, exc) from exc
        self.mus = mus[..., ::-1]
        weights = 1.0 / (1.0 + mus ** 2)
        self.weight_matrices = (vectors * weights[..., None, :]) @ np.swapaxes(vectors.conj(), -1, -2)
        self.residual = np.zeros_like(values)
        self.residual[1:-1] = np.sum(np.arctan(mus), axis=-1) - problem.bg.require_theta_hat()

    @property
    def interior_shape(self) -> tuple:
        return (self.problem.time_steps - 2,) + self.problem.bg.grid.shape

    def apply_interior(self, direction: np.ndarray) -> np.ndarray:
        """J applied to a direction given on the interior slices only (Dirichlet zero ends)."""
        full = np.zeros((self.problem.time_steps,) + self.problem.bg.grid.shape)
        full[1:-1] = direction.reshape(self.interior_shape)
        increment = _assemble(self.problem, full, with_alpha=False)
        return np.real(np.einsum("...ij,...ji->...", self.weight_matrices, increment))

    def apply(self, direction: np.ndarray) -> np.ndarray:
        result = np.zeros((self.problem.time_steps,) + self.problem.bg.grid.shape)
        result[1:-1] = self.apply_interior(np.asarray(direction)[1:-1])
        return result

    def preconditioner(self) -> SliceFrozenPreconditioner:
        """
        Inverse of the operator with the weights averaged over space on every slice.
        """
        problem = self.problem
        grid = problem.bg.grid
        n = grid.complex_dim
        tau = 1.0 / (problem.time_steps - 1)
        spatial_axes = tuple(range(1, grid.real_dim + 1))
        frozen = np.mean(self.weight_matrices, axis=spatial_axes)
        l_inv = problem.bg.omega_inverse
        symbols = difference_symbols(grid)
        growth, corner_scale = time_scales(problem)

        reduced = l_inv.conj().T @ frozen[:, :n, :n] @ l_inv
        spatial = np.real(np.einsum("zkj,...jk->z...", reduced, symbols["hessian"]))
        time = np.real(frozen[:, n, n]) * corner_scale / tau ** 2
        coupling = np.einsum("ij,zi->zj", l_inv, frozen[:, n, :n])
        mixed = (np.einsum("zj,...j->z...", coupling, symbols["gradient"])
                 + np.einsum("zj,...j->z...", coupling.conj(), symbols["antigradient"]))
        mixed = mixed * (growth / (2 * tau)).reshape((-1,) + (1,) * grid.real_dim)
        return SliceFrozenPreconditioner(spatial, time, mixed)


def linearization_apply(problem: EpsilonProblem, path: PathField, direction: PathField) -> PathField:
    check_same_grid(path.grid, direction.grid)
    return path.with_values(Linearization(problem, path.values).apply(direction.values))


def spacetime_pairing(problem: EpsilonProblem, first: np.ndarray, second: np.ndarray) -> float:
    """
    Quadrature pairing over the interior slices weighted by e^{-2s}; the
    linearization at affine paths over constant backgrounds is self-adjoint for it.
    """
    s = _interior_times(problem)
    weights = np.exp(-2 * s).reshape((-1,) + (1,) * problem.bg.grid.real_dim)
    tau = 1.0 / (problem.time_steps - 1)
    return float(np.sum(weights * first[1:-1] * second[1:-1]) * problem.bg.grid.cell_volume * tau)


def path_form_residual(problem: EpsilonProblem, path: PathField) -> np.ndarray:
    """
    phi_ddot + Q(grad phi_dot, grad phi_dot) + 4 eps^2 e^{-2s} tan(Theta - theta_hat)
    on the interior slices, with every wedge product evaluated by mixed discriminants
    in the original coordinates.
    """
    bg = problem.bg
    grid = bg.grid
    n = grid.complex_dim
    theta_hat = bg.require_theta_hat()
    values = _check_values(problem, path.values)
    velocity, acceleration = interior_derivatives(values, path.tau)
    total = complexified(bg.omega, bg.alpha.matrices + hessian_array(values[1:-1], grid))
    rotation = np.exp(-1j * theta_hat)
    volume = rotation * mixed_discriminant([total] * n)
    if np.any(np.real(volume) <= 0.0):
        raise DomainError("path form residual needs members at every interior slice")
    gradient = gradient_array(velocity, grid)
    mixed = rotation * mixed_discriminant([one_form_product(gradient, gradient)] + [total] * (n - 1))
    kappa = 4 * problem.epsilon ** 2 * np.exp(-2 * _interior_times(problem))
    kappa = kappa.reshape(_slice_shape(problem, velocity))
    return acceleration + (n * np.imag(mixed) + kappa * np.imag(volume)) / np.real(volume)
