"""
Diagnostic bounds of a solved epsilon-geodesic. Nothing here passes or fails;
scaling laws are judged by the callers.
"""
from __future__ import annotations

import logging
import math

import numpy as np

from .augmented_operator import augmented_matrices, interior_derivatives, path_form_residual
from .calibrated_space import (PathField, path_energy_profile, pencil_lambdas, second_time_derivative,
                               time_derivative)
from .epsilon_problem import EpsilonProblem, SolverReport
from .pointwise_calculus import (calibrated_volume, lagrangian_property_check, pencil_eigensystem, phase,
                                 q_integrand)
from .torus_discretization import gradient_array, hessian_array, mixed_difference

LOGGER = logging.getLogger(__name__)


def sup_spatial_second_differences(path: PathField) -> float:
    """Largest |D_a D_b phi| over every slice and every pair of real axes."""
    grid = path.grid
    return max(float(np.max(np.abs(mixed_difference(path.values, grid, a, b))))
               for a in range(grid.real_dim) for b in range(a, grid.real_dim))


def margins_per_slice(problem: EpsilonProblem, path: PathField) -> list[float]:
    lambdas = pencil_lambdas(problem.bg, path.values)
    margins = math.pi / 2 - np.abs(phase(lambdas) - problem.bg.require_theta_hat())
    return [float(value) for value in np.min(margins.reshape(path.time_steps, -1), axis=1)]


def lagrangian_flags(problem: EpsilonProblem, path: PathField) -> dict[str, bool]:
    """
    Eigenvalue properties of the augmented matrices at every interior point, with
    eta half of the gap theta_hat - (n - 1) pi/2.
    """
    n = problem.bg.grid.complex_dim
    gap = problem.bg.require_theta_hat() - (n - 1) * math.pi / 2
    mus = np.linalg.eigvalsh(augmented_matrices(problem, path))
    if gap <= 0:
        return {"hypothesis_met": False, "ordered_positive": False, "eigenvalue_bounds": False,
                "negative_tail": False}
    properties = lagrangian_property_check(mus, gap / 2)
    return {"hypothesis_met": bool(np.all(properties.hypothesis_met)),
            "ordered_positive": bool(np.all(properties.ordered_positive)),
            "eigenvalue_bounds": bool(np.all(properties.eigenvalue_bounds)),
            "negative_tail": bool(np.all(properties.negative_tail))}


def geodesic_defect(problem: EpsilonProblem, path: PathField) -> np.ndarray:
    """phi_ddot + Q(grad phi_dot, grad phi_dot) at the interior slices; O(eps^2) along epsilon-geodesics."""
    bg = problem.bg
    velocity, acceleration = interior_derivatives(path.values, path.tau)
    lambdas, frame = pencil_eigensystem(bg.alpha.matrices + hessian_array(path.values[1:-1], bg.grid), bg.omega)
    gradient = np.einsum("...ji,...j->...i", frame.conj(), gradient_array(velocity, bg.grid))
    return acceleration + q_integrand(lambdas, bg.require_theta_hat(), gradient, gradient)


def energy_drift_identity(problem: EpsilonProblem, path: PathField) -> np.ndarray:
    """-8 eps^2 e^{-2t} int phi_dot Im(e^{-i theta_hat} Omega^n) at every slice."""
    bg = problem.bg
    imag = np.asarray(calibrated_volume(pencil_lambdas(bg, path.values), bg.require_theta_hat()).imag_part)
    velocity = time_derivative(path.values, path.tau)
    spatial_axes = tuple(range(1, path.values.ndim))
    integral = np.sum(velocity * imag, axis=spatial_axes) * bg.grid.cell_volume * bg.omega_det
    return -8 * problem.epsilon ** 2 * np.exp(-2 * path.times) * integral


def diagnostics(problem: EpsilonProblem, path: PathField, report: SolverReport | None = None) -> SolverReport:
    """
    Fills the diagnostic fields of a report (a new one when none is given).
    Every slice must be a member.
    """
    report = report or SolverReport(epsilon=problem.epsilon)
    energy = path_energy_profile(problem.bg, path)
    drift = np.gradient(energy, path.tau, edge_order=2)
    report.energy = [float(value) for value in energy]
    report.max_energy_drift = float(np.max(np.abs(drift)))
    report.energy_drift_identity_gap = float(np.max(np.abs(drift - energy_drift_identity(problem, path))))
    report.min_phi_ddot = float(np.min(interior_derivatives(path.values, path.tau)[1]))
    report.sup_phi_ddot = float(np.max(np.abs(second_time_derivative(path.values, path.tau))))
    velocity = time_derivative(path.values, path.tau)
    gradient = gradient_array(velocity, path.grid)
    report.sup_grad_phi_dot = float(np.max(np.sqrt(np.sum(np.abs(gradient) ** 2, axis=-1))))
    report.sup_spatial_hessian = sup_spatial_second_differences(path)
    report.min_margin_per_slice = margins_per_slice(problem, path)
    report.geodesic_defect = float(np.max(np.abs(geodesic_defect(problem, path))))
    report.path_form_defect = float(np.max(np.abs(path_form_residual(problem, path))))
    report.lagrangian_flags = lagrangian_flags(problem, path)
    return report
