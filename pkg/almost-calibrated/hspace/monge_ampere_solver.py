from __future__ import annotations

import logging
import math

import numpy as np
from scipy.optimize import NoConvergence, newton_krylov

from .abstract_geodesic_solver import AbstractGeodesicSolver
from .augmented_operator import interior_derivatives, time_scales
from .calibrated_space import PathField
from .epsilon_problem import EpsilonProblem, SolverReport
from .errors import DomainError, SolverFailure
from .helpers import measure_time
from .preconditioner import SliceFrozenPreconditioner
from .torus_discretization import difference_symbols, gradient_array, hessian_array

LOGGER = logging.getLogger(__name__)

BACKGROUND_TOL = 1e-10
DEFAULT_OPTIONS = {
    "inner_maxiter": 30,
    "outer_k": 10,
    "precondition": True,
}


class MongeAmpereSolver(AbstractGeodesicSolver):
    """
    Independent solver for complex dimension one with alpha = omega and
    theta_hat = pi/4. There the phase equation of the augmented 2x2 matrix is
    equivalent to the determinant equation
        (2 + H/g)(phi_ddot + kappa) - |d phi_dot|^2 / g - 2 kappa = 0,
    kappa = 4 eps^2 e^{-2s}, g = omega and H = phi_{1 1bar}, which is handed to
    scipy's Newton-Krylov solver. It serves as an oracle for PhaseNewtonSolver.
    Created by SolverFactory with solver_type "MongeAmpereSolver".
    """

    def __init__(self, options: dict | None = None):
        self.__options = {**DEFAULT_OPTIONS, **{key: value for key, value in (options or {}).items()
                                                if key in DEFAULT_OPTIONS}}

    def __repr__(self) -> str:
        return f"MongeAmpereSolver({self.__options})"

    @staticmethod
    def check_background(problem: EpsilonProblem) -> float:
        """
        :return: the scalar g = omega_{1 1bar}
        """
        bg = problem.bg
        if bg.grid.complex_dim != 1:
            raise DomainError("MongeAmpereSolver handles complex dimension one only")
        g = float(np.real(bg.omega[0, 0]))
        if np.max(np.abs(bg.alpha.matrices - bg.omega)) > BACKGROUND_TOL * max(1.0, g):
            raise DomainError("MongeAmpereSolver needs alpha = omega")
        if abs(bg.require_theta_hat() - math.pi / 4) > BACKGROUND_TOL:
            raise DomainError(f"MongeAmpereSolver needs theta_hat = pi/4, got {bg.theta_hat}")
        return g

    @staticmethod
    def __kappa(problem: EpsilonProblem) -> np.ndarray:
        _, corner_scale = time_scales(problem)
        return (1.0 / corner_scale).reshape((-1,) + (1,) * problem.bg.grid.real_dim)

    def residual_values(self, problem: EpsilonProblem, values: np.ndarray) -> np.ndarray:
        """Determinant residual on the interior slices."""
        g = self.check_background(problem)
        grid = problem.bg.grid
        tau = 1.0 / (problem.time_steps - 1)
        kappa = self.__kappa(problem)
        velocity, acceleration = interior_derivatives(values, tau)
        hessian = np.real(hessian_array(values[1:-1], grid)[..., 0, 0])
        gradient = gradient_array(velocity, grid)[..., 0]
        return (2 + hessian / g) * (acceleration + kappa) - np.abs(gradient) ** 2 / g - 2 * kappa

    def residual(self, problem: EpsilonProblem, path: PathField) -> PathField:
        result = np.zeros_like(path.values)
        result[1:-1] = self.residual_values(problem, path.values)
        return path.with_values(result)

    def __preconditioner(self, problem: EpsilonProblem, values: np.ndarray, g: float):
        """Linearization with coefficients averaged over space on every slice."""
        grid = problem.bg.grid
        tau = 1.0 / (problem.time_steps - 1)
        spatial_axes = tuple(range(1, grid.real_dim + 1))
        expand = (-1,) + (1,) * grid.real_dim
        velocity, acceleration = interior_derivatives(values, tau)
        hessian = np.real(hessian_array(values[1:-1], grid)[..., 0, 0])
        gradient = gradient_array(velocity, grid)[..., 0]
        symbols = difference_symbols(grid)

        time = np.mean(2 + hessian / g, axis=spatial_axes) / tau ** 2
        forcing = np.mean(acceleration + self.__kappa(problem), axis=spatial_axes)
        spatial = forcing.reshape(expand) * np.real(symbols["hessian"][..., 0, 0]) / g
        p = (np.mean(gradient, axis=spatial_axes) / g).reshape(expand)
        mixed = -(p.conj() * symbols["gradient"][..., 0] + p * symbols["antigradient"][..., 0]) / (2 * tau)
        return SliceFrozenPreconditioner(spatial, time, mixed).as_linear_operator()

    @measure_time
    def solve_stage(self, problem: EpsilonProblem, initial: PathField) -> tuple[PathField, SolverReport]:
        g = self.check_background(problem)
        report = SolverReport(epsilon=problem.epsilon, solver_type=type(self).__name__)
        values = np.array(initial.values, dtype=float)
        values[0] = problem.phi0.values
        values[-1] = problem.phi1.values
        interior_shape = values[1:-1].shape

        def function(interior: np.ndarray) -> np.ndarray:
            values[1:-1] = interior.reshape(interior_shape)
            return self.residual_values(problem, values).ravel()

        def record(_, residual_vector):
            report.residual_history.append(float(np.max(np.abs(residual_vector))))
            report.newton_steps += 1

        report.residual_history.append(float(np.max(np.abs(function(values[1:-1].ravel())))))
        inner = self.__preconditioner(problem, values, g) if self.__options["precondition"] else None
        try:
            solution = newton_krylov(function, values[1:-1].ravel(), method="lgmres",
                                     inner_maxiter=self.__options["inner_maxiter"],
                                     outer_k=self.__options["outer_k"], inner_M=inner,
                                     f_tol=problem.newton_tol, maxiter=problem.max_newton, callback=record)
        except (NoConvergence, ValueError) as exc:
            report.final_residual = report.residual_history[-1]
            raise SolverFailure(f"Monge-Ampere Newton-Krylov did not converge: {exc}", report) from exc
        values[1:-1] = solution.reshape(interior_shape)
        report.final_residual = float(np.max(np.abs(self.residual_values(problem, values))))
        report.converged = True
        LOGGER.info("eps=%.4g Monge-Ampere converged in %d steps (residual %.3e)", problem.epsilon,
                    report.newton_steps, report.final_residual)
        return initial.with_values(values), report
