from __future__ import annotations

import logging

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .abstract_geodesic_solver import AbstractGeodesicSolver
from .augmented_operator import Linearization, residual, residual_array
from .calibrated_space import PathField
from .epsilon_problem import EpsilonProblem, SolverReport
from .errors import NumericError, SolverFailure
from .helpers import measure_time

LOGGER = logging.getLogger(__name__)

ARMIJO = 1e-4
DEFAULT_OPTIONS = {
    "krylov_tol": 1e-6,
    "krylov_restart": 40,
    "krylov_maxiter": 20,
    "min_step": 1e-4,
    "precondition": True,
}


class PhaseNewtonSolver(AbstractGeodesicSolver):
    """
    Damped Newton iteration on the phase residual. Every Newton system is solved by
    restarted GMRES (the linearization is not symmetric) with the slice-frozen
    Fourier preconditioner. Steps are backtracked by the damping factor until the
    sup-norm of the residual decreases sufficiently.
    Created by SolverFactory with solver_type "PhaseNewtonSolver".
    """

    def __init__(self, options: dict | None = None):
        """
        :param options: krylov_tol, krylov_restart, krylov_maxiter, min_step, precondition;
            missing keys take the defaults
        """
        self.__options = {**DEFAULT_OPTIONS, **{key: value for key, value in (options or {}).items()
                                                if key in DEFAULT_OPTIONS}}

    def __repr__(self) -> str:
        return f"PhaseNewtonSolver({self.__options})"

    def residual(self, problem: EpsilonProblem, path: PathField) -> PathField:
        return residual(problem, path)

    def __newton_direction(self, linearization: Linearization) -> tuple[np.ndarray, int]:
        shape = linearization.interior_shape
        size = int(np.prod(shape))
        operator = LinearOperator((size, size), matvec=lambda vector: linearization.apply_interior(vector).ravel(),
                                  dtype=float)
        preconditioner = linearization.preconditioner().as_linear_operator() if self.__options["precondition"] \
            else None
        iterations = [0]

        def count(_):
            iterations[0] += 1

        rhs = -linearization.residual[1:-1].ravel()
        direction, info = gmres(operator, rhs, rtol=self.__options["krylov_tol"],
                                restart=self.__options["krylov_restart"], maxiter=self.__options["krylov_maxiter"],
                                M=preconditioner, callback=count, callback_type="pr_norm")
        if info < 0:
            raise NumericError(f"GMRES broke down (info={info})")
        if info > 0:
            LOGGER.debug("GMRES stopped after %d iterations short of its tolerance", iterations[0])
        return direction.reshape(shape), iterations[0]

    @measure_time
    def solve_stage(self, problem: EpsilonProblem, initial: PathField) -> tuple[PathField, SolverReport]:
        """
        Newton iteration at a single epsilon.
        :param initial: initial guess; its end slices are replaced by the boundary data
        :return: converged path and its report
        """
        report = SolverReport(epsilon=problem.epsilon, solver_type=type(self).__name__)
        values = np.array(initial.values, dtype=float)
        values[0] = problem.phi0.values
        values[-1] = problem.phi1.values

        for step in range(problem.max_newton + 1):
            linearization = Linearization(problem, values)
            norm = float(np.max(np.abs(linearization.residual)))
            report.residual_history.append(norm)
            LOGGER.debug("eps=%.4g newton step %d residual %.3e", problem.epsilon, step, norm)
            if norm < problem.newton_tol:
                report.converged = True
                break
            if step == problem.max_newton:
                report.final_residual = norm
                raise SolverFailure(f"Newton did not converge in {problem.max_newton} steps "
                                    f"(residual {norm:.3e})", report)
            direction, krylov = self.__newton_direction(linearization)
            report.krylov_iterations.append(krylov)
            values = self.__backtrack(problem, values, direction, norm, report)
            report.newton_steps += 1

        report.final_residual = report.residual_history[-1]
        LOGGER.info("eps=%.4g converged in %d Newton steps (residual %.3e)", problem.epsilon,
                    report.newton_steps, report.final_residual)
        return initial.with_values(values), report

    def __backtrack(self, problem: EpsilonProblem, values: np.ndarray, direction: np.ndarray, norm: float,
                    report: SolverReport) -> np.ndarray:
        step = 1.0
        while step >= self.__options["min_step"]:
            trial = values.copy()
            trial[1:-1] += step * direction
            try:
                trial_norm = float(np.max(np.abs(residual_array(problem, trial))))
            except NumericError:
                trial_norm = float("inf")
            if trial_norm <= (1 - ARMIJO * step) * norm:
                LOGGER.debug("line search accepted step %.3g (residual %.3e)", step, trial_norm)
                return trial
            step *= problem.damping
        report.final_residual = norm
        raise SolverFailure(f"Newton stagnated at residual {norm:.3e}: no step above "
                            f"{self.__options['min_step']} decreases it", report)
