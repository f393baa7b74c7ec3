"""
Entry points of the epsilon-geodesic solver. The solver implementation is picked
by name through SolverFactory; PhaseNewtonSolver is the default.
"""
from __future__ import annotations

from .augmented_operator import linearization_apply, path_form_residual, residual, spacetime_pairing
from .calibrated_space import PathField
from .epsilon_problem import EpsilonProblem, SolverReport, default_schedule
from .geodesic_diagnostics import diagnostics, energy_drift_identity, geodesic_defect
from .solver_factory import SolverFactory

__all__ = ["EpsilonProblem", "SolverReport", "default_schedule", "residual", "linearization_apply",
           "spacetime_pairing", "path_form_residual", "diagnostics", "geodesic_defect",
           "energy_drift_identity", "solve", "solve_continuation"]


def solve(problem: EpsilonProblem, options: dict | None = None,
          initial: PathField | None = None) -> tuple[PathField, SolverReport]:
    """
    Solves the epsilon-geodesic by continuation over the problem's schedule.
    :param options: solver options, see SolverFactory
    :param initial: initial guess at the largest epsilon
    :return: path at problem.epsilon and its report
    """
    return SolverFactory.create(options).solve(problem, initial)


def solve_continuation(problem: EpsilonProblem, options: dict | None = None,
                       initial: PathField | None = None) -> list[tuple[float, PathField, SolverReport]]:
    return SolverFactory.create(options).solve_continuation(problem, initial)
