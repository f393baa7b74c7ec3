from __future__ import annotations

import logging
from abc import ABC, abstractmethod

from .calibrated_space import PathField, is_hypercritical, is_member
from .epsilon_problem import EpsilonProblem, SolverReport
from .errors import DomainError, LeftBranchError
from .geodesic_diagnostics import diagnostics
from .helpers import measure_time

LOGGER = logging.getLogger(__name__)


class AbstractGeodesicSolver(ABC):
    """
    Interface of an epsilon-geodesic solver.
    A concrete solver implements one continuation stage, solve_stage(); the
    continuation in epsilon, the branch check at convergence and the diagnostics
    are shared.
    """

    @abstractmethod
    def residual(self, problem: EpsilonProblem, path: PathField) -> PathField:
        raise NotImplementedError

    @abstractmethod
    def solve_stage(self, problem: EpsilonProblem, initial: PathField) -> tuple[PathField, SolverReport]:
        raise NotImplementedError

    @measure_time
    def solve_continuation(self, problem: EpsilonProblem,
                           initial: PathField | None = None) -> list[tuple[float, PathField, SolverReport]]:
        """
        Solves every stage of the schedule from the largest epsilon down, each
        solution seeding the next stage.
        :param initial: initial guess at the largest epsilon, linear interpolation by default
        :return: list of (epsilon, path, report), one entry per stage
        """
        if not is_hypercritical(problem.bg):
            LOGGER.warning("Lifted phase %.6f is not hypercritical; epsilon-geodesics may fail to exist",
                           problem.bg.theta_hat)
        if initial is None:
            initial = PathField.linear(problem.phi0, problem.phi1, problem.time_steps)
        elif initial.time_steps != problem.time_steps:
            raise DomainError(f"initial guess has {initial.time_steps} time steps, expected {problem.time_steps}")
        path = initial
        stages = []
        for epsilon in problem.continuation_schedule:
            stage = problem.at_epsilon(epsilon)
            LOGGER.info("Continuation stage epsilon=%.6g with %s", epsilon, type(self).__name__)
            path, report = self.solve_stage(stage, path)
            self.check_branch(stage, path, report)
            stages.append((epsilon, path, diagnostics(stage, path, report)))
        return stages

    def solve(self, problem: EpsilonProblem, initial: PathField | None = None) -> tuple[PathField, SolverReport]:
        _, path, report = self.solve_continuation(problem, initial)[-1]
        return path, report

    @staticmethod
    def check_branch(problem: EpsilonProblem, path: PathField, report: SolverReport) -> None:
        margins = []
        for k in range(path.time_steps):
            membership = is_member(problem.bg, path.slice(k))
            margins.append(membership.margin)
            if not membership.member:
                report.min_margin_per_slice = margins
                raise LeftBranchError(f"solution left the branch at slice {k} "
                                      f"(margin {membership.margin:.3e} at {membership.worst_point})", report)
        report.min_margin_per_slice = margins
