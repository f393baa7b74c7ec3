from __future__ import annotations

import logging
import sys  # the factory creates solver classes by name (string)

from .abstract_geodesic_solver import AbstractGeodesicSolver
from .abstract_solver_factory import AbstractSolverFactory
from .errors import ConfigError
from .monge_ampere_solver import MongeAmpereSolver
from .phase_newton_solver import PhaseNewtonSolver

LOGGER = logging.getLogger(__name__)

DEFAULT_OPTIONS = {"solver_type": "PhaseNewtonSolver"}


class SolverFactory(AbstractSolverFactory):
    """
    Factory of epsilon-geodesic solvers. It returns one of two instances:
        PhaseNewtonSolver - Newton-Krylov on the phase formulation (any n, any background)
        MongeAmpereSolver - independent determinant formulation (n = 1, alpha = omega only)
    The class is picked by the "solver_type" option; the remaining options are handed
    to the solver's constructor.
    """

    @classmethod
    def create(cls, options: dict | None = None) -> AbstractGeodesicSolver:
        options = {**DEFAULT_OPTIONS, **(options or {})}
        solver_class = getattr(sys.modules[__name__], str(options["solver_type"]), None)
        if not (isinstance(solver_class, type) and issubclass(solver_class, AbstractGeodesicSolver)):
            raise ConfigError(f"unknown solver type {options['solver_type']!r}")
        solver = solver_class(options)
        LOGGER.debug("Working with %s", solver)
        return solver
