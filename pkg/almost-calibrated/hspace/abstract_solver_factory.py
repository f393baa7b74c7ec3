from abc import ABC, abstractmethod

from .abstract_geodesic_solver import AbstractGeodesicSolver


class AbstractSolverFactory(ABC):
    """
    Interface of a solver factory. Only one class method, create(), is expected.
    """

    @classmethod
    @abstractmethod
    def create(cls, options: dict | None = None) -> AbstractGeodesicSolver:
        raise NotImplementedError
