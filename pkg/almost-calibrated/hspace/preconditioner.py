from __future__ import annotations

import logging

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import LinearOperator, splu

LOGGER = logging.getLogger(__name__)

TIME_COEFFICIENT_FLOOR = 1e-12


class SliceFrozenPreconditioner:
    """
    Exact inverse of a space-time operator whose coefficients are frozen on every
    interior time slice j. In Fourier space each mode xi decouples into a tridiagonal
    system in time:
        a_j (u_{j+1} - 2 u_j + u_{j-1}) + sigma_j(xi) u_j + c_j(xi) (u_{j+1} - u_{j-1})
    with u = 0 beyond the first and last interior slice. All modes are stacked into
    one block tridiagonal sparse matrix and factorized once.
    """

    def __init__(self, spatial_symbols: np.ndarray, time_coefficients: np.ndarray,
                 mixed_symbols: np.ndarray | None = None):
        """
        :param spatial_symbols: sigma_j(xi), shape (J,) + grid shape
        :param time_coefficients: a_j, shape (J,)
        :param mixed_symbols: c_j(xi), shape (J,) + grid shape, or None
        """
        self.shape = spatial_symbols.shape
        slices = self.shape[0]
        modes = int(np.prod(self.shape[1:]))
        a = np.asarray(time_coefficients, dtype=float)
        a = np.maximum(a, TIME_COEFFICIENT_FLOOR * max(1.0, float(np.max(np.abs(a)))))

        sigma = spatial_symbols.reshape(slices, modes).T.astype(complex)  # (modes, J)
        mixed = np.zeros_like(sigma) if mixed_symbols is None else mixed_symbols.reshape(slices, modes).T
        main = sigma - 2 * a[None, :]
        lower = a[None, :] - mixed
        upper = a[None, :] + mixed
        lower[:, 0] = 0.0  # no coupling across modes
        upper[:, -1] = 0.0
        matrix = diags([lower.ravel()[1:], main.ravel(), upper.ravel()[:-1]], [-1, 0, 1],
                       shape=(modes * slices, modes * slices), format="csc", dtype=complex)
        self.__lu = splu(matrix, permc_spec="NATURAL")  # tridiagonal, no fill-in
        self.__modes = modes
        LOGGER.debug("Factorized slice-frozen preconditioner with %d unknowns", modes * slices)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float).reshape(self.shape)
        spatial_axes = tuple(range(1, rhs.ndim))
        transformed = np.fft.fftn(rhs, axes=spatial_axes).reshape(self.shape[0], self.__modes).T
        solution = self.__lu.solve(np.ascontiguousarray(transformed.ravel()))
        solution = solution.reshape(self.__modes, self.shape[0]).T.reshape(self.shape)
        return np.real(np.fft.ifftn(solution, axes=spatial_axes))

    def as_linear_operator(self) -> LinearOperator:
        size = int(np.prod(self.shape))
        return LinearOperator((size, size), matvec=lambda vector: self.solve(vector).ravel(), dtype=float)
