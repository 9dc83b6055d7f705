"""Sparse direct solves for the linearized step systems.

The linearization loses definiteness for singularly perturbed reaction terms,
so the systems are factored with a pivoting LU rather than solved by CG. A
module-level counter tracks factorizations so tests can assert the cost of
the step-size strategies.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularMatrixError

_PIVOT_FLOOR = 1e-14
_RESIDUAL_TOL = 1e-10

_factor_count = 0


def factor_count() -> int:
    """Number of sparse factorizations performed since the last reset."""
    return _factor_count


def reset_factor_count() -> None:
    global _factor_count
    _factor_count = 0


class Factorization:
    """LU factorization of a sparse matrix, reusable for many right sides."""

    def __init__(self, matrix: sp.spmatrix):
        global _factor_count
        self.matrix = matrix.tocsr()
        self.n = self.matrix.shape[0]
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("matrix must be square")
        if self.n == 0:
            self._lu = None
            return
        _factor_count += 1
        scale = np.abs(self.matrix.data).max() if self.matrix.nnz else 0.0
        if scale == 0.0:
            raise SingularMatrixError("matrix is identically zero")
        try:
            self._lu = spla.splu(self.matrix.tocsc())
        except RuntimeError as exc:  # SuperLU reports exact singularity
            raise SingularMatrixError(str(exc)) from exc
        pivots = np.abs(self._lu.U.diagonal())
        if pivots.min() < _PIVOT_FLOOR * scale:
            raise SingularMatrixError(
                f"pivot {pivots.min():.3e} below {_PIVOT_FLOOR:.0e} * "
                f"max|A| = {_PIVOT_FLOOR * scale:.3e}")

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape != (self.n,):
            raise ValueError(f"right-hand side of shape {b.shape} does not "
                             f"match dimension {self.n}")
        if self.n == 0:
            return np.empty(0)
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros(self.n)
        x = self._lu.solve(b)
        # iterative refinement until the residual contract holds
        residual = np.inf
        for _ in range(4):
            r = b - self.matrix @ x
            residual = np.linalg.norm(r) / bnorm
            if np.isfinite(residual) and residual <= _RESIDUAL_TOL:
                return x
            x = x + self._lu.solve(r)
        raise SingularMatrixError(
            f"relative residual {residual:.3e} exceeds "
            f"{_RESIDUAL_TOL:.0e} after refinement; matrix is "
            "numerically singular")


def factorize(matrix: sp.spmatrix) -> Factorization:
    return Factorization(matrix)


def factor_solve(matrix: sp.spmatrix, b: np.ndarray) -> np.ndarray:
    """Solve A x = b by sparse LU with pivoting; b = 0 returns x = 0."""
    b = np.asarray(b, dtype=float)
    if b.size and not b.any():
        return np.zeros_like(b)
    return Factorization(matrix).solve(b)
