"""Gauss quadrature rules on the unit interval and the reference triangle.

All rules are normalized to measure one: weights sum to 1, so elementwise
integrals are ``|T| * sum(w_q * g(x_q))``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def interval_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on [0, 1] exact for polynomials up to `degree`."""
    if degree < 0:
        raise ValueError(f"quadrature degree must be nonnegative, got {degree}")
    npts = degree // 2 + 1
    x, w = np.polynomial.legendre.leggauss(npts)
    return (x + 1.0) / 2.0, w / 2.0


# Degree-5 rule with 7 points (centroid plus two symmetric orbits), given in
# barycentric coordinates.
_SQRT15 = np.sqrt(15.0)
_B1 = (6.0 + _SQRT15) / 21.0
_B2 = (6.0 - _SQRT15) / 21.0
_W1 = (155.0 + _SQRT15) / 1200.0
_W2 = (155.0 - _SQRT15) / 1200.0

_TRI_RULES = {
    1: (
        np.array([[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]]),
        np.array([1.0]),
    ),
    2: (
        np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
        np.array([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
    ),
    5: (
        np.array(
            [
                [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                [1.0 - 2.0 * _B1, _B1, _B1],
                [_B1, 1.0 - 2.0 * _B1, _B1],
                [_B1, _B1, 1.0 - 2.0 * _B1],
                [1.0 - 2.0 * _B2, _B2, _B2],
                [_B2, 1.0 - 2.0 * _B2, _B2],
                [_B2, _B2, 1.0 - 2.0 * _B2],
            ]
        ),
        np.array([9.0 / 40.0, _W1, _W1, _W1, _W2, _W2, _W2]),
    ),
}


def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric points and weights exact for polynomials up to `degree`.

    Rules are available for degrees 1, 2 and 5; a request in between is
    promoted to the next available rule.
    """
    for available in (1, 2, 5):
        if degree <= available:
            return _TRI_RULES[available]
    raise ValueError(f"no triangle quadrature rule of degree {degree} (max 5)")
