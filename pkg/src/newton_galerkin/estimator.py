"""Robust a posteriori error indicators for the linearized iteration.

Splits the computable residual bound into elementwise discretization
indicators eta_T (weighted interior residual plus flux jumps) and a global
linearization indicator delta_Omega measuring the distance between the
linearized and the true nonlinearity. The weights alpha_T, alpha_E keep both
parts uniformly meaningful as eps -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import NonFiniteEvaluationError
from .fespace import (FeFunction, element_gradients, element_values_at_quad,
                      evaluate, shifted_iterate, _shape_1d)
from .mesh import Mesh, element_measures, size_data


@dataclass(frozen=True)
class Weights:
    """Elementwise and edgewise singular-perturbation weights."""

    alpha_T: np.ndarray
    alpha_E: np.ndarray


@dataclass(frozen=True)
class IndicatorSet:
    """Squared indicators of one adaptive pass.

    total2 is stored as delta_omega2 + sum(eta2) so the consistency identity
    holds exactly as stored.
    """

    eta2: np.ndarray
    delta2: np.ndarray
    osc2: np.ndarray
    delta_omega2: float
    total2: float


def weights(mesh: Mesh, eps: float) -> Weights:
    """alpha_T = min(1, h_T / sqrt(eps)) and alpha_E = min(1, h_E / sqrt(eps))."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    sizes = size_data(mesh)
    root = np.sqrt(eps)
    return Weights(alpha_T=np.minimum(1.0, sizes.h_T / root),
                   alpha_E=np.minimum(1.0, sizes.h_E / root))


def f_shift(problem, u_n: FeFunction, u_next: FeFunction, t: float,
            point) -> float:
    """Linearized nonlinearity t*f(u_n) + f'(u_n)*(u_next - u_n) at a point."""
    un = evaluate(u_n, point)
    unext = evaluate(u_next, point)
    val = t * problem.f(un) + problem.fprime(un) * (unext - un)
    if not np.isfinite(val):
        raise NonFiniteEvaluationError(-1, "linearized nonlinearity")
    return float(val)


def element_indicators(mesh: Mesh, problem, u_n: FeFunction,
                       u_next: FeFunction, t: float) -> IndicatorSet:
    """Evaluate all indicators for the pass (u_n -> u_next) at step size t."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"step size must lie in (0, 1], got {t}")
    u_n._require_same_mesh(u_next)
    if u_n.mesh is not mesh:
        raise ValueError("functions are not bound to the given mesh")
    eps = problem.epsilon
    degree = 5
    u_sh = shifted_iterate(u_n, u_next, t)

    un_q, w, _ = element_values_at_quad(mesh, u_n.values, degree)
    unext_q, _, _ = element_values_at_quad(mesh, u_next.values, degree)
    ush_q, _, _ = element_values_at_quad(mesh, u_sh.values, degree)
    with np.errstate(over="ignore", invalid="ignore"):
        f_un = problem.f(un_q)
        fp_un = problem.fprime(un_q)
        f_ush = problem.f(ush_q)
    for arr, what in ((f_un, "f"), (fp_un, "f'"), (f_ush, "f")):
        if not np.isfinite(arr).all():
            bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
            raise NonFiniteEvaluationError(bad, what)

    ft_q = t * f_un + fp_un * (unext_q - un_q)
    measures = element_measures(mesh)
    wt = weights(mesh, eps)

    # The elementwise Laplacian of a P1 function is identically zero; the term
    # stays in the residual so the formula carries over to higher-order spaces.
    laplacian_q = np.zeros_like(ft_q)
    residual_q = ft_q + eps * laplacian_q
    eta2 = wt.alpha_T ** 2 * ((residual_q ** 2) @ w) * measures

    delta2 = (((ft_q - f_ush) ** 2) @ w) * measures
    osc2 = _oscillation2(mesh, ft_q, w, measures, degree)

    # flux jumps of the shifted iterate across interior edges, half to each
    # neighbouring element
    grads = element_gradients(u_sh)
    left, right = mesh.edge_elements[:, 0], mesh.edge_elements[:, 1]
    if mesh.dim == 1:
        jump = grads[left] - grads[right]
        edge_sq = (eps * jump) ** 2            # point evaluation in 1d
    else:
        pq = mesh.nodes[mesh.interior_edges[:, 1]] \
            - mesh.nodes[mesh.interior_edges[:, 0]]
        length = np.linalg.norm(pq, axis=1)
        normal = np.column_stack([pq[:, 1], -pq[:, 0]]) / length[:, None]
        jump = ((grads[left] - grads[right]) * normal).sum(axis=1)
        edge_sq = (eps * jump) ** 2 * length
    edge_term = 0.5 * eps ** (-0.5) * wt.alpha_E * edge_sq
    np.add.at(eta2, left, edge_term)
    np.add.at(eta2, right, edge_term)

    delta_omega2 = float(delta2.sum())
    return IndicatorSet(eta2=eta2, delta2=delta2, osc2=osc2,
                        delta_omega2=delta_omega2,
                        total2=delta_omega2 + float(eta2.sum()))


def _oscillation2(mesh, ft_q, w, measures, degree):
    """Squared distance of the linearized nonlinearity to elementwise linears."""
    if mesh.dim == 1:
        xi, _ = quadrature.interval_rule(degree)
        shape = _shape_1d(xi)
        minv = np.array([[2.0, -1.0], [-1.0, 2.0]]) * 2.0
    else:
        shape, _ = quadrature.triangle_rule(degree)
        minv = (np.eye(3) - 0.25) * 12.0
    moments = np.einsum("q,mq,qa->ma", w, ft_q, shape) * measures[:, None]
    quad_form = np.einsum("ma,ab,mb->m", moments, minv, moments) / measures
    total = ((ft_q ** 2) @ w) * measures
    return np.maximum(total - quad_form, 0.0)


def total_estimate(ind: IndicatorSet) -> float:
    """Combined estimate sqrt(delta_Omega^2 + sum_T eta_T^2)."""
    return float(np.sqrt(ind.total2))
