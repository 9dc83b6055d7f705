"""Damped Newton iteration: the update transform and step-size prediction.

The step sizes come from viewing damped Newton as forward-Euler applied to
the continuation flow du/dt = -F'(u)^{-1} F(u): a tolerance tau on the
per-step deviation from the flow trajectory yields a computable step bound.
The simple rule uses only the norm of the update transform; the improved
rule probes the transform once more at an auxiliary point to estimate the
trajectory's curvature, at the cost of one extra linear solve per step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linsolve
from .errors import GenerationMismatchError
from .fespace import FeFunction, NewtonOperator, energy_norm
from .mesh import Mesh

SIMPLE = "simple"
IMPROVED = "improved"

_CURVATURE_FLOOR = 1e-14


@dataclass
class StepSizeStrategy:
    """State of a step-size prediction rule.

    kind : "simple" or "improved"
    tau : trajectory tolerance > 0
    gamma : auxiliary-step parameter > 0 (improved rule only)
    prev_k : last accepted step size, None before the first step
    """

    kind: str
    tau: float
    gamma: float = 0.5
    prev_k: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (SIMPLE, IMPROVED):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.prev_k is not None and not 0.0 < self.prev_k <= 1.0:
            raise ValueError("prev_k must lie in (0, 1]")


@dataclass
class NewtonState:
    """Telemetry of one planned Newton step."""

    iterate: FeFunction
    transform: FeFunction
    transform_norm: float
    k: float
    residual_estimate: Optional[float] = None


def newton_transform(mesh: Mesh, problem, u_n: FeFunction) -> FeFunction:
    """Full Newton update direction -F'(u_n)^{-1} F(u_n) as a nodal function.

    Solves the linearized system with unit step and subtracts the iterate;
    the result vanishes on the Dirichlet boundary.
    """
    if u_n.mesh is not mesh:
        raise GenerationMismatchError("iterate is not bound to this mesh")
    op = NewtonOperator(mesh, problem, u_n)
    fact = linsolve.factorize(op.matrix)
    return op.complete(fact.solve(op.rhs(1.0))) - u_n


def simple_step_size(strategy: StepSizeStrategy, transform_norm: float) -> float:
    """k = min(sqrt(2 tau / ||N(u)||), 1); a vanishing norm yields k = 1."""
    if transform_norm < 0:
        raise ValueError("transform norm must be nonnegative")
    if transform_norm == 0.0:
        return 1.0
    return min(np.sqrt(2.0 * strategy.tau / transform_norm), 1.0)


def improved_step_size(strategy: StepSizeStrategy, mesh: Mesh, problem,
                       u_n: FeFunction, delta_n: FeFunction) -> float:
    """Curvature-corrected step size; performs one extra transform solve.

    With kappa the previous step size (or the simple rule's value on the
    first call), the transform is re-evaluated at u_n + h * delta_n for
    h = gamma * kappa / ||delta_n||^2, and
    k = min(sqrt(2 tau h / ||N(u_n + h delta_n) - N(u_n)||), 1).
    All norms are the eps-weighted energy norm.
    """
    if strategy.kind != IMPROVED:
        raise ValueError("strategy is not of the improved kind")
    eps = problem.epsilon
    norm = energy_norm(delta_n, eps)
    if norm == 0.0:
        return 1.0
    kappa = strategy.prev_k if strategy.prev_k is not None \
        else simple_step_size(strategy, norm)
    h = strategy.gamma * kappa / norm ** 2
    probe = u_n + h * delta_n
    eta = newton_transform(mesh, problem, probe) - delta_n
    eta_norm = energy_norm(eta, eps)
    if eta_norm <= _CURVATURE_FLOOR:
        return 1.0
    return min(np.sqrt(2.0 * strategy.tau * h / eta_norm), 1.0)


def choose_step_size(strategy: StepSizeStrategy, mesh: Mesh, problem,
                     u_n: FeFunction, delta_n: FeFunction) -> float:
    """Dispatch to the configured rule given the current update transform."""
    if strategy.kind == SIMPLE:
        return simple_step_size(strategy,
                                energy_norm(delta_n, problem.epsilon))
    return improved_step_size(strategy, mesh, problem, u_n, delta_n)


def plan_step(strategy: StepSizeStrategy, mesh: Mesh, problem,
              u_n: FeFunction) -> NewtonState:
    """Compute the update transform and step size for one Newton step."""
    delta = newton_transform(mesh, problem, u_n)
    norm = energy_norm(delta, problem.epsilon)
    if strategy.kind == SIMPLE:
        k = simple_step_size(strategy, norm)
    else:
        k = improved_step_size(strategy, mesh, problem, u_n, delta)
    return NewtonState(iterate=u_n, transform=delta, transform_norm=norm, k=k)
