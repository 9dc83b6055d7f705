"""The adaptive loop: interleaving damped Newton steps with mesh refinement.

Each pass solves the linearized system at the current step size, evaluates
the error indicators, and then either refines the mesh (when the
discretization indicators dominate) or accepts the step and advances the
Newton index (when the linearization indicator dominates). Refinement keeps
the Newton index and step size fixed and re-solves on the finer mesh.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import linsolve
from .errors import NonFiniteEvaluationError, SingularMatrixError
from .estimator import element_indicators, total_estimate
from .fespace import (FeFunction, NewtonOperator, apply_dirichlet,
                      energy_norm, prolongate, shifted_iterate,
                      true_energy_error)
from .mesh import Mesh, refine
from .newton import (SIMPLE, StepSizeStrategy, improved_step_size,
                     simple_step_size)


class Action(str, enum.Enum):
    NEWTON = "NEWTON"
    REFINE = "REFINE"


class Termination(str, enum.Enum):
    TOLERANCE = "tolerance"
    DOF_BUDGET = "dof budget"
    ITERATION_BUDGET = "iteration budget"


@dataclass
class RunConfig:
    """Parameters of one adaptive run.

    theta : interplay parameter; refine when the squared linearization
        indicator is at most theta times the squared discretization sum.
    theta_mark : bulk fraction of the marking step, in (0, 1).
    strategy : step-size prediction strategy (copied, never mutated).
    stop_tolerance : target for the total estimate.
    max_dof : free-node budget; refinement stops once it would be exceeded.
    max_iterations : bound on the number of passes (records).
    """

    theta: float
    strategy: StepSizeStrategy
    stop_tolerance: float
    max_dof: int
    max_iterations: int
    theta_mark: float = 0.5

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if not 0.0 < self.theta_mark < 1.0:
            raise ValueError("theta_mark must lie in (0, 1)")
        if self.max_dof < 1 or self.max_iterations < 1:
            raise ValueError("max_dof and max_iterations must be >= 1")


@dataclass
class IterationRecord:
    """Telemetry of one pass of the adaptive loop."""

    n: int
    dofs: int
    action: str
    k: Optional[float]
    delta_omega: float
    eta_total: float
    estimate_total: float
    true_error: Optional[float] = None
    efficiency: Optional[float] = None


@dataclass
class SolveResult:
    solution: FeFunction
    records: list[IterationRecord]
    termination: Termination


class AdaptiveSolveError(RuntimeError):
    """Solver failure inside the adaptive loop, with telemetry up to it."""

    def __init__(self, message: str, records: list[IterationRecord]):
        super().__init__(message)
        self.records = records


def interplay_test(delta_omega2: float, sum_eta2: float,
                   theta: float) -> Action:
    """REFINE when delta_Omega^2 <= theta * sum eta^2 (ties refine)."""
    if delta_omega2 < 0 or sum_eta2 < 0:
        raise ValueError("squared indicators must be nonnegative")
    return Action.REFINE if delta_omega2 <= theta * sum_eta2 else Action.NEWTON


def dorfler_mark(eta2, theta_mark: float) -> np.ndarray:
    """Smallest element set carrying a theta_mark fraction of sum(eta^2).

    Greedy by descending indicator, ties broken by lower element index. An
    all-zero indicator field marks every element (uniform refinement).
    """
    if not 0.0 < theta_mark < 1.0:
        raise ValueError("theta_mark must lie in (0, 1)")
    eta2 = np.asarray(eta2, dtype=float)
    total = eta2.sum()
    if total <= 0.0:
        return np.arange(eta2.size)
    order = np.lexsort((np.arange(eta2.size), -eta2))
    csum = np.cumsum(eta2[order])
    count = int(np.searchsorted(csum, theta_mark * total, side="left")) + 1
    return np.sort(order[:min(count, eta2.size)])


def adaptive_solve(problem, mesh: Mesh, guess: FeFunction,
                   config: RunConfig) -> SolveResult:
    """Run the adaptive Newton/refinement loop to one of its exits.

    Returns the last shifted iterate (the function whose estimate was
    recorded last), the full record list, and the termination reason.
    Solver failures raise AdaptiveSolveError carrying the records so far.
    """
    strategy = replace(config.strategy)
    u = apply_dirichlet(guess, problem)
    records: list[IterationRecord] = []
    n = 0
    k: Optional[float] = None
    try:
        while True:
            op = NewtonOperator(mesh, problem, u)
            fact = linsolve.factorize(op.matrix)
            if k is None:
                # new Newton index: update transform and step size; the
                # factorization is shared with the damped solve below
                delta = op.complete(fact.solve(op.rhs(1.0))) - u
                if strategy.kind == SIMPLE:
                    k = simple_step_size(
                        strategy, energy_norm(delta, problem.epsilon))
                else:
                    k = improved_step_size(strategy, mesh, problem, u, delta)
                strategy.prev_k = k
            u_next = op.complete(fact.solve(op.rhs(k)))
            u_sh = shifted_iterate(u, u_next, k)
            ind = element_indicators(mesh, problem, u, u_next, k)
            estimate = total_estimate(ind)
            sum_eta2 = float(ind.eta2.sum())
            if problem.exact is not None:
                err = true_energy_error(u_sh, problem)
                eff = estimate / err
            else:
                err = eff = None

            action = interplay_test(ind.delta_omega2, sum_eta2, config.theta)
            if action is Action.REFINE and mesh.dof_count >= config.max_dof:
                action = Action.NEWTON   # budget exhausted, cannot refine
            records.append(IterationRecord(
                n=n, dofs=mesh.dof_count, action=action.value,
                k=k if action is Action.NEWTON else None,
                delta_omega=float(np.sqrt(ind.delta_omega2)),
                eta_total=float(np.sqrt(sum_eta2)),
                estimate_total=estimate, true_error=err, efficiency=eff))

            if estimate <= config.stop_tolerance:
                return SolveResult(u_sh, records, Termination.TOLERANCE)
            if len(records) >= config.max_iterations:
                return SolveResult(u_sh, records, Termination.ITERATION_BUDGET)

            if action is Action.REFINE:
                marked = dorfler_mark(ind.eta2, config.theta_mark)
                mesh, pmap = refine(mesh, marked)
                u = apply_dirichlet(prolongate(u, pmap), problem)
                if mesh.dof_count > config.max_dof:
                    return SolveResult(u_sh, records, Termination.DOF_BUDGET)
                # same Newton index, same step size on the refined mesh
            else:
                u = u_next
                n += 1
                k = None
    except (SingularMatrixError, NonFiniteEvaluationError) as exc:
        raise AdaptiveSolveError(str(exc), records) from exc
