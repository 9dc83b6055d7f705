"""Adaptive Newton-Galerkin solver for semilinear reaction-diffusion problems.

Combines a damped Newton iteration with adaptive step-size prediction and an
adaptively refined P1 finite element discretization driven by a
perturbation-robust a posteriori error estimator.
"""

from .driver import (Action, AdaptiveSolveError, IterationRecord, RunConfig,
                     SolveResult, Termination, adaptive_solve, dorfler_mark,
                     interplay_test)
from .errors import (ConfigError, GenerationMismatchError, MeshError,
                     NonFiniteEvaluationError, SingularMatrixError)
from .estimator import (IndicatorSet, Weights, element_indicators, f_shift,
                        total_estimate, weights)
from .fespace import (ExactDifference, FeFunction, LinearSystem,
                      NewtonOperator, assemble_newton_system, energy_norm,
                      evaluate, gradient, prolongate, shifted_iterate,
                      solve_step, true_energy_error)
from .mesh import (Mesh, ProlongationMap, SizeData, interval_mesh, refine,
                   size_data, triangle_mesh, uniform_interval, uniform_square)
from .newton import (IMPROVED, SIMPLE, NewtonState, StepSizeStrategy,
                     improved_step_size, newton_transform, plan_step,
                     simple_step_size)
from .problems import (Domain, ExactSolution, Problem, first_integral, fisher,
                       ginzburg_landau, initial_guess, linear_reaction)

__all__ = [
    "Action", "AdaptiveSolveError", "ConfigError", "Domain",
    "ExactDifference", "ExactSolution", "FeFunction",
    "GenerationMismatchError", "IMPROVED", "IndicatorSet", "IterationRecord",
    "LinearSystem", "Mesh", "MeshError", "NewtonOperator", "NewtonState",
    "NonFiniteEvaluationError", "Problem", "ProlongationMap", "RunConfig",
    "SIMPLE", "SingularMatrixError", "SizeData", "SolveResult",
    "StepSizeStrategy", "Termination", "Weights", "adaptive_solve",
    "assemble_newton_system", "dorfler_mark", "element_indicators",
    "energy_norm", "evaluate", "f_shift", "first_integral", "fisher",
    "ginzburg_landau", "gradient", "initial_guess", "interplay_test",
    "interval_mesh", "linear_reaction", "newton_transform", "plan_step",
    "prolongate", "refine", "shifted_iterate", "simple_step_size",
    "improved_step_size", "size_data", "solve_step", "total_estimate",
    "triangle_mesh", "true_energy_error", "uniform_interval",
    "uniform_square", "weights",
]

__version__ = "0.1.0"
