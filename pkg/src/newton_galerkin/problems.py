"""Benchmark reaction-diffusion problems -eps*Lap(u) = f(u) and initial guesses.

All nonlinearities are vectorized over numpy arrays. The linear reaction
benchmark carries a closed-form solution (written in an overflow-safe form so
it stays usable deep into the singularly perturbed regime); the Fisher and
Ginzburg-Landau benchmarks have no closed-form solutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import fespace
from .errors import MeshError
from .mesh import Mesh, uniform_interval, uniform_square


@dataclass(frozen=True)
class Domain:
    """Computational domain: an interval (a, b) or the unit square."""

    kind: str
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in ("interval", "unit_square"):
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    def initial_mesh(self, n: int) -> Mesh:
        if self.kind == "interval":
            return uniform_interval(self.a, self.b, n)
        return uniform_square(n)

    def poincare_constant(self) -> float:
        if self.kind == "interval":
            return (self.b - self.a) / np.pi
        return 1.0 / (np.sqrt(2.0) * np.pi)


@dataclass(frozen=True)
class ExactSolution:
    value: Callable
    gradient: Callable


@dataclass(frozen=True)
class Problem:
    """Semilinear reaction-diffusion problem with Dirichlet data.

    `f` and `fprime` accept numpy arrays; `dirichlet` maps a boundary point
    (scalar in 1d, length-2 array in 2d) to the prescribed value.
    """

    epsilon: float
    f: Callable
    fprime: Callable
    domain: Domain
    dirichlet: Callable
    exact: Optional[ExactSolution] = None
    name: str = "custom"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    def validate(self, samples=(-2.0, -1.0, 0.0, 0.5, 1.0, 2.0),
                 rtol: float = 1e-6) -> None:
        """Check that fprime matches a finite-difference derivative of f."""
        for u in samples:
            step = 1e-7 * (1.0 + abs(u))
            fd = (self.f(u + step) - self.f(u - step)) / (2.0 * step)
            exact = self.fprime(u)
            if abs(fd - exact) > rtol * max(1.0, abs(exact)):
                raise ValueError(
                    f"fprime({u}) = {exact} disagrees with finite "
                    f"difference {fd}")


def _stable_cosh_ratio(a: np.ndarray, b: float) -> np.ndarray:
    """cosh(a)/cosh(b) for |a| <= b without overflow."""
    a = np.abs(a)
    return np.exp(a - b) * (1.0 + np.exp(-2.0 * a)) / (1.0 + np.exp(-2.0 * b))


def _stable_sinh_ratio(a: np.ndarray, b: float) -> np.ndarray:
    """sinh(a)/cosh(b) for |a| <= b without overflow."""
    sign = np.sign(a)
    a = np.abs(a)
    return sign * np.exp(a - b) * (1.0 - np.exp(-2.0 * a)) \
        / (1.0 + np.exp(-2.0 * b))


def linear_reaction(epsilon: float) -> Problem:
    """-eps u'' + u = 1 on (0, 1) with zero boundary values.

    Rewritten as f(u) = 1 - u; the exact solution develops boundary layers of
    width ~sqrt(eps) at both endpoints as eps -> 0.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    root = np.sqrt(epsilon)
    half_width = 0.5 / root

    def value(x):
        return 1.0 - _stable_cosh_ratio((np.asarray(x) - 0.5) / root,
                                        half_width)

    def grad(x):
        return -_stable_sinh_ratio((np.asarray(x) - 0.5) / root,
                                   half_width) / root

    return Problem(
        epsilon=epsilon,
        f=lambda u: 1.0 - u,
        fprime=lambda u: np.full_like(np.asarray(u, dtype=float), -1.0),
        domain=Domain("interval"),
        dirichlet=lambda x: 0.0,
        exact=ExactSolution(value=value, gradient=grad),
        name="linear_reaction")


def fisher(epsilon: float, alpha: float, beta: float) -> Problem:
    """Fisher's steady equation eps u'' + u - u^2 = 0 with u(0)=alpha, u(1)=beta.

    No closed-form solutions; for alpha > -1/2, beta < 1 the solution family
    develops spikes bounded by 1 as eps -> 0.
    """
    return Problem(
        epsilon=epsilon,
        f=lambda u: u - u ** 2,
        fprime=lambda u: 1.0 - 2.0 * u,
        domain=Domain("interval"),
        dirichlet=lambda x: alpha if x < 0.5 else beta,
        name="fisher")


def ginzburg_landau(epsilon: float) -> Problem:
    """eps Lap(u) + u - u^3 = 0 on the unit square with zero boundary values."""
    return Problem(
        epsilon=epsilon,
        f=lambda u: u - u ** 3,
        fprime=lambda u: 1.0 - 3.0 * u ** 2,
        domain=Domain("unit_square"),
        dirichlet=lambda p: 0.0,
        name="ginzburg_landau")


def first_integral(epsilon: float, value, slope):
    """Conserved quantity eps y^2 - 2/3 x^3 + x^2 of the Fisher flow.

    Along any smooth solution of the steady Fisher equation this expression
    is constant in x; exposed as a post-hoc sampling diagnostic.
    """
    value = np.asarray(value, dtype=float)
    slope = np.asarray(slope, dtype=float)
    return epsilon * slope ** 2 - (2.0 / 3.0) * value ** 3 + value ** 2


def spike_profile(x, bumps: int = 3, half_width: float | None = None):
    """Train of `bumps` unit-height tents on (0, 1), descending to 0 between.

    Bump i is centered at (2i - 1) / (2 * bumps). The default half-width
    1 / (2 * bumps) makes neighbouring supports touch, which approximates a
    large-amplitude oscillation train of matching period; much narrower
    tents inject too little mass and the damped iteration drifts to a
    different oscillation count.
    """
    x = np.asarray(x, dtype=float)
    if half_width is None:
        half_width = 1.0 / (2.0 * bumps)
    out = np.zeros_like(x)
    for i in range(1, bumps + 1):
        center = (2 * i - 1) / (2.0 * bumps)
        out = np.maximum(out, 1.0 - np.abs(x - center) / half_width)
    return np.maximum(out, 0.0)


def initial_guess(kind, mesh: Mesh, problem: Problem, *,
                  bumps: int = 3) -> fespace.FeFunction:
    """Build a named starting iterate by nodal interpolation.

    `kind` is "spike" (1d bump train), "sign_x2" (2d, sign(x2 - 1/2)), a
    number c, or ("const", c). Boundary nodes are overwritten with the
    problem's Dirichlet data afterwards.
    """
    if isinstance(kind, tuple) and kind and kind[0] == "const":
        vals = np.full(mesh.node_count, float(kind[1]))
    elif isinstance(kind, (int, float)) and not isinstance(kind, bool):
        vals = np.full(mesh.node_count, float(kind))
    elif kind == "spike":
        if mesh.dim != 1:
            raise MeshError("spike initial guess needs a 1d mesh")
        vals = spike_profile(mesh.nodes, bumps=bumps)
    elif kind == "sign_x2":
        if mesh.dim != 2:
            raise MeshError("sign_x2 initial guess needs a 2d mesh")
        vals = np.sign(mesh.nodes[:, 1] - 0.5)
    else:
        raise ValueError(f"unknown initial guess {kind!r}")
    return fespace.apply_dirichlet(fespace.FeFunction(mesh, vals), problem)


BUILTIN_PROBLEMS = {
    "linear_reaction": linear_reaction,
    "fisher": fisher,
    "ginzburg_landau": ginzburg_landau,
}
