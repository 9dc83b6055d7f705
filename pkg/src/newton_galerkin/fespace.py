"""Continuous piecewise-linear finite elements on simplicial meshes.

Provides nodal functions bound to a mesh generation, assembly of the
linearized reaction-diffusion systems, the eps-weighted energy norm, point
evaluation, and prolongation after refinement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import linsolve, quadrature
from .errors import GenerationMismatchError, NonFiniteEvaluationError
from .mesh import Mesh, ProlongationMap, element_measures


@dataclass
class FeFunction:
    """Nodal coefficient vector of a P1 function on a fixed mesh generation."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.node_count,):
            raise ValueError(
                f"coefficient vector of shape {self.values.shape} does not "
                f"match the {self.mesh.node_count} mesh nodes")

    @property
    def generation(self) -> int:
        return self.mesh.generation

    def copy(self) -> "FeFunction":
        return FeFunction(self.mesh, self.values.copy())

    def _require_same_mesh(self, other: "FeFunction") -> None:
        if other.mesh is not self.mesh:
            raise GenerationMismatchError(
                f"functions bound to different meshes (generation "
                f"{self.generation} vs {other.generation})")

    def __add__(self, other: "FeFunction") -> "FeFunction":
        self._require_same_mesh(other)
        return FeFunction(self.mesh, self.values + other.values)

    def __sub__(self, other: "FeFunction") -> "FeFunction":
        self._require_same_mesh(other)
        return FeFunction(self.mesh, self.values - other.values)

    def __mul__(self, scalar: float) -> "FeFunction":
        return FeFunction(self.mesh, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass
class ExactDifference:
    """Difference between a smooth reference solution and a P1 function.

    `value` and `gradient` must accept arrays of points (shape (Q,) in 1d,
    (Q, 2) in 2d) and return values / gradients at those points.
    """

    fe: FeFunction
    value: Callable
    gradient: Callable


@dataclass
class LinearSystem:
    """Reduced linear system over the free (non-Dirichlet) nodes."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    mesh: Mesh
    dirichlet_values: np.ndarray


def constant(mesh: Mesh, c: float) -> FeFunction:
    return FeFunction(mesh, np.full(mesh.node_count, float(c)))


def interpolate(mesh: Mesh, fn) -> FeFunction:
    """Nodal interpolation of a pointwise function."""
    vals = np.array([float(fn(p)) for p in mesh.nodes])
    return FeFunction(mesh, vals)


def dirichlet_values(mesh: Mesh, problem) -> np.ndarray:
    return np.array([float(problem.dirichlet(mesh.nodes[b]))
                     for b in mesh.boundary_nodes])


def apply_dirichlet(u: FeFunction, problem) -> FeFunction:
    """Overwrite the boundary nodes of `u` with the prescribed data."""
    vals = u.values.copy()
    vals[u.mesh.boundary_nodes] = dirichlet_values(u.mesh, problem)
    return FeFunction(u.mesh, vals)


# ---------------------------------------------------------------------------
# element geometry and quadrature tables
# ---------------------------------------------------------------------------

def _shape_1d(xi: np.ndarray) -> np.ndarray:
    return np.column_stack([1.0 - xi, xi])


def _triangle_gradients(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Constant barycentric gradients (M, 3, 2) and areas (M,)."""
    corners = mesh.nodes[mesh.elements]
    p0, p1, p2 = corners[:, 0], corners[:, 1], corners[:, 2]
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0]))
    grads = np.empty((mesh.element_count, 3, 2))
    grads[:, 0, 0] = p1[:, 1] - p2[:, 1]
    grads[:, 0, 1] = p2[:, 0] - p1[:, 0]
    grads[:, 1, 0] = p2[:, 1] - p0[:, 1]
    grads[:, 1, 1] = p0[:, 0] - p2[:, 0]
    grads[:, 2, 0] = p0[:, 1] - p1[:, 1]
    grads[:, 2, 1] = p1[:, 0] - p0[:, 0]
    grads /= det[:, None, None]
    return grads, 0.5 * np.abs(det)


def element_values_at_quad(mesh: Mesh, values: np.ndarray,
                           degree: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interpolate nodal `values` at the quadrature points of every element.

    Returns (vals (M, Q), weights (Q,), points) where points are the physical
    quadrature locations, shape (M, Q) in 1d and (M, Q, 2) in 2d.
    """
    els = mesh.elements
    if mesh.dim == 1:
        xi, w = quadrature.interval_rule(degree)
        shape = _shape_1d(xi)
        nodal = values[els]                       # (M, 2)
        vals = nodal @ shape.T                    # (M, Q)
        xl = mesh.nodes[els[:, 0]][:, None]
        xr = mesh.nodes[els[:, 1]][:, None]
        pts = xl * (1.0 - xi)[None, :] + xr * xi[None, :]
        return vals, w, pts
    bary, w = quadrature.triangle_rule(degree)
    nodal = values[els]                           # (M, 3)
    vals = nodal @ bary.T                         # (M, Q)
    pts = np.einsum("qa,mad->mqd", bary, mesh.nodes[els])
    return vals, w, pts


def _check_finite(arr: np.ndarray, what: str) -> None:
    if np.isfinite(arr).all():
        return
    bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
    raise NonFiniteEvaluationError(bad, what)


# ---------------------------------------------------------------------------
# assembly of the linearized systems
# ---------------------------------------------------------------------------

class NewtonOperator:
    """Assembled linearization at a fixed iterate.

    Holds the matrix of the bilinear form eps*(grad w, grad v) - (f'(u) w, v)
    over the free nodes and builds the step-size-dependent right-hand sides
    a(u; u, v) - t * l(u; v) with the Dirichlet columns eliminated. The matrix
    is independent of the step size, so one factorization serves every t.
    """

    def __init__(self, mesh: Mesh, problem, u: FeFunction):
        if u.mesh is not mesh:
            raise GenerationMismatchError("iterate is not bound to this mesh")
        self.mesh = mesh
        self.problem = problem
        self.u = u
        eps = problem.epsilon
        degree = 5

        u_q, w, _ = element_values_at_quad(mesh, u.values, degree)
        with np.errstate(over="ignore", invalid="ignore"):
            f_q = problem.f(u_q)
            fp_q = problem.fprime(u_q)
        _check_finite(f_q, "f")
        _check_finite(fp_q, "f'")

        els = mesh.elements
        n = mesh.node_count
        if mesh.dim == 1:
            h = element_measures(mesh)
            xi, _ = quadrature.interval_rule(degree)
            shape = _shape_1d(xi)
            mass_local = np.einsum("q,mq,qa,qb->mab", w, fp_q, shape, shape)
            mass_local *= h[:, None, None]
            stiff_base = np.array([[1.0, -1.0], [-1.0, 1.0]])
            stiff_local = (eps / h)[:, None, None] * stiff_base[None]
            load_local = np.einsum("q,mq,qa->ma", w, f_q, shape) * h[:, None]
        else:
            grads, area = _triangle_gradients(mesh)
            bary, _ = quadrature.triangle_rule(degree)
            mass_local = np.einsum("q,mq,qa,qb->mab", w, fp_q, bary, bary)
            mass_local *= area[:, None, None]
            stiff_local = eps * area[:, None, None] * np.einsum(
                "mad,mbd->mab", grads, grads)
            load_local = np.einsum("q,mq,qa->ma", w, f_q, bary) * area[:, None]

        nloc = els.shape[1]
        rows = np.repeat(els, nloc, axis=1).ravel()
        cols = np.tile(els, (1, nloc)).ravel()
        a_full = sp.coo_matrix(
            ((stiff_local - mass_local).ravel(), (rows, cols)),
            shape=(n, n)).tocsr()
        stiffness = sp.coo_matrix(
            (stiff_local.ravel(), (rows, cols)), shape=(n, n)).tocsr()

        load = np.zeros(n)
        np.add.at(load, els.ravel(), load_local.ravel())
        # residual functional l(u; phi_i) = eps (u', phi_i') - (f(u), phi_i)
        self.residual_full = stiffness @ u.values - load

        self.free = mesh.free_nodes()
        self.boundary = mesh.boundary_nodes
        self.g = dirichlet_values(mesh, problem)
        self.a_full = a_full
        self.matrix = a_full[self.free][:, self.free].tocsr()
        self._bc_shift = a_full[self.free][:, self.boundary] @ self.g
        self._r0 = (a_full @ u.values)[self.free]
        self._r1 = self.residual_full[self.free]

    def rhs(self, t: float) -> np.ndarray:
        return self._r0 - t * self._r1 - self._bc_shift

    def system(self, t: float) -> LinearSystem:
        return LinearSystem(matrix=self.matrix, rhs=self.rhs(t),
                            free=self.free, mesh=self.mesh,
                            dirichlet_values=self.g)

    def complete(self, x_free: np.ndarray) -> FeFunction:
        """Expand a free-node solution to a full nodal vector."""
        vals = np.empty(self.mesh.node_count)
        vals[self.free] = x_free
        vals[self.boundary] = self.g
        return FeFunction(self.mesh, vals)


def assemble_newton_system(mesh: Mesh, problem, u_n: FeFunction,
                           t: float) -> LinearSystem:
    """Linearized step system at iterate `u_n` with step size `t` in (0, 1]."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"step size must lie in (0, 1], got {t}")
    return NewtonOperator(mesh, problem, u_n).system(t)


def solve_step(system: LinearSystem) -> FeFunction:
    """Solve a step system and re-attach the Dirichlet values."""
    x = linsolve.factor_solve(system.matrix, system.rhs)
    vals = np.empty(system.mesh.node_count)
    vals[system.free] = x
    vals[system.mesh.boundary_nodes] = system.dirichlet_values
    return FeFunction(system.mesh, vals)


def residual_vector(mesh: Mesh, problem, u: FeFunction) -> np.ndarray:
    """Discrete residual l(u; phi_i) at the free nodes."""
    op = NewtonOperator(mesh, problem, u)
    return op.residual_full[op.free]


def shifted_iterate(u_n: FeFunction, u_next: FeFunction,
                    t: float) -> FeFunction:
    """Combine u_next - (1 - t) * u_n nodally.

    The combination is applied at every node; a Dirichlet node thus carries t
    times its prescribed value. Overwriting the boundary with the unscaled
    data instead would put an O(1) kink inside the boundary elements whenever
    t < 1 and the data is nonzero, and the flux-jump indicator would grow
    without bound under refinement there.
    """
    u_n._require_same_mesh(u_next)
    return FeFunction(u_n.mesh, u_next.values - (1.0 - t) * u_n.values)


# ---------------------------------------------------------------------------
# norms, evaluation, prolongation
# ---------------------------------------------------------------------------

def energy_norm(v, eps: float, order: int = 2) -> float:
    """eps-weighted energy norm (eps ||grad v||^2 + ||v||^2)^(1/2).

    `v` is either an FeFunction or an ExactDifference. Elementwise Gauss
    quadrature exact to at least degree `order`; order >= 2 integrates pure
    P1 functions exactly.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if isinstance(v, ExactDifference):
        return np.sqrt(_difference_norm2(v, eps, max(order, 2)))
    return np.sqrt(_fe_norm2(v, eps, max(order, 2)))


def _fe_norm2(v: FeFunction, eps: float, degree: int) -> float:
    mesh = v.mesh
    measures = element_measures(mesh)
    vals, w, _ = element_values_at_quad(mesh, v.values, degree)
    l2 = float(((vals ** 2) @ w) @ measures)
    if mesh.dim == 1:
        slopes = np.diff(v.values[mesh.elements], axis=1)[:, 0] / measures
        h1 = float((slopes ** 2) @ measures)
    else:
        grads, area = _triangle_gradients(mesh)
        gv = np.einsum("ma,mad->md", v.values[mesh.elements], grads)
        h1 = float((gv ** 2).sum(axis=1) @ area)
    return eps * h1 + l2


def _difference_norm2(diff: ExactDifference, eps: float, degree: int) -> float:
    v = diff.fe
    mesh = v.mesh
    measures = element_measures(mesh)
    vals, w, pts = element_values_at_quad(mesh, v.values, degree)
    if mesh.dim == 1:
        exact_vals = diff.value(pts)
        exact_grad = diff.gradient(pts)
        slopes = np.diff(v.values[mesh.elements], axis=1)[:, 0] / measures
        dval = exact_vals - vals
        dgrad = exact_grad - slopes[:, None]
        l2 = float(((dval ** 2) @ w) @ measures)
        h1 = float(((dgrad ** 2) @ w) @ measures)
        return eps * h1 + l2
    flat = pts.reshape(-1, 2)
    exact_vals = diff.value(flat).reshape(vals.shape)
    exact_grad = diff.gradient(flat).reshape(pts.shape)
    grads, area = _triangle_gradients(mesh)
    gv = np.einsum("ma,mad->md", v.values[mesh.elements], grads)
    dval = exact_vals - vals
    dgrad = exact_grad - gv[:, None, :]
    l2 = float(((dval ** 2) @ w) @ area)
    h1 = float((np.einsum("mqd,mqd,q->m", dgrad, dgrad, w)) @ area)
    return eps * h1 + l2


def prolongate(v: FeFunction, pmap: ProlongationMap) -> FeFunction:
    """Transfer nodal values to a refined mesh by midpoint interpolation."""
    if v.mesh is not pmap.source:
        raise GenerationMismatchError(
            "function is not bound to the map's source mesh")
    old = v.values
    new = 0.5 * (old[pmap.parents[:, 0]] + old[pmap.parents[:, 1]]) \
        if pmap.parents.size else np.empty(0)
    return FeFunction(pmap.target, np.concatenate([old, new]))


def evaluate(v: FeFunction, point):
    """Evaluate at a single point or an array of points inside the domain."""
    mesh = v.mesh
    pts = np.atleast_1d(np.asarray(point, dtype=float)) if mesh.dim == 1 \
        else np.atleast_2d(np.asarray(point, dtype=float))
    if mesh.dim == 1:
        out = _evaluate_1d(v, pts)
    else:
        out = np.array([_evaluate_2d(v, p) for p in pts])
    if np.isscalar(point) or (mesh.dim == 2 and np.asarray(point).ndim == 1):
        return float(out[0])
    return out


def _evaluate_1d(v: FeFunction, xs: np.ndarray) -> np.ndarray:
    mesh = v.mesh
    lefts = mesh.nodes[mesh.elements[:, 0]]
    rights = mesh.nodes[mesh.elements[:, 1]]
    order = np.argsort(lefts)
    lo, hi = lefts[order].min(), rights.max()
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    if np.any(xs < lo - tol) or np.any(xs > hi + tol):
        raise ValueError("point outside the domain")
    idx = np.clip(np.searchsorted(lefts[order], xs, side="right") - 1,
                  0, order.size - 1)
    els = order[idx]
    xl, xr = lefts[els], rights[els]
    lam = np.clip((xs - xl) / (xr - xl), 0.0, 1.0)
    nodal = v.values[mesh.elements[els]]
    return nodal[:, 0] * (1.0 - lam) + nodal[:, 1] * lam


def _evaluate_2d(v: FeFunction, p: np.ndarray) -> float:
    mesh = v.mesh
    corners = mesh.nodes[mesh.elements]
    p0, p1, p2 = corners[:, 0], corners[:, 1], corners[:, 2]
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0]))
    dp = p[None, :] - p0
    l1 = (dp[:, 0] * (p2[:, 1] - p0[:, 1])
          - dp[:, 1] * (p2[:, 0] - p0[:, 0])) / det
    l2 = (dp[:, 1] * (p1[:, 0] - p0[:, 0])
          - dp[:, 0] * (p1[:, 1] - p0[:, 1])) / det
    l0 = 1.0 - l1 - l2
    inside = (l0 >= -1e-12) & (l1 >= -1e-12) & (l2 >= -1e-12)
    hits = np.flatnonzero(inside)
    if hits.size == 0:
        raise ValueError(f"point {tuple(p)} outside the domain")
    e = hits[0]
    lam = np.array([l0[e], l1[e], l2[e]])
    return float(v.values[mesh.elements[e]] @ lam)


def gradient(v: FeFunction, element: int):
    """Constant gradient of `v` on one element (scalar in 1d, (2,) in 2d)."""
    mesh = v.mesh
    if mesh.dim == 1:
        l, r = mesh.elements[element]
        return float((v.values[r] - v.values[l])
                     / (mesh.nodes[r] - mesh.nodes[l]))
    grads, _ = _triangle_gradients(mesh)
    return v.values[mesh.elements[element]] @ grads[element]


def element_gradients(v: FeFunction) -> np.ndarray:
    """Per-element gradient, shape (M,) in 1d and (M, 2) in 2d."""
    mesh = v.mesh
    if mesh.dim == 1:
        return np.diff(v.values[mesh.elements], axis=1)[:, 0] \
            / element_measures(mesh)
    grads, _ = _triangle_gradients(mesh)
    return np.einsum("ma,mad->md", v.values[mesh.elements], grads)


def true_energy_error(u_h: FeFunction, problem,
                      order: int | None = None) -> float:
    """Energy distance between `u_h` and the problem's exact solution.

    Defaults to degree-9 quadrature in 1d and the maximum available
    degree-5 rule in 2d.
    """
    if problem.exact is None:
        raise ValueError("problem has no exact solution")
    if order is None:
        order = 9 if u_h.mesh.dim == 1 else 5
    diff = ExactDifference(fe=u_h, value=problem.exact.value,
                           gradient=problem.exact.gradient)
    return energy_norm(diff, problem.epsilon, order=order)


def coercivity_margin(problem, fprime_sup: float | None = None) -> float:
    """Diagnostic margin eps / C_P^2 - sup f'.

    A positive margin guarantees the linearized forms are coercive for every
    iterate; the singularly perturbed benchmark runs typically violate it,
    which is why the solver never assumes definiteness. When `fprime_sup` is
    not given, f' is sampled on [-4, 4].
    """
    if fprime_sup is None:
        fprime_sup = float(np.max(problem.fprime(np.linspace(-4.0, 4.0, 2001))))
    c_p = problem.domain.poincare_constant()
    return problem.epsilon / c_p ** 2 - fprime_sup
