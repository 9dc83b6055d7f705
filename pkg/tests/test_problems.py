import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newton_galerkin.errors import MeshError
from newton_galerkin.fespace import FeFunction, residual_vector
from newton_galerkin.mesh import uniform_interval, uniform_square
from newton_galerkin.problems import (BUILTIN_PROBLEMS, first_integral,
                                      fisher, ginzburg_landau, initial_guess,
                                      linear_reaction, spike_profile)

SAMPLES = (-2.0, -1.0, 0.0, 0.5, 1.0, 2.0)


def mp_reference_value(x, eps):
    """High-precision reference solution of -eps u'' + u = 1, u(0)=u(1)=0."""
    with mpmath.workdps(50):
        root = mpmath.sqrt(mpmath.mpf(eps))
        return float(1 - mpmath.cosh((mpmath.mpf(x) - mpmath.mpf("0.5"))
                                     / root) / mpmath.cosh(1 / (2 * root)))


def test_linear_reaction_exact_midpoint_value():
    prob = linear_reaction(1.0)
    assert prob.exact.value(0.5) == pytest.approx(1.0 - 1.0 / math.cosh(0.5),
                                                  abs=1e-14)


def test_linear_reaction_boundary_values():
    prob = linear_reaction(0.37)
    assert abs(prob.exact.value(0.0)) <= 1e-10
    assert abs(prob.exact.value(1.0)) <= 1e-10


def test_linear_reaction_flat_interior_for_tiny_eps():
    prob = linear_reaction(1e-5)
    assert prob.exact.value(0.5) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("eps", [1.0, 1e-2, 1e-4])
def test_linear_reaction_exact_satisfies_ode(eps):
    # oracle: rebuild the closed form in 50-digit arithmetic, apply a
    # high-precision second difference, and check the strong residual; then
    # check the implementation against the high-precision values
    prob = linear_reaction(eps)
    xs = np.linspace(0.05, 0.95, 10)
    with mpmath.workdps(50):
        root = mpmath.sqrt(mpmath.mpf(eps))

        def u_mp(x):
            return 1 - mpmath.cosh((x - mpmath.mpf("0.5")) / root) \
                / mpmath.cosh(1 / (2 * root))

        h = mpmath.mpf("1e-10")
        for x in xs:
            xm = mpmath.mpf(float(x))
            second = (u_mp(xm + h) - 2 * u_mp(xm) + u_mp(xm - h)) / h ** 2
            residual = -mpmath.mpf(eps) * second + u_mp(xm) - 1
            assert abs(float(residual)) <= 1e-10
    for x in xs:
        assert prob.exact.value(x) == pytest.approx(
            mp_reference_value(x, eps), abs=1e-9)


def test_linear_reaction_gradient_matches_high_precision_difference():
    eps = 1e-2
    prob = linear_reaction(eps)
    with mpmath.workdps(50):
        root = mpmath.sqrt(mpmath.mpf(eps))

        def u_mp(x):
            return 1 - mpmath.cosh((x - mpmath.mpf("0.5")) / root) \
                / mpmath.cosh(1 / (2 * root))

        h = mpmath.mpf("1e-15")
        for x in (0.1, 0.5, 0.77):
            xm = mpmath.mpf(x)
            fd = float((u_mp(xm + h) - u_mp(xm - h)) / (2 * h))
            assert prob.exact.gradient(x) == pytest.approx(
                fd, rel=1e-9, abs=1e-12)


def test_linear_reaction_stable_deep_in_perturbation():
    prob = linear_reaction(1e-8)
    vals = prob.exact.value(np.linspace(0, 1, 101))
    assert np.isfinite(vals).all()
    assert vals.max() <= 1.0 + 1e-12


def test_fisher_equilibria_and_derivative():
    prob = fisher(0.1, -0.4, 0.5)
    assert prob.f(0.0) == 0.0
    assert prob.f(1.0) == 0.0
    assert prob.fprime(0.5) == 0.0
    assert prob.dirichlet(0.0) == -0.4
    assert prob.dirichlet(1.0) == 0.5
    assert prob.exact is None


def test_first_integral_definition_and_conservation():
    eps = 0.05
    assert first_integral(eps, 0.5, 2.0) == pytest.approx(
        eps * 4.0 - (2.0 / 3.0) * 0.125 + 0.25)
    # conserved along a high-accuracy trajectory of eps u'' + u - u^2 = 0
    from scipy.integrate import solve_ivp

    def rhs(x, y):
        return [y[1], (y[0] ** 2 - y[0]) / eps]

    sol = solve_ivp(rhs, (0.0, 0.5), [0.2, 0.0], rtol=1e-12, atol=1e-12,
                    dense_output=True)
    xs = np.linspace(0.0, 0.5, 20)
    values = sol.sol(xs)
    e = first_integral(eps, values[0], values[1])
    assert np.ptp(e) <= 1e-8 * max(1.0, np.abs(e).max())


def test_ginzburg_landau_structure():
    prob = ginzburg_landau(1e-3)
    assert prob.f(1.0) == 0.0
    assert prob.f(-1.0) == 0.0
    mesh = uniform_square(4)
    zero = FeFunction(mesh, np.zeros(mesh.node_count))
    assert np.abs(residual_vector(mesh, prob, zero)).max() == 0.0
    assert prob.exact is None


@settings(max_examples=50)
@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
def test_ginzburg_landau_odd_symmetry(u):
    prob = ginzburg_landau(0.5)
    assert prob.f(-u) == pytest.approx(-prob.f(u), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("name", sorted(BUILTIN_PROBLEMS))
def test_builtin_derivatives_match_finite_differences(name):
    factory = BUILTIN_PROBLEMS[name]
    prob = factory(0.01, -0.4, 0.5) if name == "fisher" else factory(0.01)
    for u in SAMPLES:
        step = 1e-6 * (1.0 + abs(u))
        fd = (prob.f(u + step) - prob.f(u - step)) / (2.0 * step)
        assert float(prob.fprime(u)) == pytest.approx(
            fd, rel=1e-6, abs=1e-6)
    prob.validate()


def test_exact_solution_consistent_with_dirichlet_data():
    for eps in (1.0, 1e-3):
        prob = linear_reaction(eps)
        for x in (0.0, 1.0):
            assert abs(prob.exact.value(x) - prob.dirichlet(x)) <= 1e-10


def test_constant_guess_applies_boundary_data():
    prob = ginzburg_landau(1e-3)
    mesh = uniform_square(3)
    guess = initial_guess(("const", -1.0), mesh, prob)
    free = mesh.free_nodes()
    assert np.all(guess.values[free] == -1.0)
    assert np.all(guess.values[mesh.boundary_nodes] == 0.0)


def test_sign_guess_values():
    prob = ginzburg_landau(1e-3)
    mesh = uniform_square(4)
    guess = initial_guess("sign_x2", mesh, prob)
    node = np.flatnonzero((mesh.nodes == [0.5, 0.75]).all(axis=1))[0]
    assert guess.values[node] == 1.0
    below = np.flatnonzero((mesh.nodes == [0.5, 0.25]).all(axis=1))[0]
    assert guess.values[below] == -1.0


def test_spike_guess_geometry():
    prob = fisher(2.5e-4, -0.4, 0.5)
    mesh = uniform_interval(0.0, 1.0, 60)
    guess = initial_guess("spike", mesh, prob, bumps=3)
    for center in (1.0 / 6.0, 0.5, 5.0 / 6.0):
        node = np.flatnonzero(np.isclose(mesh.nodes, center))[0]
        assert guess.values[node] == pytest.approx(1.0)
    for trough in (1.0 / 3.0, 2.0 / 3.0):
        node = np.flatnonzero(np.isclose(mesh.nodes, trough))[0]
        assert guess.values[node] == pytest.approx(0.0, abs=1e-12)
    assert guess.values[0] == -0.4
    assert guess.values[-1] == 0.5


def test_spike_profile_narrow_width_override():
    xs = np.linspace(0.0, 1.0, 2001)
    vals = spike_profile(xs, bumps=2, half_width=0.05)
    assert vals.max() == pytest.approx(1.0)
    assert vals[np.abs(xs - 0.5) < 0.1].max() == 0.0


def test_guess_dimension_mismatch():
    prob_1d = fisher(0.1, 0.0, 0.0)
    prob_2d = ginzburg_landau(0.1)
    with pytest.raises(MeshError):
        initial_guess("spike", uniform_square(2), prob_2d)
    with pytest.raises(MeshError):
        initial_guess("sign_x2", uniform_interval(0, 1, 4), prob_1d)
    with pytest.raises(ValueError):
        initial_guess("mystery", uniform_interval(0, 1, 4), prob_1d)


def test_epsilon_must_be_positive():
    with pytest.raises(ValueError):
        linear_reaction(0.0)
    with pytest.raises(ValueError):
        fisher(-1.0, 0.0, 0.0)
