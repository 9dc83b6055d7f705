import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newton_galerkin.errors import MeshError
from newton_galerkin.fespace import FeFunction, prolongate
from newton_galerkin.mesh import (dump_text, element_measures, interval_mesh,
                                  min_angle, refine, size_data, triangle_mesh,
                                  uniform_interval, uniform_square, validate)


def test_uniform_interval_basic():
    mesh = uniform_interval(0.0, 1.0, 4)
    assert np.allclose(np.sort(mesh.nodes), [0.0, 0.25, 0.5, 0.75, 1.0])
    assert mesh.element_count == 4
    assert mesh.interior_edges.size == 3
    assert set(mesh.boundary_nodes) == {0, 4}
    validate(mesh)


def test_uniform_interval_single_element():
    mesh = uniform_interval(0.0, 1.0, 1)
    assert mesh.element_count == 1
    assert mesh.interior_edges.size == 0
    assert mesh.dof_count == 0


def test_uniform_interval_h_edge_is_mean():
    mesh = uniform_interval(-1.0, 1.0, 2)
    interior = mesh.interior_edges[0]
    assert mesh.nodes[interior] == pytest.approx(0.0)
    assert size_data(mesh).h_E[0] == pytest.approx(1.0)


def test_uniform_interval_rejects_bad_input():
    with pytest.raises(MeshError):
        uniform_interval(1.0, 0.0, 4)
    with pytest.raises(MeshError):
        uniform_interval(0.0, 1.0, 0)


def test_uniform_square_counts():
    one = uniform_square(1)
    assert one.node_count == 4
    assert one.element_count == 2
    assert one.interior_edges.shape == (1, 2)
    two = uniform_square(2)
    assert two.node_count == 9
    assert two.element_count == 8
    validate(two)


def test_uniform_square_conforming():
    mesh = uniform_square(2)
    seen = {}
    for a, b, c in mesh.elements:
        for p, q in ((a, b), (b, c), (c, a)):
            key = tuple(sorted((p, q)))
            seen[key] = seen.get(key, 0) + 1
    interior = {tuple(sorted(e)) for e in mesh.interior_edges}
    for key, count in seen.items():
        assert count == (2 if key in interior else 1)


def test_uniform_square_rejects_zero():
    with pytest.raises(MeshError):
        uniform_square(0)


def test_refine_1d_midpoint():
    mesh = interval_mesh([0.0, 0.5, 1.0])
    marked = [e for e, el in enumerate(mesh.elements)
              if np.isclose(mesh.nodes[el].max(), 0.5)]
    refined, _ = refine(mesh, marked)
    assert sorted(refined.nodes.tolist()) == pytest.approx([0.0, 0.25, 0.5, 1.0])
    assert refined.generation == mesh.generation + 1
    validate(refined)


def test_refine_empty_marked_is_geometry_noop():
    mesh = uniform_square(2)
    refined, pmap = refine(mesh, [])
    assert refined.node_count == mesh.node_count
    assert refined.element_count == mesh.element_count
    assert refined.generation == mesh.generation + 1
    assert pmap.parents.shape == (0, 2)


def test_refine_square_both_marked_hand_enumerated():
    # both triangles of the unit square share the diagonal (node 0)-(node 3)
    # as bisection edge; one bisection each inserts the midpoint (.5, .5) and
    # yields the four triangles {0,1,4}, {1,3,4}, {0,2,4}, {2,3,4}
    mesh = uniform_square(1)
    refined, pmap = refine(mesh, [0, 1])
    assert refined.node_count == 5
    assert refined.element_count == 4
    assert np.allclose(refined.nodes[4], [0.5, 0.5])
    tri_sets = {frozenset(el.tolist()) for el in refined.elements}
    assert tri_sets == {frozenset(s) for s in ((0, 1, 4), (1, 3, 4),
                                               (0, 2, 4), (2, 3, 4))}
    assert pmap.parents.tolist() == [[0, 3]]
    validate(refined)


def test_refine_rejects_invalid_index():
    mesh = uniform_square(1)
    with pytest.raises(MeshError):
        refine(mesh, [7])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=10 ** 6),
                min_size=1, max_size=3))
def test_area_preserved_under_refinement_2d(seeds):
    mesh = uniform_square(2)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        marked = rng.choice(mesh.element_count,
                            size=max(1, mesh.element_count // 3),
                            replace=False)
        mesh, _ = refine(mesh, marked)
    validate(mesh)
    assert element_measures(mesh).sum() == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=10 ** 6),
                min_size=1, max_size=4))
def test_length_preserved_under_refinement_1d(seeds):
    mesh = uniform_interval(0.0, 2.0, 3)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        marked = rng.choice(mesh.element_count,
                            size=max(1, mesh.element_count // 2),
                            replace=False)
        mesh, _ = refine(mesh, marked)
    validate(mesh)
    assert element_measures(mesh).sum() == pytest.approx(2.0, rel=1e-12)


def test_square_family_keeps_45_degree_angles():
    mesh = uniform_square(2)
    rng = np.random.default_rng(7)
    for _ in range(5):
        marked = rng.choice(mesh.element_count,
                            size=max(1, mesh.element_count // 4),
                            replace=False)
        mesh, _ = refine(mesh, marked)
    assert np.degrees(min_angle(mesh)) == pytest.approx(45.0, abs=1e-9)


def test_generic_mesh_angle_never_halves():
    nodes = np.array([[0.0, 0.0], [1.0, 0.1], [0.4, 0.9], [1.3, 1.0]])
    mesh = triangle_mesh(nodes, [[0, 1, 2], [1, 3, 2]])
    initial = min_angle(mesh)
    rng = np.random.default_rng(3)
    for _ in range(6):
        marked = rng.choice(mesh.element_count,
                            size=max(1, mesh.element_count // 3),
                            replace=False)
        mesh, _ = refine(mesh, marked)
        validate(mesh)
    assert min_angle(mesh) >= 0.5 * initial - 1e-12


def shape_regularity_ratio(mesh):
    corners = mesh.nodes[mesh.elements]
    d01 = np.linalg.norm(corners[:, 0] - corners[:, 1], axis=1)
    d12 = np.linalg.norm(corners[:, 1] - corners[:, 2], axis=1)
    d20 = np.linalg.norm(corners[:, 2] - corners[:, 0], axis=1)
    diameter = np.maximum(np.maximum(d01, d12), d20)
    perimeter = d01 + d12 + d20
    inradius = 2.0 * element_measures(mesh) / perimeter
    return (diameter / inradius).max()


def test_shape_regularity_bounded_across_refinements():
    nodes = np.array([[0.0, 0.0], [1.0, 0.1], [0.4, 0.9], [1.3, 1.0]])
    mesh = triangle_mesh(nodes, [[0, 1, 2], [1, 3, 2]])
    initial_ratio = shape_regularity_ratio(mesh)
    rng = np.random.default_rng(12)
    for _ in range(6):
        marked = rng.choice(mesh.element_count,
                            size=max(1, mesh.element_count // 3),
                            replace=False)
        mesh, _ = refine(mesh, marked)
    # bisection cycles through finitely many similarity classes, so the
    # ratio can grow past the initial value only by a fixed factor
    assert shape_regularity_ratio(mesh) <= 3.0 * initial_ratio


def test_prolongation_of_constant_is_constant():
    mesh = uniform_square(2)
    ones = FeFunction(mesh, np.ones(mesh.node_count))
    for _ in range(3):
        mesh, pmap = refine(mesh, np.arange(mesh.element_count)[::2])
        ones = prolongate(ones, pmap)
    assert np.allclose(ones.values, 1.0, atol=1e-15)


def test_size_data_examples():
    mesh = interval_mesh([0.0, 0.25, 1.0])
    sizes = size_data(mesh)
    assert sizes.h_T == pytest.approx([0.25, 0.75])
    assert sizes.h_E[0] == pytest.approx(0.5)

    tri = triangle_mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                        [[0, 1, 2]])
    assert size_data(tri).h_T[0] == pytest.approx(np.sqrt(2.0))

    uni = uniform_interval(0.0, 1.0, 4)
    assert np.allclose(size_data(uni).h_T, 0.25)


def test_size_data_edge_bounded_by_diameter_2d():
    mesh = uniform_square(3)
    for _ in range(3):
        mesh, _ = refine(mesh, np.arange(0, mesh.element_count, 3))
    sizes = size_data(mesh)
    h_t = sizes.h_T
    for k, (e1, e2) in enumerate(mesh.edge_elements):
        assert sizes.h_E[k] <= max(h_t[e1], h_t[e2]) + 1e-14


def test_refinement_genealogy():
    mesh = uniform_square(2)
    assert np.all(mesh.parent_elements == -1)
    refined, _ = refine(mesh, [0, 5])
    assert set(refined.parent_elements) == set(range(mesh.element_count))
    children_of_0 = np.sum(refined.parent_elements == 0)
    assert children_of_0 >= 2


def test_marked_elements_are_bisected():
    mesh = uniform_square(2)
    areas = element_measures(mesh)
    refined, _ = refine(mesh, [3])
    child_areas = element_measures(refined)[refined.parent_elements == 3]
    assert child_areas.max() <= areas[3] / 2 + 1e-15


def test_dump_text_roundtrippable():
    mesh = uniform_square(1)
    lines = dump_text(mesh).strip().splitlines()
    assert len(lines) == mesh.node_count + mesh.element_count
    coords = [tuple(map(float, ln.split())) for ln in lines[:4]]
    assert coords[0] == (0.0, 0.0)
    elements = [tuple(map(int, ln.split())) for ln in lines[4:]]
    assert all(len(el) == 3 for el in elements)

    line = interval_mesh([0.0, 1.0])
    text = dump_text(line).strip().splitlines()
    assert text == ["0", "1", "0 1"]


def test_mesh_arrays_are_immutable():
    mesh = uniform_square(1)
    with pytest.raises(ValueError):
        mesh.nodes[0, 0] = 3.0
