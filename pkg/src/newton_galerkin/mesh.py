"""Simplicial meshes in 1d and 2d with conforming bisection refinement.

A mesh is immutable once built; refinement returns a new mesh together with a
prolongation map for transferring nodal vectors. In 2d, refinement is
newest-vertex bisection with recursive conforming closure: each element row
``(a, b, c)`` stores its bisection edge as ``(a, b)`` and its newest vertex as
``c``. The initial bisection edge of every element is its longest edge, ties
broken by the lexicographically smallest node-index pair, so mesh hierarchies
are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError


@dataclass(frozen=True)
class Mesh:
    """Conforming simplicial partition of an interval or a polygon.

    Attributes
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    nodes : ndarray
        Node coordinates, shape (N,) in 1d and (N, 2) in 2d.
    elements : ndarray of int
        Node indices per element, shape (M, dim + 1). In 2d the first two
        entries of a row form the element's bisection edge.
    interior_edges : ndarray of int
        1d: indices of interior nodes, shape (K,). 2d: node pairs of interior
        edges, shape (K, 2).
    edge_elements : ndarray of int
        The two elements adjacent to each interior edge, shape (K, 2).
    boundary_nodes : ndarray of int
        Sorted indices of the nodes on the domain boundary.
    parent_elements : ndarray of int
        For each element, its parent's index in the previous generation
        (-1 on a freshly constructed mesh).
    generation : int
        Refinement counter, 0 for a freshly constructed mesh.
    """

    dim: int
    nodes: np.ndarray
    elements: np.ndarray
    interior_edges: np.ndarray
    edge_elements: np.ndarray
    boundary_nodes: np.ndarray
    parent_elements: np.ndarray
    generation: int = 0

    def __post_init__(self):
        for arr in (self.nodes, self.elements, self.interior_edges,
                    self.edge_elements, self.boundary_nodes,
                    self.parent_elements):
            arr.flags.writeable = False

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    @property
    def element_count(self) -> int:
        return self.elements.shape[0]

    def free_nodes(self) -> np.ndarray:
        """Indices of the non-Dirichlet (interior) nodes, sorted."""
        return np.setdiff1d(np.arange(self.node_count), self.boundary_nodes)

    @property
    def dof_count(self) -> int:
        return self.node_count - self.boundary_nodes.size


@dataclass(frozen=True)
class SizeData:
    """Element diameters and edge length scales of a mesh."""

    h_T: np.ndarray
    h_E: np.ndarray


@dataclass(frozen=True)
class ProlongationMap:
    """Nodal transfer from a mesh to its refinement.

    Old nodes keep their index and value; each appended node is the midpoint
    of the parent edge ``(parents[i, 0], parents[i, 1])`` and receives the
    mean of the two parent values.
    """

    source: Mesh
    target: Mesh
    parents: np.ndarray = field(default_factory=lambda: np.empty((0, 2), int))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def interval_mesh(points) -> Mesh:
    """Mesh of consecutive intervals over strictly increasing `points`."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size < 2:
        raise MeshError("an interval mesh needs at least two points")
    if not np.all(np.diff(pts) > 0):
        raise MeshError("interval mesh points must be strictly increasing")
    n = pts.size - 1
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return _build_interval(pts, elements, generation=0,
                           parents=np.full(n, -1))


def uniform_interval(a: float, b: float, n: int) -> Mesh:
    """Uniform partition of (a, b) into n elements."""
    if not a < b:
        raise MeshError(f"need a < b, got a={a}, b={b}")
    if n < 1:
        raise MeshError(f"need at least one element, got n={n}")
    return interval_mesh(np.linspace(a, b, n + 1))


def uniform_square(n: int) -> Mesh:
    """2n^2 congruent triangles on the unit square from an n x n grid.

    Every grid cell is split along the diagonal from its lower-left to its
    upper-right corner.
    """
    if n < 1:
        raise MeshError(f"need at least one cell per side, got n={n}")
    side = np.linspace(0.0, 1.0, n + 1)
    xg, yg = np.meshgrid(side, side)
    nodes = np.column_stack([xg.ravel(), yg.ravel()])

    def nid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            v00, v10 = nid(i, j), nid(i + 1, j)
            v01, v11 = nid(i, j + 1), nid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    elements = np.asarray(tris, dtype=int)
    return triangle_mesh(nodes, elements)


def triangle_mesh(nodes, elements) -> Mesh:
    """Build a 2d mesh from raw node coordinates and element connectivity.

    Each element is reordered so that its longest edge (ties broken by the
    smaller sorted node-index pair) becomes the bisection edge.
    """
    nodes = np.asarray(nodes, dtype=float)
    elements = np.asarray(elements, dtype=int)
    if nodes.ndim != 2 or nodes.shape[1] != 2:
        raise MeshError("2d nodes must have shape (N, 2)")
    if elements.ndim != 2 or elements.shape[1] != 3:
        raise MeshError("2d elements must have shape (M, 3)")
    normalized = np.empty_like(elements)
    for e, tri in enumerate(elements):
        edges = [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
        keyed = []
        for p, q in edges:
            lo, hi = (p, q) if p < q else (q, p)
            keyed.append((-np.linalg.norm(nodes[p] - nodes[q]), lo, hi))
        _, lo, hi = min(keyed)
        c = [v for v in tri if v != lo and v != hi]
        normalized[e] = (lo, hi, c[0])
    return _build_triangles(nodes, normalized, generation=0,
                            parents=np.full(elements.shape[0], -1))


# ---------------------------------------------------------------------------
# internal builders (adjacency, boundary detection)
# ---------------------------------------------------------------------------

def _build_interval(nodes, elements, generation, parents) -> Mesh:
    n_nodes = nodes.shape[0]
    adjacency = [[] for _ in range(n_nodes)]
    lengths = nodes[elements[:, 1]] - nodes[elements[:, 0]]
    if np.any(lengths <= 0):
        raise MeshError("interval element with nonpositive length")
    for e, (l, r) in enumerate(elements):
        adjacency[l].append(e)
        adjacency[r].append(e)
    counts = np.array([len(a) for a in adjacency])
    if counts.min() < 1 or counts.max() > 2:
        raise MeshError("interval mesh is not a chain of elements")
    boundary = np.flatnonzero(counts == 1)
    if boundary.size != 2:
        raise MeshError("interval mesh must have exactly two boundary nodes")
    interior = np.flatnonzero(counts == 2)
    edge_elements = np.empty((interior.size, 2), dtype=int)
    for k, node in enumerate(interior):
        left, right = adjacency[node]
        # store (left element, right element) by coordinate
        if nodes[elements[left][0]] > nodes[elements[right][0]]:
            left, right = right, left
        edge_elements[k] = (left, right)
    return Mesh(dim=1, nodes=nodes, elements=elements,
                interior_edges=interior, edge_elements=edge_elements,
                boundary_nodes=np.sort(boundary),
                parent_elements=np.asarray(parents, dtype=int),
                generation=generation)


def _edge_registry(elements):
    """Map sorted node pairs to edge ids; return per-element edge ids.

    Element edges are ordered (a,b), (b,c), (c,a) so column 0 is always the
    bisection edge.
    """
    edge_ids: dict[tuple[int, int], int] = {}
    el_edges = np.empty((elements.shape[0], 3), dtype=int)
    edge_nodes = []
    for e, (a, b, c) in enumerate(elements):
        for k, (p, q) in enumerate(((a, b), (b, c), (c, a))):
            key = (p, q) if p < q else (q, p)
            eid = edge_ids.get(key)
            if eid is None:
                eid = len(edge_nodes)
                edge_ids[key] = eid
                edge_nodes.append(key)
            el_edges[e, k] = eid
    return np.asarray(edge_nodes, dtype=int), el_edges


def _build_triangles(nodes, elements, generation, parents) -> Mesh:
    edge_nodes, el_edges = _edge_registry(elements)
    n_edges = edge_nodes.shape[0]
    adj = np.full((n_edges, 2), -1, dtype=int)
    count = np.zeros(n_edges, dtype=int)
    for e in range(elements.shape[0]):
        for eid in el_edges[e]:
            if count[eid] == 2:
                raise MeshError(f"edge {tuple(edge_nodes[eid])} shared by "
                                "more than two elements")
            adj[eid, count[eid]] = e
            count[eid] += 1
    areas = _triangle_areas(nodes, elements)
    if np.any(areas <= 0):
        raise MeshError("degenerate triangle with nonpositive area")
    interior_mask = count == 2
    boundary_edges = edge_nodes[~interior_mask]
    boundary = np.unique(boundary_edges)
    return Mesh(dim=2, nodes=nodes, elements=elements,
                interior_edges=edge_nodes[interior_mask],
                edge_elements=adj[interior_mask],
                boundary_nodes=boundary,
                parent_elements=np.asarray(parents, dtype=int),
                generation=generation)


def _triangle_areas(nodes, elements) -> np.ndarray:
    p0 = nodes[elements[:, 0]]
    d1 = nodes[elements[:, 1]] - p0
    d2 = nodes[elements[:, 2]] - p0
    return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def element_measures(mesh: Mesh) -> np.ndarray:
    """Length (1d) or area (2d) per element."""
    if mesh.dim == 1:
        return mesh.nodes[mesh.elements[:, 1]] - mesh.nodes[mesh.elements[:, 0]]
    return _triangle_areas(mesh.nodes, mesh.elements)


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

def refine(mesh: Mesh, marked) -> tuple[Mesh, ProlongationMap]:
    """Bisect every marked element at least once, keeping the mesh conforming.

    1d meshes use midpoint bisection. 2d meshes use newest-vertex bisection:
    the bisection edges of the marked elements are marked, the marking is
    closed so every element with a marked edge also has its own bisection
    edge marked, and each element is then split into 2-4 children according
    to which of its edges carry a midpoint.

    Returns the refined mesh (generation incremented) and the prolongation
    map. Marking nothing returns an identical-geometry mesh.
    """
    marked = np.unique(np.asarray(list(marked), dtype=int)) \
        if not isinstance(marked, np.ndarray) else np.unique(marked.astype(int))
    if marked.size and (marked.min() < 0 or marked.max() >= mesh.element_count):
        raise MeshError("marked set contains an invalid element index")
    if mesh.dim == 1:
        return _refine_interval(mesh, marked)
    return _refine_triangles(mesh, marked)


def _refine_interval(mesh, marked):
    is_marked = np.zeros(mesh.element_count, dtype=bool)
    is_marked[marked] = True
    nodes = list(mesh.nodes)
    new_elements = []
    new_parents = []
    parents = []
    for e, (l, r) in enumerate(mesh.elements):
        if is_marked[e]:
            mid = len(nodes)
            nodes.append(0.5 * (mesh.nodes[l] + mesh.nodes[r]))
            parents.append((l, r))
            new_elements.append((l, mid))
            new_elements.append((mid, r))
            new_parents += [e, e]
        else:
            new_elements.append((l, r))
            new_parents.append(e)
    refined = _build_interval(np.asarray(nodes, dtype=float),
                              np.asarray(new_elements, dtype=int),
                              generation=mesh.generation + 1,
                              parents=new_parents)
    pmap = ProlongationMap(source=mesh, target=refined,
                           parents=np.asarray(parents, int).reshape(-1, 2))
    return refined, pmap


def _refine_triangles(mesh, marked):
    edge_nodes, el_edges = _edge_registry(mesh.elements)
    n_edges = edge_nodes.shape[0]
    edge_marked = np.zeros(n_edges, dtype=bool)
    edge_marked[el_edges[marked, 0]] = True
    # conforming closure: an element with any marked edge must have its
    # bisection edge marked as well
    while True:
        need = edge_marked[el_edges].any(axis=1) & ~edge_marked[el_edges[:, 0]]
        if not need.any():
            break
        edge_marked[el_edges[need, 0]] = True

    split_edges = np.flatnonzero(edge_marked)
    midpoint_of = np.full(n_edges, -1, dtype=int)
    midpoint_of[split_edges] = mesh.node_count + np.arange(split_edges.size)
    parents = edge_nodes[split_edges]
    mids = 0.5 * (mesh.nodes[parents[:, 0]] + mesh.nodes[parents[:, 1]])
    nodes = np.vstack([mesh.nodes, mids])

    new_elements = []
    new_parents = []
    for e, (a, b, c) in enumerate(mesh.elements):
        m0 = midpoint_of[el_edges[e, 0]]
        m1 = midpoint_of[el_edges[e, 1]]
        m2 = midpoint_of[el_edges[e, 2]]
        if m0 < 0:
            children = [(a, b, c)]
        elif m1 < 0 and m2 < 0:
            children = [(c, a, m0), (b, c, m0)]
        elif m1 >= 0 and m2 < 0:
            children = [(c, a, m0), (m0, b, m1), (c, m0, m1)]
        elif m1 < 0 and m2 >= 0:
            children = [(m0, c, m2), (a, m0, m2), (b, c, m0)]
        else:
            children = [(m0, c, m2), (a, m0, m2), (m0, b, m1), (c, m0, m1)]
        new_elements += children
        new_parents += [e] * len(children)
    refined = _build_triangles(nodes, np.asarray(new_elements, dtype=int),
                               generation=mesh.generation + 1,
                               parents=new_parents)
    pmap = ProlongationMap(source=mesh, target=refined,
                           parents=parents.reshape(-1, 2))
    return refined, pmap


# ---------------------------------------------------------------------------
# size data, dumping, validation
# ---------------------------------------------------------------------------

def size_data(mesh: Mesh) -> SizeData:
    """Element diameters h_T and edge scales h_E.

    In 1d, h_E at an interior node is the mean of the two adjacent element
    lengths; in 2d it is the edge length.
    """
    if mesh.dim == 1:
        h_t = element_measures(mesh)
        h_e = 0.5 * (h_t[mesh.edge_elements[:, 0]]
                     + h_t[mesh.edge_elements[:, 1]])
    else:
        corners = mesh.nodes[mesh.elements]          # (M, 3, 2)
        d01 = np.linalg.norm(corners[:, 0] - corners[:, 1], axis=1)
        d12 = np.linalg.norm(corners[:, 1] - corners[:, 2], axis=1)
        d20 = np.linalg.norm(corners[:, 2] - corners[:, 0], axis=1)
        h_t = np.maximum(np.maximum(d01, d12), d20)
        h_e = np.linalg.norm(mesh.nodes[mesh.interior_edges[:, 0]]
                             - mesh.nodes[mesh.interior_edges[:, 1]], axis=1)
    return SizeData(h_T=h_t, h_E=h_e)


def dump_text(mesh: Mesh) -> str:
    """Plain-text listing: one node per line, then one element per line."""
    lines = []
    if mesh.dim == 1:
        lines += [f"{x:.17g}" for x in mesh.nodes]
    else:
        lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.nodes]
    lines += [" ".join(str(v) for v in el) for el in mesh.elements]
    return "\n".join(lines) + "\n"


def min_angle(mesh: Mesh) -> float:
    """Smallest interior angle over all triangles, in radians."""
    if mesh.dim != 2:
        raise MeshError("angles are defined for 2d meshes only")
    corners = mesh.nodes[mesh.elements]
    smallest = np.inf
    for i in range(3):
        u = corners[:, (i + 1) % 3] - corners[:, i]
        v = corners[:, (i + 2) % 3] - corners[:, i]
        cosang = (u * v).sum(axis=1) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        smallest = min(smallest, np.arccos(np.clip(cosang, -1, 1)).min())
    return float(smallest)


def validate(mesh: Mesh) -> None:
    """Raise MeshError if a structural invariant is violated."""
    if np.any(element_measures(mesh) <= 0):
        raise MeshError("element with nonpositive measure")
    if mesh.dim == 1:
        counts = np.zeros(mesh.node_count, dtype=int)
        for l, r in mesh.elements:
            counts[l] += 1
            counts[r] += 1
        if not np.array_equal(np.flatnonzero(counts == 1),
                              mesh.boundary_nodes):
            raise MeshError("boundary nodes do not match element adjacency")
        if not np.array_equal(np.sort(mesh.interior_edges),
                              np.flatnonzero(counts == 2)):
            raise MeshError("interior node list does not match adjacency")
        return
    seen: dict[tuple[int, int], int] = {}
    for a, b, c in mesh.elements:
        for p, q in ((a, b), (b, c), (c, a)):
            key = (p, q) if p < q else (q, p)
            seen[key] = seen.get(key, 0) + 1
    if any(v > 2 for v in seen.values()):
        raise MeshError("hanging node: an edge is shared by > 2 elements")
    boundary_edges = {k for k, v in seen.items() if v == 1}
    expected = np.unique(np.asarray(sorted(boundary_edges), int))
    if not np.array_equal(expected, mesh.boundary_nodes):
        raise MeshError("boundary nodes do not match single-count edges")
    interior = {k for k, v in seen.items() if v == 2}
    stored = {tuple(sorted(e)) for e in mesh.interior_edges}
    if interior != stored:
        raise MeshError("interior edge list does not match adjacency")
