import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efiefilt.errors import DegenerateElement, ParseError, TopologyError
from efiefilt.mesh import (
    TriangleMesh,
    generate_icosphere,
    generate_wing_body,
    load_mesh,
    write_off,
)


def test_icosahedron_counts(icosahedron):
    assert icosahedron.num_vertices == 12
    assert icosahedron.num_edges == 30
    assert icosahedron.num_triangles == 20


@pytest.mark.parametrize("subdiv", [0, 1, 2, 3])
def test_icosphere_counts(subdiv):
    mesh = generate_icosphere(subdiv, 1.0)
    assert mesh.num_vertices == 10 * 4**subdiv + 2
    assert mesh.num_edges == 30 * 4**subdiv
    assert mesh.num_triangles == 20 * 4**subdiv
    # closed-manifold identity and Euler characteristic
    assert 2 * mesh.num_edges == 3 * mesh.num_triangles
    assert mesh.num_vertices - mesh.num_edges + mesh.num_triangles == 2


@given(radius=st.floats(0.1, 50.0), subdiv=st.integers(0, 2))
@settings(max_examples=20, deadline=None)
def test_icosphere_radius_and_orientation(radius, subdiv):
    mesh = generate_icosphere(subdiv, radius)
    norms = np.linalg.norm(mesh.vertices, axis=1)
    assert np.all(np.abs(norms - radius) <= 1e-12 * radius)
    # outward normals
    assert np.all(np.einsum("fx,fx->f", mesh.normals, mesh.centroids) > 0)


def test_icosphere_guards():
    with pytest.raises(ValueError):
        generate_icosphere(8, 1.0)
    with pytest.raises(ValueError):
        generate_icosphere(-1, 1.0)
    with pytest.raises(ValueError):
        generate_icosphere(1, 0.0)


def test_edges_sorted_lexicographically(icosphere1):
    edges = icosphere1.edges
    assert np.all(edges[:, 0] < edges[:, 1])
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    assert np.array_equal(order, np.arange(len(edges)))


def test_edge_tris_orientation(icosphere1):
    # the plus triangle traverses the edge in sorted order, the minus one
    # opposite; every edge has exactly the two of them
    tris = icosphere1.triangles
    for e, (v0, v1) in enumerate(icosphere1.edges):
        tp, tm = icosphere1.edge_tris[e]
        fwd = [(a, b) for a, b in zip(tris[tp], np.roll(tris[tp], -1))]
        bwd = [(a, b) for a, b in zip(tris[tm], np.roll(tris[tm], -1))]
        assert (v0, v1) in fwd
        assert (v1, v0) in bwd


def test_off_round_trip(tmp_path, icosphere1):
    path = tmp_path / "s.off"
    write_off(icosphere1, path)
    loaded = load_mesh(path)
    assert np.array_equal(loaded.triangles, icosphere1.triangles)
    assert np.allclose(loaded.vertices, icosphere1.vertices, rtol=0, atol=0)


def test_load_deterministic(tmp_path, icosahedron):
    path = tmp_path / "i.off"
    write_off(icosahedron, path)
    a = load_mesh(path)
    b = load_mesh(path)
    assert np.array_equal(a.edges, b.edges)
    assert np.array_equal(a.edge_tris, b.edge_tris)


def test_open_surface_rejected(icosahedron):
    with pytest.raises(TopologyError, match="open"):
        TriangleMesh.from_arrays(icosahedron.vertices, icosahedron.triangles[:-1])


def test_torus_rejected():
    # structured torus grid: V - E + F = 0
    nu, nv = 8, 6
    verts = []
    for i in range(nu):
        for j in range(nv):
            u = 2 * np.pi * i / nu
            v = 2 * np.pi * j / nv
            r = 2.0 + 0.5 * np.cos(v)
            verts.append([r * np.cos(u), r * np.sin(u), 0.5 * np.sin(v)])
    tris = []
    for i in range(nu):
        for j in range(nv):
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            c = ((i + 1) % nu) * nv + (j + 1) % nv
            d = i * nv + (j + 1) % nv
            tris += [[a, b, c], [a, c, d]]
    with pytest.raises(TopologyError, match="V-E\\+F"):
        TriangleMesh.from_arrays(np.array(verts), np.array(tris))


def test_inconsistent_orientation_rejected(icosahedron):
    tris = np.array(icosahedron.triangles)
    tris[0] = tris[0][[0, 2, 1]]
    with pytest.raises(TopologyError, match="orientation"):
        TriangleMesh.from_arrays(icosahedron.vertices, tris)


def test_non_manifold_rejected(icosahedron):
    tris = np.vstack([icosahedron.triangles, icosahedron.triangles[:1]])
    with pytest.raises(TopologyError, match="non-manifold"):
        TriangleMesh.from_arrays(icosahedron.vertices, tris)


def test_degenerate_triangle_rejected(icosahedron):
    verts = np.array(icosahedron.vertices)
    # collapse vertex 0 onto vertex 1: triangles containing both lose area
    verts[0] = verts[1]
    with pytest.raises(DegenerateElement):
        TriangleMesh.from_arrays(verts, icosahedron.triangles)


def test_unused_vertex_rejected(icosahedron):
    verts = np.vstack([icosahedron.vertices, [[5.0, 5.0, 5.0]]])
    with pytest.raises(TopologyError, match="not referenced"):
        TriangleMesh.from_arrays(verts, icosahedron.triangles)


def test_repeated_vertex_rejected(icosahedron):
    tris = np.array(icosahedron.triangles)
    tris[0, 1] = tris[0, 0]
    with pytest.raises(TopologyError, match="repeated"):
        TriangleMesh.from_arrays(icosahedron.vertices, tris)


def test_two_components_accepted(icosahedron):
    shift = icosahedron.vertices + np.array([10.0, 0.0, 0.0])
    verts = np.vstack([icosahedron.vertices, shift])
    tris = np.vstack([icosahedron.triangles, icosahedron.triangles + 12])
    mesh = TriangleMesh.from_arrays(verts, tris)
    assert mesh.n_components == 2
    assert mesh.num_edges == 60


def test_gmsh_v2_parse(tmp_path):
    # unit tetrahedron surface, one ignored line element
    content = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
5
1 1 2 0 1 1 2
2 2 2 0 1 1 3 2
3 2 2 0 1 1 2 4
4 2 2 0 1 2 3 4
5 2 2 0 1 1 4 3
$EndElements
"""
    path = tmp_path / "tet.msh"
    path.write_text(content)
    with pytest.warns(UserWarning, match="ignored"):
        mesh = load_mesh(path)
    assert mesh.num_triangles == 4
    assert mesh.num_vertices == 4
    assert mesh.num_edges == 6


def test_off_parse_errors(tmp_path):
    bad = tmp_path / "bad.off"
    bad.write_text("NOT_OFF\n")
    with pytest.raises(ParseError):
        load_mesh(bad, format="off")
    bad.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n")
    with pytest.raises(ParseError, match="truncated"):
        load_mesh(bad, format="off")
    with pytest.raises(ParseError, match="format"):
        load_mesh(bad, format="step")


def test_wing_body_valid():
    body = generate_wing_body(2)
    assert body.num_triangles == 320
    assert body.num_vertices - body.num_edges + body.num_triangles == 2
    # genuinely non-spherical
    r = np.linalg.norm(body.vertices, axis=1)
    assert r.max() / r.min() > 2.0
