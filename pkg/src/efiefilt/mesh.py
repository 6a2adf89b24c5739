"""Closed oriented triangle meshes: loading, generation, topology.

A mesh is accepted only if it is a closed 2-manifold with consistent
(outward) orientation and Euler characteristic 2 per connected component.
Edges are numbered by lexicographic order of their sorted vertex pair; this
fixes the RWG degree-of-freedom ordering used everywhere downstream.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateElement, ParseError, TopologyError

_ICOSA_T = (1.0 + np.sqrt(5.0)) / 2.0

_ICOSA_VERTICES = np.array(
    [
        [-1.0, _ICOSA_T, 0.0],
        [1.0, _ICOSA_T, 0.0],
        [-1.0, -_ICOSA_T, 0.0],
        [1.0, -_ICOSA_T, 0.0],
        [0.0, -1.0, _ICOSA_T],
        [0.0, 1.0, _ICOSA_T],
        [0.0, -1.0, -_ICOSA_T],
        [0.0, 1.0, -_ICOSA_T],
        [_ICOSA_T, 0.0, -1.0],
        [_ICOSA_T, 0.0, 1.0],
        [-_ICOSA_T, 0.0, -1.0],
        [-_ICOSA_T, 0.0, 1.0],
    ]
)

_ICOSA_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [5, 4, 9], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


@dataclass(frozen=True)
class TriangleMesh:
    """Validated closed oriented triangle mesh.

    Attributes
    ----------
    vertices : (V, 3) float array, meters.
    triangles : (F, 3) int array; vertex triples ordered so the right-hand
        rule gives the outward normal.
    edges : (E, 2) int array of sorted vertex pairs, lexicographically
        ordered. Edge index == RWG DoF index downstream.
    edge_tris : (E, 2) int array; column 0 is the triangle traversing the
        edge in (min, max) vertex order ("plus"/left triangle), column 1 the
        one traversing it the other way ("minus"/right).
    h : mean edge length.
    areas, normals, centroids : per-triangle geometry.
    face_component, vertex_component : connected-component labels.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_tris: np.ndarray
    h: float
    areas: np.ndarray
    normals: np.ndarray
    centroids: np.ndarray
    face_component: np.ndarray
    vertex_component: np.ndarray
    n_components: int = 1

    def __post_init__(self):
        for name in (
            "vertices", "triangles", "edges", "edge_tris",
            "areas", "normals", "centroids", "face_component", "vertex_component",
        ):
            getattr(self, name).setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @classmethod
    def from_arrays(cls, vertices, triangles) -> "TriangleMesh":
        """Validate raw vertex/triangle arrays and derive topology."""
        return _build(np.asarray(vertices, dtype=float),
                      np.asarray(triangles, dtype=np.int64))


def _build(vertices: np.ndarray, triangles: np.ndarray) -> TriangleMesh:
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise ParseError(f"vertex array must be (V, 3), got {vertices.shape}")
    if triangles.ndim != 2 or triangles.shape[1] != 3:
        raise ParseError(f"triangle array must be (F, 3), got {triangles.shape}")
    nv = vertices.shape[0]
    nf = triangles.shape[0]
    if nf == 0:
        raise TopologyError("mesh has no triangles")
    if triangles.min() < 0 or triangles.max() >= nv:
        raise ParseError("triangle vertex index out of range")
    if np.any(
        (triangles[:, 0] == triangles[:, 1])
        | (triangles[:, 1] == triangles[:, 2])
        | (triangles[:, 2] == triangles[:, 0])
    ):
        raise TopologyError("triangle with repeated vertex index")

    # Edge bookkeeping: for each undirected edge record which triangles use it
    # and whether they traverse it in sorted (min -> max) direction.
    edge_use: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for t in range(nf):
        a, b, c = triangles[t]
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            direction = 1 if u < v else -1
            edge_use.setdefault(key, []).append((t, direction))

    edges_sorted = sorted(edge_use.keys())
    edge_tris = np.empty((len(edges_sorted), 2), dtype=np.int64)
    for i, key in enumerate(edges_sorted):
        uses = edge_use[key]
        if len(uses) == 1:
            raise TopologyError(f"open surface: edge {key} has a single triangle")
        if len(uses) > 2:
            raise TopologyError(f"non-manifold edge {key}: {len(uses)} triangles")
        (t0, d0), (t1, d1) = uses
        if d0 == d1:
            raise TopologyError(f"inconsistent orientation across edge {key}")
        edge_tris[i] = (t0, t1) if d0 == 1 else (t1, t0)

    edges = np.array(edges_sorted, dtype=np.int64)

    used = np.zeros(nv, dtype=bool)
    used[triangles.ravel()] = True
    if not used.all():
        raise TopologyError(f"{int((~used).sum())} vertices not referenced by any triangle")

    face_component = _face_components(nf, edge_tris)
    n_components = int(face_component.max()) + 1
    vertex_component = np.full(nv, -1, dtype=np.int64)
    for t in range(nf):
        vertex_component[triangles[t]] = face_component[t]

    # Euler characteristic must be 2 in every component (genus 0, closed).
    for comp in range(n_components):
        fc = int((face_component == comp).sum())
        vc = int((vertex_component == comp).sum())
        ec = int(np.sum(vertex_component[edges[:, 0]] == comp))
        chi = vc - ec + fc
        if chi != 2:
            raise TopologyError(
                f"component {comp}: V-E+F = {chi} != 2 (genus > 0 or defect)"
            )

    edge_vec = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    h = float(np.linalg.norm(edge_vec, axis=1).mean())
    if not h > 0:
        raise DegenerateElement("mean edge length is zero")

    tv = vertices[triangles]
    cross = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
    cross_norm = np.linalg.norm(cross, axis=1)
    areas = 0.5 * cross_norm
    bad = areas < 1e-12 * h * h
    if bad.any():
        raise DegenerateElement(
            f"{int(bad.sum())} triangles with area below 1e-12 * h^2"
        )
    normals = cross / cross_norm[:, None]
    centroids = tv.mean(axis=1)

    return TriangleMesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        edge_tris=edge_tris,
        h=h,
        areas=areas,
        normals=normals,
        centroids=centroids,
        face_component=face_component,
        vertex_component=vertex_component,
        n_components=n_components,
    )


def _face_components(nf: int, edge_tris: np.ndarray) -> np.ndarray:
    parent = np.arange(nf)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t0, t1 in edge_tris:
        r0, r1 = find(t0), find(t1)
        if r0 != r1:
            parent[r1] = r0
    roots = np.array([find(t) for t in range(nf)])
    _, labels = np.unique(roots, return_inverse=True)
    return labels.astype(np.int64)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def generate_icosphere(subdivisions: int, radius: float = 1.0) -> TriangleMesh:
    """Icosahedron subdivided `subdivisions` times, vertices on the sphere.

    Counts: V = 10*4^s + 2, E = 30*4^s, F = 20*4^s. Faces are oriented
    outward. subdivisions is capped at 7 to bound memory.
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be non-negative")
    if subdivisions > 7:
        raise ValueError("subdivisions > 7 refused (memory guard)")
    if radius <= 0:
        raise ValueError("radius must be positive")

    verts = [v / np.linalg.norm(v) for v in _ICOSA_VERTICES]
    faces = [tuple(f) for f in _ICOSA_FACES]

    for _ in range(subdivisions):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in midpoint:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    vertices = np.array(verts) * radius
    triangles = np.array(faces, dtype=np.int64)

    # Outward orientation; the sphere is convex so the per-face test is exact.
    tv = vertices[triangles]
    n = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
    inward = np.einsum("fx,fx->f", n, tv.mean(axis=1)) < 0
    triangles[inward] = triangles[inward][:, [0, 2, 1]]

    return _build(vertices, triangles)


def generate_wing_body(subdivisions: int = 3) -> TriangleMesh:
    """Non-spherical closed test body: a stretched, winged icosphere.

    Smooth positive scaling of a unit icosphere (elongated fuselage along x,
    wing-like widening in y near mid-body, flattened in z), so the result
    stays a genus-0 closed surface with outward orientation.
    """
    base = generate_icosphere(subdivisions, 1.0)
    v = np.array(base.vertices)
    x = v[:, 0]
    sx = 2.4
    sy = 0.6 + 1.8 * np.exp(-(((x - 0.1) / 0.35) ** 2))
    sz = 0.45 + 0.25 * np.exp(-(((x + 0.8) / 0.25) ** 2))
    scaled = np.column_stack([sx * x, sy * v[:, 1], sz * v[:, 2]])
    return _build(scaled, np.array(base.triangles))


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------


def load_mesh(path, format: str | None = None) -> TriangleMesh:
    """Load and validate a mesh from an OFF or Gmsh v2 ASCII file.

    format is "off" or "gmsh-v2-ascii"; inferred from the extension
    (.off / .msh) when omitted.
    """
    path = Path(path)
    if format is None:
        ext = path.suffix.lower()
        if ext == ".off":
            format = "off"
        elif ext == ".msh":
            format = "gmsh-v2-ascii"
        else:
            raise ParseError(f"cannot infer mesh format from extension {ext!r}")
    text = path.read_text()
    if format == "off":
        vertices, triangles = _parse_off(text)
    elif format == "gmsh-v2-ascii":
        vertices, triangles = _parse_gmsh_v2(text)
    else:
        raise ParseError(f"unknown mesh format {format!r}")
    return _build(vertices, triangles)


def _parse_off(text: str):
    lines = [
        ln.strip() for ln in text.splitlines()
        if ln.strip() and not ln.strip().startswith("#")
    ]
    if not lines or lines[0] != "OFF":
        raise ParseError("missing OFF header")
    try:
        nv, nf, _ = (int(x) for x in lines[1].split()[:3])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"bad OFF counts line: {lines[1]!r}") from exc
    if len(lines) < 2 + nv + nf:
        raise ParseError("OFF file truncated")
    try:
        vertices = np.array(
            [[float(x) for x in lines[2 + i].split()[:3]] for i in range(nv)]
        )
    except (ValueError, IndexError) as exc:
        raise ParseError("bad OFF vertex line") from exc
    triangles = []
    for i in range(nf):
        parts = lines[2 + nv + i].split()
        try:
            cnt = int(parts[0])
            idx = [int(x) for x in parts[1 : 1 + cnt]]
        except (ValueError, IndexError) as exc:
            raise ParseError("bad OFF face line") from exc
        if cnt != 3:
            raise ParseError(f"only triangular faces supported, got {cnt}-gon")
        triangles.append(idx)
    if vertices.shape[0] != nv:
        raise ParseError("OFF vertex count mismatch")
    return vertices, np.array(triangles, dtype=np.int64)


def _parse_gmsh_v2(text: str):
    lines = text.splitlines()
    try:
        i_nodes = lines.index("$Nodes")
        i_elems = lines.index("$Elements")
    except ValueError as exc:
        raise ParseError("missing $Nodes or $Elements block") from exc
    try:
        n_nodes = int(lines[i_nodes + 1])
        node_id = np.empty(n_nodes, dtype=np.int64)
        coords = np.empty((n_nodes, 3))
        for i in range(n_nodes):
            parts = lines[i_nodes + 2 + i].split()
            node_id[i] = int(parts[0])
            coords[i] = [float(x) for x in parts[1:4]]
    except (ValueError, IndexError) as exc:
        raise ParseError("bad $Nodes block") from exc
    id_to_row = {int(nid): i for i, nid in enumerate(node_id)}
    triangles = []
    ignored = set()
    try:
        n_elems = int(lines[i_elems + 1])
        for i in range(n_elems):
            parts = [int(x) for x in lines[i_elems + 2 + i].split()]
            etype = parts[1]
            if etype != 2:
                ignored.add(etype)
                continue
            ntags = parts[2]
            nodes = parts[3 + ntags : 6 + ntags]
            triangles.append([id_to_row[n] for n in nodes])
    except (ValueError, IndexError, KeyError) as exc:
        raise ParseError("bad $Elements block") from exc
    if ignored:
        warnings.warn(
            f"ignored non-triangle Gmsh element types: {sorted(ignored)}",
            stacklevel=3,
        )
    if not triangles:
        raise ParseError("no 3-node triangles in $Elements")
    return coords, np.array(triangles, dtype=np.int64)


def write_off(mesh: TriangleMesh, path) -> None:
    """Write a mesh as ASCII OFF (deterministic formatting)."""
    path = Path(path)
    out = ["OFF", f"{mesh.num_vertices} {mesh.num_triangles} {mesh.num_edges}"]
    out += [" ".join(f"{x:.17g}" for x in v) for v in mesh.vertices]
    out += ["3 " + " ".join(str(i) for i in t) for t in mesh.triangles]
    path.write_text("\n".join(out) + "\n")
