"""RWG function space, physical parameters, and plane-wave excitations.

The divergence-conforming edge functions used here omit the edge-length
prefactor: on the plus triangle f_e(r) = (r - p+)/(2 A+), on the minus
triangle f_e(r) = (p- - r)/(2 A-), where p+/- is the vertex opposite the
edge. With this normalization a +/-1 combination of the functions around a
vertex is exactly divergence-free, which is what makes the loop/star
incidence matrices pure +/-1 matrices and their Gram products pure graph
Laplacians.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import TriangleMesh

EPS0 = 8.8541878128e-12
MU0 = 1.25663706212e-6


@dataclass(frozen=True)
class PhysicsParams:
    """Frequency and medium constants (free space by default)."""

    frequency: float
    eps: float = EPS0
    mu: float = MU0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        if self.eps <= 0 or self.mu <= 0:
            raise ValueError("eps and mu must be positive")

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.frequency

    @property
    def k(self) -> float:
        return self.omega * np.sqrt(self.eps * self.mu)

    @property
    def wavelength(self) -> float:
        return 2.0 * np.pi / self.k

    @classmethod
    def for_ka(cls, ka: float, radius: float, eps: float = EPS0, mu: float = MU0):
        """Parameters such that k * radius == ka."""
        c = 1.0 / np.sqrt(eps * mu)
        return cls(frequency=ka * c / (2.0 * np.pi * radius), eps=eps, mu=mu)


@dataclass(frozen=True)
class PlaneWave:
    """Incident plane wave E(r) = amplitude * pol * exp(j k dir.r)."""

    direction: np.ndarray
    polarization: np.ndarray
    amplitude: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        p = np.asarray(self.polarization, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        if abs(np.linalg.norm(p) - 1.0) > 1e-12:
            raise ValueError("polarization must be a unit vector")
        if abs(np.dot(d, p)) > 1e-12:
            raise ValueError("polarization must be orthogonal to direction")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "polarization", p)
        d.setflags(write=False)
        p.setflags(write=False)

    def field_at(self, points: np.ndarray, k: float) -> np.ndarray:
        """Evaluate the incident field at points (..., 3)."""
        phase = np.exp(1j * k * (points @ self.direction))
        return self.amplitude * phase[..., None] * self.polarization


@dataclass(frozen=True)
class RwgSpace:
    """Edge-based RWG degrees of freedom on a closed mesh.

    One DoF per edge, ordered like mesh.edges. Per-triangle views give, for
    each of a triangle's three edges: the global DoF index, the +/-1 sign
    (is this the plus or minus triangle of that edge), and the opposite
    (free) vertex index.
    """

    mesh: TriangleMesh
    tri_plus: np.ndarray      # (E,) plus-triangle index per DoF
    tri_minus: np.ndarray     # (E,)
    free_plus: np.ndarray     # (E,) free vertex index on the plus side
    free_minus: np.ndarray    # (E,)
    edge_length: np.ndarray   # (E,)
    tri_dofs: np.ndarray      # (F, 3) global DoF per triangle edge slot
    tri_signs: np.ndarray     # (F, 3) +/-1
    tri_free: np.ndarray      # (F, 3) free vertex index per slot

    def __post_init__(self):
        for name in ("tri_plus", "tri_minus", "free_plus", "free_minus",
                     "edge_length", "tri_dofs", "tri_signs", "tri_free"):
            getattr(self, name).setflags(write=False)

    @property
    def size(self) -> int:
        return self.mesh.num_edges

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh) -> "RwgSpace":
        edges = mesh.edges
        tris = mesh.triangles
        ne = mesh.num_edges
        nf = mesh.num_triangles

        edge_index = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}

        tri_plus = mesh.edge_tris[:, 0].copy()
        tri_minus = mesh.edge_tris[:, 1].copy()

        def opposite(t, a, b):
            tv = tris[t]
            for v in tv:
                if v != a and v != b:
                    return int(v)
            raise AssertionError("degenerate triangle")

        free_plus = np.array(
            [opposite(tri_plus[e], *edges[e]) for e in range(ne)], dtype=np.int64
        )
        free_minus = np.array(
            [opposite(tri_minus[e], *edges[e]) for e in range(ne)], dtype=np.int64
        )
        edge_length = np.linalg.norm(
            mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]], axis=1
        )

        tri_dofs = np.empty((nf, 3), dtype=np.int64)
        tri_signs = np.empty((nf, 3), dtype=np.int64)
        tri_free = np.empty((nf, 3), dtype=np.int64)
        for t in range(nf):
            a, b, c = tris[t]
            for slot, (u, v, w) in enumerate(((a, b, c), (b, c, a), (c, a, b))):
                e = edge_index[(int(u), int(v))] if u < v else edge_index[(int(v), int(u))]
                tri_dofs[t, slot] = e
                tri_signs[t, slot] = 1 if tri_plus[e] == t else -1
                tri_free[t, slot] = w

        return cls(
            mesh=mesh,
            tri_plus=tri_plus,
            tri_minus=tri_minus,
            free_plus=free_plus,
            free_minus=free_minus,
            edge_length=edge_length,
            tri_dofs=tri_dofs,
            tri_signs=tri_signs,
            tri_free=tri_free,
        )

    def eval_current(self, coefficients: np.ndarray, order: int = 7):
        """Current density at quadrature points of every triangle.

        Returns (points (F, Q, 3), values (F, Q, 3) complex).
        """
        from .quadrature import triangle_points

        mesh = self.mesh
        pts = triangle_points(mesh.vertices[mesh.triangles], order)
        coeff = np.asarray(coefficients)
        c = coeff[self.tri_dofs] * self.tri_signs  # (F, 3)
        p = mesh.vertices[self.tri_free]           # (F, 3, 3)
        # J(r) = sum_a c_a (r - p_a) / (2A)
        d = pts[:, None, :, :] - p[:, :, None, :]  # (F, 3, Q, 3)
        vals = np.einsum("fa,faqx->fqx", c, d) / (2.0 * mesh.areas[:, None, None])
        return pts, vals
