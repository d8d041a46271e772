"""Boundary-fitted triangulation of meridian domains.

Vertices are laid out as exact samples of the analytic boundary curve, axis
nodes along rho = 0, and a hexagonal interior lattice cleared away from the
boundary; the Delaunay triangulation of that point set, clipped to the
domain polygon, is boundary-conforming for the feature sizes used here (a
conformity audit raises if not).  The axis edge is a natural boundary: axis
vertices never enter the Dirichlet mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .geometry import MeridianDomain


class MeshingError(RuntimeError):
    pass


@dataclass
class BoundaryEdge:
    v0: int
    v1: int
    s0: float
    s1: float
    tag: str


@dataclass
class Mesh:
    """Conforming P1 triangulation of a meridian domain."""

    domain: MeridianDomain
    h: float
    vertices: np.ndarray          # (nv, 2)
    triangles: np.ndarray         # (nt, 3) positively oriented
    boundary_edges: list          # of BoundaryEdge, in arc-length order
    on_curve: np.ndarray          # (nv,) bool: vertex on the domain boundary curve
    on_axis: np.ndarray           # (nv,) bool: rho == 0
    arc_of_vertex: np.ndarray     # (nv,) arc length for curve vertices, nan otherwise

    @property
    def dirichlet_mask(self) -> np.ndarray:
        """Boundary-curve vertices excluding axis vertices (the two poles)."""
        return self.on_curve & ~self.on_axis

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def vertex_radii(self) -> np.ndarray:
        return np.linalg.norm(self.vertices, axis=1)

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))

    def min_angle_deg(self) -> float:
        p = self.vertices[self.triangles]
        angles = []
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cosang = np.einsum("ij,ij->i", a, b) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
        return float(np.min(angles))

    def edge_length_ratio(self) -> float:
        p = self.vertices[self.triangles]
        lens = np.concatenate([np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1)
                               for i in range(3)])
        return float(lens.max() / lens.min())


def _boundary_nodes(domain: MeridianDomain, h: float):
    """Exact curve samples at spacing <= h, with per-node arc length."""
    arcs = []
    for i, seg in enumerate(domain.segments):
        n_e = max(2, int(np.ceil(seg.length / h)))
        local = np.linspace(0.0, seg.length, n_e + 1)
        if i > 0:
            local = local[1:]           # joint node already emitted
        arcs.append(domain.seg_offsets[i] + local)
    arcs = np.concatenate(arcs)
    pts = np.array([domain.at(s)[0] for s in arcs])
    pts[0, 0] = 0.0
    pts[-1, 0] = 0.0
    return arcs, pts


def mesh_meridian(domain: MeridianDomain, h: float) -> Mesh:
    """Triangulate the meridian region at target spacing ``h``.

    Raises
    ------
    MeshingError
        On degenerate input or when the triangulation fails to conform to
        the boundary polyline.
    """
    if h <= 0.0:
        raise MeshingError("h must be positive")
    if domain.fillet_length is not None and h >= domain.fillet_length:
        raise MeshingError(f"h={h} must be smaller than the fillet length "
                           f"{domain.fillet_length}")
    arcs, bpts = _boundary_nodes(domain, h)
    nb = len(bpts)

    # axis nodes between the poles (exclusive)
    z_top, z_bot = bpts[-1, 1], bpts[0, 1]
    n_ax = max(2, int(np.ceil(abs(z_top - z_bot) / h)))
    z_ax = np.linspace(z_top, z_bot, n_ax + 1)[1:-1]
    apts = np.column_stack([np.zeros_like(z_ax), z_ax])

    fixed = np.vstack([bpts, apts])
    tree = cKDTree(fixed)

    # hexagonal interior lattice, cleared off the fixed points
    rmax = bpts[:, 0].max()
    zmin, zmax = bpts[:, 1].min(), bpts[:, 1].max()
    rows = []
    dy = h * np.sqrt(3.0) / 2.0
    n_rows = int(np.ceil((zmax - zmin) / dy)) + 1
    for k in range(n_rows):
        z = zmin + k * dy
        x0 = 0.5 * h if k % 2 else h
        xs = np.arange(x0, rmax + h, h)
        rows.append(np.column_stack([xs, np.full_like(xs, z)]))
    lattice = np.vstack(rows)
    inside = domain.contains_many(lattice)
    lattice = lattice[inside]
    d, _ = tree.query(lattice, workers=1)
    lattice = lattice[d >= 0.65 * h]

    verts = np.vstack([fixed, lattice])
    tri = Delaunay(verts)
    simplices = tri.simplices

    # clip to the domain and drop slivers
    cent = verts[simplices].mean(axis=1)
    keep = domain.contains_many(cent)
    p = verts[simplices]
    areas = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                   - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    keep &= np.abs(areas) > 1e-12 * h * h
    simplices = simplices[keep]
    areas = areas[keep]
    flip = areas < 0.0
    simplices[flip] = simplices[flip][:, [0, 2, 1]]

    # drop vertices not referenced by any kept triangle
    used = np.zeros(len(verts), dtype=bool)
    used[simplices.ravel()] = True
    if not used[:len(fixed)].all():
        raise MeshingError("a boundary or axis node was orphaned; refine h")
    renum = -np.ones(len(verts), dtype=int)
    renum[used] = np.arange(used.sum())
    verts = verts[used]
    simplices = renum[simplices]

    on_curve = np.zeros(len(verts), dtype=bool)
    on_curve[renum[:nb][renum[:nb] >= 0]] = True
    on_axis = np.abs(verts[:, 0]) < 1e-12
    arc_of_vertex = np.full(len(verts), np.nan)
    arc_of_vertex[renum[:nb]] = arcs

    # boundary edges in arc order + conformity audit
    edge_set = set()
    for t in simplices:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            edge_set.add((min(a, b), max(a, b)))
    bedges = []
    for i in range(nb - 1):
        a, b = renum[i], renum[i + 1]
        if (min(a, b), max(a, b)) not in edge_set:
            raise MeshingError(
                f"triangulation does not conform to the boundary near arc {arcs[i]:.4f}")
        s_mid = 0.5 * (arcs[i] + arcs[i + 1])
        tag = domain.at(s_mid)[4]
        bedges.append(BoundaryEdge(v0=a, v1=b, s0=arcs[i], s1=arcs[i + 1], tag=tag))

    return Mesh(domain=domain, h=h, vertices=verts, triangles=simplices,
                boundary_edges=bedges, on_curve=on_curve, on_axis=on_axis,
                arc_of_vertex=arc_of_vertex)
