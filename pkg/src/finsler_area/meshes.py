"""Planar triangulations for the graph solver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshDegenerate


@dataclass
class Mesh:
    """Conforming triangulation of a planar domain.

    ``triangles`` index into ``vertices`` with positive orientation;
    ``boundary_mask`` flags vertices on the domain boundary.
    """

    vertices: np.ndarray       # (nv, 2)
    triangles: np.ndarray      # (nt, 3) int
    boundary_mask: np.ndarray  # (nv,) bool

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _orient_and_check(vertices, triangles):
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    p = vertices[triangles]
    cross = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = cross < 0.0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    cross = np.abs(cross)
    if np.any(cross <= 0.0):
        raise MeshDegenerate("triangle with non-positive area")
    return vertices, triangles


def _edge_counts(triangles):
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]],
                            triangles[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise MeshDegenerate("non-conforming mesh: edge shared by >2 triangles")
    return uniq, counts


def make_mesh(vertices, triangles) -> Mesh:
    """Build a mesh, reorienting triangles and flagging boundary vertices."""
    vertices, triangles = _orient_and_check(vertices, triangles)
    uniq, counts = _edge_counts(triangles)
    boundary = np.zeros(len(vertices), dtype=bool)
    boundary[uniq[counts == 1].ravel()] = True
    return Mesh(vertices=vertices, triangles=triangles, boundary_mask=boundary)


def rectangle_mesh(nx: int, ny: int, x0=0.0, x1=1.0, y0=0.0, y1=1.0) -> Mesh:
    """Structured crossed-diagonal triangulation of a rectangle."""
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.stack([X.ravel(), Y.ravel()], axis=-1)

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            if (i + j) % 2 == 0:
                tris += [[a, b, c], [a, c, d]]
            else:
                tris += [[a, b, d], [b, c, d]]
    return make_mesh(vertices, np.array(tris))


def unit_square_mesh(n: int) -> Mesh:
    return rectangle_mesh(n, n)


def disk_mesh(rings: int, radius: float = 1.0) -> Mesh:
    """Spiderweb triangulation of a disk: ring i holds 6i vertices.

    Produces ``6 * rings^2`` triangles; ring radii are uniform so the
    boundary is a regular polygon inscribed in the circle.
    """
    if rings < 1:
        raise ValueError("need at least one ring")
    vertices = [np.zeros((1, 2))]
    offsets = [0]
    for i in range(1, rings + 1):
        k = 6 * i
        ang = 2.0 * np.pi * np.arange(k) / k
        r = radius * i / rings
        vertices.append(np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1))
        offsets.append(offsets[-1] + len(vertices[-2]))
    vertices = np.vstack(vertices)

    tris = []
    for i in range(1, rings + 1):
        ni, no = 6 * (i - 1), 6 * i
        base_in, base_out = offsets[i - 1], offsets[i]
        if ni == 0:
            for b in range(no):
                tris.append([0, base_out + b, base_out + (b + 1) % no])
            continue
        # merge the two concentric vertex rings by normalized angle
        a = b = 0
        while a < ni or b < no:
            take_outer = b < no and (a == ni or (b + 1) / no <= (a + 1) / ni)
            if take_outer:
                tris.append([base_in + a % ni, base_out + b,
                             base_out + (b + 1) % no])
                b += 1
            else:
                tris.append([base_in + a % ni, base_out + b % no,
                             base_in + (a + 1) % ni])
                a += 1
    return make_mesh(vertices, np.array(tris))


def boundary_loop(mesh: Mesh) -> np.ndarray:
    """Ordered vertex indices of the (single) boundary loop."""
    uniq, counts = _edge_counts(mesh.triangles)
    bedges = uniq[counts == 1]
    nxt = {}
    for a, b in bedges:
        nxt.setdefault(int(a), []).append(int(b))
        nxt.setdefault(int(b), []).append(int(a))
    start = int(bedges[0, 0])
    loop = [start]
    prev = None
    while True:
        cands = [v for v in nxt[loop[-1]] if v != prev]
        if not cands:
            raise MeshDegenerate("open boundary chain")
        prev = loop[-1]
        loop.append(cands[0])
        if loop[-1] == start:
            return np.array(loop[:-1], dtype=np.int64)
        if len(loop) > len(mesh.vertices) + 1:
            raise MeshDegenerate("boundary loop does not close")
