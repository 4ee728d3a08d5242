"""Boundary meshes of unit balls restricted to symmetric 2x2 matrices.

``(a, b, c)`` stands for ``[[a, b], [b, c]]``.  A UV-sphere of directions is
pushed radially onto the unit sphere of the chosen norm.  The sphere's poles
sit on the ``b`` axis and the grid always contains the six axis directions,
so the vertices of the l1 ball appear exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("l1", "nuclear", "joint")


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (k, 3) points (a, b, c)
    faces: np.ndarray  # (f, 3) 0-based vertex indices, outward orientation
    kind: str = "joint"
    theta: float = 1.0

    def to_obj(self):
        lines = [f"# kind={self.kind} theta={self.theta!r} vertices={len(self.vertices)} faces={len(self.faces)}"]
        lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in self.vertices.tolist()]
        lines += [f"f {i + 1} {j + 1} {k + 1}" for i, j, k in self.faces.tolist()]
        return "\n".join(lines) + "\n"

    def euler_characteristic(self):
        edges = {tuple(sorted(e)) for f in self.faces.tolist() for e in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0]))}
        return len(self.vertices) - len(edges) + len(self.faces)


def sym_matrix(p):
    a, b, c = p
    return np.array([[a, b], [b, c]], dtype=float)


def l1_sym(p):
    """Entrywise l1 norm of the full matrix: the off-diagonal entry counts twice."""
    a, b, c = np.asarray(p, dtype=float).T
    return np.abs(a) + 2 * np.abs(b) + np.abs(c)


def nuclear_sym(p):
    """Nuclear norm ``|l1| + |l2|`` from the closed-form eigenvalues."""
    a, b, c = np.asarray(p, dtype=float).T
    return np.maximum(np.abs(a + c), 2 * np.hypot((a - c) / 2, b))


def gauge(kind, p, theta=1.0):
    if kind == "l1":
        return l1_sym(p)
    if kind == "nuclear":
        return nuclear_sym(p)
    if kind == "joint":
        return l1_sym(p) + theta * nuclear_sym(p)
    raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")


def sphere_grid(resolution):
    """UV-sphere with poles on the ``b`` axis.

    Longitudes are rounded up to a multiple of 4 and latitudes to an even
    count, so the axis directions are grid points.  Returns ``(points, faces)``.
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    n_lon = 4 * ((resolution + 3) // 4)
    n_lat = 2 * ((resolution // 2 + 1) // 2)
    phi = np.pi * np.arange(1, n_lat) / n_lat
    lam = 2 * np.pi * np.arange(n_lon) / n_lon
    P, L = np.meshgrid(phi, lam, indexing="ij")
    ring = np.stack([np.sin(P) * np.cos(L), np.cos(P), np.sin(P) * np.sin(L)], axis=-1).reshape(-1, 3)
    # snap exact zeros so that axis points are exact
    ring[np.abs(ring) < 1e-15] = 0.0
    top = np.array([[0.0, 1.0, 0.0]])
    bottom = np.array([[0.0, -1.0, 0.0]])
    pts = np.vstack([top, ring, bottom])
    north, south = 0, len(pts) - 1

    def idx(i, j):
        return 1 + i * n_lon + (j % n_lon)

    faces = []
    for j in range(n_lon):
        faces.append((north, idx(0, j + 1), idx(0, j)))
    for i in range(n_lat - 2):
        for j in range(n_lon):
            p00, p01 = idx(i, j), idx(i, j + 1)
            p10, p11 = idx(i + 1, j), idx(i + 1, j + 1)
            faces.append((p00, p01, p11))
            faces.append((p00, p11, p10))
    last = n_lat - 2
    for j in range(n_lon):
        faces.append((south, idx(last, j), idx(last, j + 1)))
    return pts, np.array(faces, dtype=int)


def mesh_ball(kind="joint", theta=1.0, resolution=64):
    """Closed triangulated boundary of the unit ball of ``kind`` on symmetric 2x2 matrices."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    if not theta > 0:
        raise ValueError("theta must be positive")
    dirs, faces = sphere_grid(int(resolution))
    radius = gauge(kind, dirs, theta)
    pts = dirs / radius[:, None]
    mesh = Mesh(vertices=pts, faces=faces, kind=kind, theta=float(theta))
    return _orient_outward(mesh)


def _orient_outward(mesh):
    # star-shaped around the origin: outward faces have positive signed volume
    V, F = mesh.vertices, mesh.faces
    vol = np.einsum("ij,ij->i", V[F[:, 0]], np.cross(V[F[:, 1]], V[F[:, 2]]))
    if np.sum(vol) < 0:
        F = F[:, ::-1].copy()
    return Mesh(vertices=V, faces=F, kind=mesh.kind, theta=mesh.theta)
