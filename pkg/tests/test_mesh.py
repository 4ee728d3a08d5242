import numpy as np
import pytest

from facegeo.mesh import gauge, mesh_ball, nuclear_sym, sphere_grid, sym_matrix
from facegeo.linalg import joint_norm, l1_norm, nuclear_norm


def test_closed_form_norms_match_svd():
    rng = np.random.default_rng(0)
    P = rng.standard_normal((50, 3))
    for p in P:
        M = sym_matrix(p)
        assert nuclear_sym(p[None])[0] == pytest.approx(nuclear_norm(M), abs=1e-12)
        assert gauge("l1", p[None])[0] == pytest.approx(l1_norm(M), abs=1e-12)
        assert gauge("joint", p[None], 0.7)[0] == pytest.approx(joint_norm(M, 0.7), abs=1e-12)


@pytest.mark.parametrize("kind", ["l1", "nuclear", "joint"])
@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_vertices_on_unit_sphere(kind, theta):
    mesh = mesh_ball(kind, theta, 32)
    g = np.array([joint_norm(sym_matrix(v), theta) if kind == "joint" else gauge(kind, v[None], theta)[0] for v in mesh.vertices])
    assert np.abs(g - 1).max() <= 1e-9


def test_closed_outward_surface():
    mesh = mesh_ball("joint", 1.0, 24)
    assert mesh.euler_characteristic() == 2
    V, F = mesh.vertices, mesh.faces
    vol = np.einsum("ij,ij->i", V[F[:, 0]], np.cross(V[F[:, 1]], V[F[:, 2]])).sum() / 6
    assert vol > 0
    # every edge shared by exactly two faces, with opposite orientation
    directed = [(f[a], f[(a + 1) % 3]) for f in F.tolist() for a in range(3)]
    assert len(set(directed)) == len(directed)
    assert all((j, i) in set(directed) for i, j in directed)


def test_l1_extreme_vertices_on_axes():
    mesh = mesh_ball("l1", 1.0, 16)
    V = mesh.vertices
    norms = np.linalg.norm(V, axis=1)
    far = V[norms >= norms.max() - 1e-12]
    expected = {(1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 0.0, -1.0)}
    assert {tuple(np.round(p, 12) + 0.0) for p in far} == expected
    for p in [(0.0, 0.5, 0.0), (0.0, -0.5, 0.0)]:
        assert np.min(np.linalg.norm(V - np.array(p), axis=1)) < 1e-15


def test_sphere_grid_contains_axes():
    pts, _ = sphere_grid(10)
    for axis in np.vstack([np.eye(3), -np.eye(3)]):
        assert np.min(np.linalg.norm(pts - axis, axis=1)) == 0.0


def test_obj_text():
    text = mesh_ball("joint", 1.0, 8).to_obj()
    lines = text.splitlines()
    assert lines[0].startswith("#")
    assert any(l.startswith("v ") for l in lines) and any(l.startswith("f ") for l in lines)


def test_mesh_validation():
    with pytest.raises(ValueError):
        mesh_ball("frobenius")
    with pytest.raises(ValueError):
        mesh_ball("joint", 0.0)
    with pytest.raises(ValueError):
        mesh_ball("joint", 1.0, 4)
