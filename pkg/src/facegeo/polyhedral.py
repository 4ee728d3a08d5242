"""Exact facial calculus on small polytopes.

Polytopes are given by halfspaces ``<a, x> <= b``.  Vertices are found by
brute force over ``dim``-subsets of constraints, and the face lattice is
the closure under intersection of the vertex sets of the facets, together
with the empty face and the polytope itself.  Faces of different polytopes
are compared through their vertex coordinates rounded to a ``1e-9`` grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog, nnls

MAX_DIM = 4
MAX_HALFSPACES = 64
GRID = 1e-9


class PolytopeError(ValueError):
    """Unbounded, empty or oversized polytope."""


def point_key(x):
    return tuple(int(v) for v in np.round(np.asarray(x, dtype=float) / GRID))


class Polytope:
    """Bounded polyhedron ``{x : normals @ x <= offsets}`` in dimension <= 4."""

    def __init__(self, normals, offsets):
        A = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.asarray(offsets, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise PolytopeError(f"{A.shape[0]} normals but {b.size} offsets")
        if not 1 <= A.shape[1] <= MAX_DIM:
            raise PolytopeError(f"dimension must be between 1 and {MAX_DIM}")
        if A.shape[0] > MAX_HALFSPACES:
            raise PolytopeError(f"at most {MAX_HALFSPACES} halfspaces are supported, got {A.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise PolytopeError("halfspace data must be finite")
        # zero rows are kept so constraint indices survive linear maps
        zero = np.linalg.norm(A, axis=1) == 0
        if np.any(b[zero] < 0):
            raise PolytopeError("polytope is empty (0 <= negative offset)")
        self.A = A
        self.b = b

    @property
    def dim(self):
        return self.A.shape[1]

    @property
    def halfspaces(self):
        return list(zip(self.A, self.b))

    @classmethod
    def box(cls, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        eye = np.eye(lower.size)
        return cls(np.vstack([eye, -eye]), np.concatenate([upper, -lower]))

    def tolerance(self):
        return 1e-9 * max(1.0, float(np.abs(self.b).max(initial=0.0)))

    def contains(self, x, tol=None):
        tol = self.tolerance() if tol is None else tol
        return bool(np.all(self.A @ np.asarray(x, dtype=float) <= self.b + tol))

    def active(self, x, tol=None):
        """Indices of constraints tight at ``x``."""
        tol = self.tolerance() if tol is None else tol
        return frozenset(np.flatnonzero(np.abs(self.A @ np.asarray(x, dtype=float) - self.b) <= tol).tolist())

    def _check_bounded(self):
        d = self.dim
        for k in range(d):
            for sgn in (1.0, -1.0):
                c = np.zeros(d)
                c[k] = -sgn
                res = linprog(c, A_ub=self.A, b_ub=np.zeros(self.A.shape[0]), bounds=[(-1, 1)] * d, method="highs")
                if res.status != 0 or -res.fun > 1e-9:
                    raise PolytopeError("not a polytope: the constraint set is unbounded")

    @cached_property
    def vertices(self):
        """Vertices as an array of shape ``(k, dim)``, ordered lexicographically."""
        self._check_bounded()
        d = self.dim
        tol = self.tolerance()
        found = {}
        combos = itertools.combinations(range(self.A.shape[0]), d)
        while True:
            chunk = np.array(list(itertools.islice(combos, 100000)), dtype=int)
            if chunk.size == 0:
                break
            M = self.A[chunk]
            rhs = self.b[chunk]
            s = np.linalg.svd(M, compute_uv=False)
            ok = s[:, -1] > 1e-10 * s[:, 0]
            if not ok.any():
                continue
            X = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
            feas = np.all(X @ self.A.T <= self.b + tol, axis=1)
            for x in X[feas]:
                found.setdefault(point_key(x), x)
        if not found:
            raise PolytopeError("polytope is empty")
        keys = sorted(found)
        return np.array([found[k] for k in keys])

    @cached_property
    def vertex_keys(self):
        return [point_key(v) for v in self.vertices]

    @cached_property
    def incidence(self):
        """Boolean ``(constraints, vertices)`` matrix of tight constraints."""
        return np.abs(self.A @ self.vertices.T - self.b[:, None]) <= self.tolerance()

    def tight_vertices(self, constraints):
        """Vertex indices tight on every constraint in ``constraints``."""
        mask = np.ones(len(self.vertices), dtype=bool)
        for k in constraints:
            mask &= self.incidence[k]
        return frozenset(np.flatnonzero(mask).tolist())

    def gauge(self, y):
        """Minkowski gauge; requires every offset positive (0 in the interior)."""
        if np.any(self.b <= 0):
            raise PolytopeError("gauge needs 0 in the interior")
        return max(0.0, float(np.max(self.A @ np.asarray(y, dtype=float) / self.b)))


@dataclass(frozen=True)
class Face:
    dim: int
    active: frozenset
    vertices: frozenset

    def keys(self, Q):
        return frozenset(Q.vertex_keys[i] for i in self.vertices)


def _affine_dim(points):
    if len(points) == 0:
        return -1
    P = np.asarray(points)
    if len(P) == 1:
        return 0
    s = np.linalg.svd(P[1:] - P[0], compute_uv=False)
    return int(np.count_nonzero(s > 1e-9 * max(1.0, s[0])))


class FaceLattice:
    """All faces of a polytope, ordered by dimension then vertex indices."""

    def __init__(self, Q, faces):
        self.Q = Q
        self.faces = faces
        self._by_vertices = {f.vertices: f for f in faces}

    def __len__(self):
        return len(self.faces)

    def __iter__(self):
        return iter(self.faces)

    def counts(self):
        """``{dim: number of faces}``, including ``-1`` for the empty face."""
        out = {}
        for f in self.faces:
            out[f.dim] = out.get(f.dim, 0) + 1
        return out

    def of_dim(self, k):
        return [f for f in self.faces if f.dim == k]

    def find(self, vertices):
        return self._by_vertices.get(frozenset(vertices))

    def key_sets(self):
        return {f.keys(self.Q) for f in self.faces}

    def minimal_face(self, x):
        """Smallest face containing ``x``: the face cut out by the constraints tight at ``x``."""
        if not self.Q.contains(x):
            raise PolytopeError("point is not in the polytope")
        return self.find(self.Q.tight_vertices(self.Q.active(x)))

    def is_closed_under_intersection(self):
        sets = set(self._by_vertices)
        return all((a & b) in sets for a in sets for b in sets)


def enumerate_faces(Q):
    """Complete face lattice of ``Q`` (raises :class:`PolytopeError` if unbounded)."""
    V = Q.vertices
    nv = len(V)
    facets = {Q.tight_vertices([k]) for k in range(Q.A.shape[0])}
    everything = frozenset(range(nv))
    seen = {everything, frozenset()} | facets
    frontier = list(facets)
    while frontier:
        nxt = []
        for F in frontier:
            for G in facets:
                H = F & G
                if H not in seen:
                    seen.add(H)
                    nxt.append(H)
        frontier = nxt
    faces = []
    for S in seen:
        idx = sorted(S)
        active = frozenset(np.flatnonzero(Q.incidence[:, idx].all(axis=1)).tolist()) if idx else frozenset(range(Q.A.shape[0]))
        faces.append(Face(dim=_affine_dim(V[idx]), active=active, vertices=S))
    faces.sort(key=lambda f: (f.dim, sorted(f.vertices)))
    return FaceLattice(Q, faces)


# --------------------------------------------------------------------------
# the l1 + linf ball


def l1_linf_extreme_points(n):
    """Signed permutations of ``(1/(1+k), ..., 1/(1+k), 0, ..., 0)`` for ``k = 1..n``."""
    if n < 1:
        raise ValueError("n must be positive")
    pts = []
    for k in range(1, n + 1):
        for support in itertools.combinations(range(n), k):
            for signs in itertools.product((1.0, -1.0), repeat=k):
                x = np.zeros(n)
                x[list(support)] = np.array(signs) / (1.0 + k)
                pts.append(x)
    pts.sort(key=point_key)
    return pts


def l1_linf_polytope(n):
    """Unit ball of ``||x||_1 + ||x||_inf`` in H-representation.

    The constraints are ``<s + sigma e_i, x> <= 1``.  Normals with a zero
    entry are midpoints of two normals with a ``+-2`` entry, so only the
    ``n 2^n`` normals with a ``+-2`` entry are kept.
    """
    if not 1 <= n <= MAX_DIM:
        raise ValueError(f"n must be between 1 and {MAX_DIM}")
    normals = set()
    for s in itertools.product((1.0, -1.0), repeat=n):
        for i in range(n):
            for sigma in (1.0, -1.0):
                a = np.array(s)
                a[i] += sigma
                if a[i] != 0.0:
                    normals.add(tuple(a))
    A = np.array(sorted(normals))
    return Polytope(A, np.ones(len(A)))


# --------------------------------------------------------------------------
# facial calculus checks


def intersect(Q1, Q2):
    if Q1.dim != Q2.dim:
        raise PolytopeError("polytopes live in different dimensions")
    return Polytope(np.vstack([Q1.A, Q2.A]), np.concatenate([Q1.b, Q2.b]))


def check_sum_rule(Q1, Q2):
    """Faces of ``Q1 ∩ Q2`` are exactly the intersections ``F1 ∩ F2`` of faces."""
    Q = intersect(Q1, Q2)
    try:
        L = enumerate_faces(Q)
    except PolytopeError as exc:
        if "empty" in str(exc):
            raise PolytopeError("the intersection is empty") from None
        raise
    L1, L2 = enumerate_faces(Q1), enumerate_faces(Q2)
    faces = L.key_sets()
    off = Q1.A.shape[0]
    meets = set()
    for F1 in L1:
        for F2 in L2:
            cons = list(F1.active) + [off + k for k in F2.active]
            S = Q.tight_vertices(cons)
            pts = frozenset(Q.vertex_keys[i] for i in S)
            # F1 ∩ F2 must be a face of the intersection
            if pts not in faces:
                return False
            meets.add(pts)
    return faces <= meets


def preimage(A, Q):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != Q.dim:
        raise PolytopeError(f"map has {A.shape[0]} rows for a polytope in dimension {Q.dim}")
    return Polytope(Q.A @ A, Q.b)


def check_preimage_rule(A, Q):
    """Faces of ``A^{-1}(Q)`` are exactly the nonempty preimages of faces of ``Q``, plus the empty face."""
    P = preimage(A, Q)
    LP = enumerate_faces(P)
    LQ = enumerate_faces(Q)
    faces = LP.key_sets()
    pulled = {frozenset()}
    for M in LQ:
        S = P.tight_vertices(M.active)
        pts = frozenset(P.vertex_keys[i] for i in S)
        if pts not in faces:
            return False
        pulled.add(pts)
    return faces <= pulled


def minimal_exposed_face(Q, x):
    """Face exposed by the sum of the constraint normals active at ``x``."""
    x = np.asarray(x, dtype=float)
    if not Q.contains(x):
        raise PolytopeError("point is not in the polytope")
    act = sorted(Q.active(x))
    v = Q.A[act].sum(axis=0) if act else np.zeros(Q.dim)
    vals = Q.vertices @ v
    top = vals.max()
    S = frozenset(np.flatnonzero(vals >= top - 1e-9 * max(1.0, abs(top))).tolist())
    idx = sorted(S)
    active = frozenset(np.flatnonzero(Q.incidence[:, idx].all(axis=1)).tolist())
    return Face(dim=_affine_dim(Q.vertices[idx]), active=active, vertices=S)


def in_normal_cone(Q, x, v):
    act = sorted(Q.active(x))
    v = np.asarray(v, dtype=float)
    scale = max(1.0, float(np.linalg.norm(v)))
    if not act:
        return bool(np.linalg.norm(v) <= 1e-9 * scale)
    _, res = nnls(Q.A[act].T, v)
    return bool(res <= 1e-9 * scale)


def in_gauge_subdifferential(Q, x, g):
    """``g ∈ ∂γ_Q(x)`` for ``γ_Q(x) = 1``: ``<g, x> = 1`` and ``g`` in the polar of ``Q``."""
    g = np.asarray(g, dtype=float)
    if abs(g @ x - 1.0) > 1e-9:
        return False
    return bool(np.all(Q.vertices @ g <= 1.0 + 1e-9))


def gauge_subdiff_equivalence(Q, x, v):
    """``[v ∈ N_Q(x)] == [<v, x> > 0 and v / <v, x> ∈ ∂γ_Q(x)]``.

    The positivity guard matters: for ``v`` in ``-N_Q(x)`` the rescaled
    vector ``v / <v, x>`` is a subgradient although ``v`` is not normal.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise ValueError("v must be nonzero")
    if abs(Q.gauge(x) - 1.0) > 1e-9:
        raise PolytopeError("x must lie on the boundary (gauge one)")
    lhs = in_normal_cone(Q, x, v)
    vx = float(v @ x)
    if lhs and vx <= 0:
        raise AssertionError("a normal vector with <v, x> <= 0 at a boundary point of a body containing 0 inside")
    rhs = vx > 0 and in_gauge_subdifferential(Q, x, v / vx)
    return lhs == rhs


# --------------------------------------------------------------------------
# random instances and suites


def random_polytope(rng, dim, box=2.0, shift=None):
    """6-12 halfspaces tangent to the unit sphere plus the box ``|x_i| <= box``."""
    k = int(rng.integers(6, 13))
    N = rng.standard_normal((k, dim))
    N /= np.linalg.norm(N, axis=1, keepdims=True)
    eye = np.eye(dim)
    A = np.vstack([N, eye, -eye])
    b = np.concatenate([np.ones(k), np.full(2 * dim, box)])
    if shift is not None:
        b = b + A @ np.asarray(shift, dtype=float)
    return Polytope(A, b)


def random_boundary_instance(rng, Q, L=None):
    """A point on a random proper face and a vector ``v`` that is normal,
    anti-normal or random in roughly equal proportions."""
    L = L or enumerate_faces(Q)
    proper = [f for f in L if 0 <= f.dim < Q.dim]
    F = proper[int(rng.integers(len(proper)))]
    idx = sorted(F.vertices)
    w = rng.dirichlet(np.ones(len(idx)))
    x = w @ Q.vertices[idx]
    act = sorted(Q.active(x))
    kind = int(rng.integers(3))
    if kind == 0:
        v = rng.random(len(act)) @ Q.A[act] if act else rng.standard_normal(Q.dim)
    elif kind == 1:
        v = -(rng.random(len(act)) @ Q.A[act]) if act else rng.standard_normal(Q.dim)
    else:
        v = rng.standard_normal(Q.dim)
    if not np.any(v):
        v = rng.standard_normal(Q.dim)
    return x, v


def run_suite(name, dim=3, trials=50, seed=0):
    """Run one randomized oracle suite; returns a summary dict with per-trial detail."""
    rng = np.random.default_rng(seed)
    details = []
    if name == "sum":
        for t in range(trials):
            Q1 = random_polytope(rng, dim)
            Q2 = random_polytope(rng, dim, shift=rng.uniform(-0.5, 0.5, dim))
            details.append({"trial": t, "ok": bool(check_sum_rule(Q1, Q2))})
    elif name == "preimage":
        for t in range(trials):
            k = dim
            d = int(rng.integers(1, dim + 1))
            Q = random_polytope(rng, k)
            while True:
                A = rng.standard_normal((k, d))
                if np.linalg.matrix_rank(A) == d:
                    break
            details.append({"trial": t, "source_dim": d, "ok": bool(check_preimage_rule(A, Q))})
    elif name == "exposed":
        for t in range(trials):
            Q = random_polytope(rng, dim)
            L = enumerate_faces(Q)
            x, _ = random_boundary_instance(rng, Q, L)
            F = minimal_exposed_face(Q, x)
            G = L.minimal_face(x)
            ok = F.vertices == G.vertices and all(F.vertices <= H.vertices for H in L if G.vertices <= H.vertices)
            details.append({"trial": t, "face_dim": F.dim, "ok": bool(ok)})
    elif name == "gauge":
        per = 10
        t = 0
        while t < trials:
            Q = random_polytope(rng, dim)
            L = enumerate_faces(Q)
            for _ in range(min(per, trials - t)):
                x, v = random_boundary_instance(rng, Q, L)
                details.append({"trial": t, "ok": bool(gauge_subdiff_equivalence(Q, x, v))})
                t += 1
    elif name == "l1linf":
        for n in range(2, 5) if trials else ():
            Q = l1_linf_polytope(n)
            expected = {point_key(p) for p in l1_linf_extreme_points(n)}
            got = set(Q.vertex_keys)
            details.append({"n": n, "vertices": len(got), "ok": expected == got})
    else:
        raise ValueError(f"unknown suite {name!r}")
    failures = sum(1 for d in details if not d["ok"])
    return {"suite": name, "dim": dim, "trials": len(details), "seed": seed, "failures": failures, "passed": failures == 0, "details": details}


SUITES = ("sum", "preimage", "exposed", "gauge", "l1linf")
