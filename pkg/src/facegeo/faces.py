"""Facial geometry of the rank-sparsity ball ``{X : ||X||_1 + theta ||X||_* <= 1}``.

The minimal face of the ball at a boundary point ``X`` has dimension

    r(r+1)/2 - 1 - dim span{ U_i^T V_j + V_j^T U_i : X_ij = 0 }

where ``U_i`` / ``V_j`` are rows of the leading ``r`` singular vectors.  The
facial structure does not depend on ``theta``; it is carried only so that
norms and vertex values are reported on the right scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .formats import REPORT_FORMAT_VERSION
from .linalg import (
    DEFAULT_TOL,
    Tolerances,
    as_matrix,
    joint_norm,
    numerical_rank,
    span_dimension,
    svd,
)


@dataclass(frozen=True)
class SupportPattern:
    """Zero/nonzero pattern of a matrix; ``zero_mask[i, j]`` is True at zeros."""

    zero_mask: np.ndarray

    @property
    def rows(self):
        return self.zero_mask.shape[0]

    @property
    def cols(self):
        return self.zero_mask.shape[1]

    @property
    def zero_count(self):
        return int(np.count_nonzero(self.zero_mask))

    @property
    def support_count(self):
        return self.zero_mask.size - self.zero_count

    @property
    def support(self):
        return ~self.zero_mask

    def zeros(self):
        """Zero positions as a list of ``(i, j)`` pairs (0-based, row-major)."""
        return [tuple(int(k) for k in ij) for ij in np.argwhere(self.zero_mask)]

    @classmethod
    def from_support(cls, support):
        return cls(zero_mask=~np.asarray(support, dtype=bool))


@dataclass(frozen=True)
class FaceReport:
    """Certification of the minimal face of the ball at ``X / ||X||_{1,*}``.

    ``face_dim`` is the dimension of the face of the ball; the corresponding
    face of the norm (a cone) has dimension ``face_dim + 1``.  The zero matrix
    yields a report with ``rank == 0`` (the face ``{0}`` of the norm).
    """

    theta: float
    norm_value: float
    rank: int
    zero_count: int
    span_dim: int
    face_dim: int
    is_extreme: bool
    is_vertex: bool
    rank_fragile: bool = False
    tol: Tolerances = field(default=DEFAULT_TOL)

    @property
    def origin(self):
        return self.rank == 0

    def to_dict(self):
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "theta": self.theta,
            "norm_value": self.norm_value,
            "rank": self.rank,
            "zero_count": self.zero_count,
            "span_dim": self.span_dim,
            "face_dim": self.face_dim,
            "is_extreme": self.is_extreme,
            "is_vertex": self.is_vertex,
            "rank_fragile": self.rank_fragile,
            "tolerances": self.tol.to_dict(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d):
        return cls(
            theta=float(d["theta"]),
            norm_value=float(d["norm_value"]),
            rank=int(d["rank"]),
            zero_count=int(d["zero_count"]),
            span_dim=int(d["span_dim"]),
            face_dim=int(d["face_dim"]),
            is_extreme=bool(d["is_extreme"]),
            is_vertex=bool(d["is_vertex"]),
            rank_fragile=bool(d["rank_fragile"]),
            tol=Tolerances(**d["tolerances"]),
        )


def _check_theta(theta):
    if not (np.isfinite(theta) and theta > 0):
        raise ValueError(f"theta must be positive, got {theta!r}")


def _unit_sphere_point(X, theta):
    """Rescale ``X`` onto the unit sphere of the joint norm; returns ``(Y, norm)``."""
    nv = joint_norm(X, theta)
    if nv == 0.0:
        return X, 0.0
    return X / nv, nv


def support_complement(X, tol=DEFAULT_TOL):
    """Support pattern of ``X`` with zeros decided by ``|x| <= tol.zero_abs``."""
    X = as_matrix(X)
    return SupportPattern(zero_mask=np.abs(X) <= tol.zero_abs)


def face_generators(Uh, Vh, zero_mask):
    """The symmetric r x r matrices ``U_i^T V_j + V_j^T U_i`` over zero positions."""
    mats = []
    for i, j in np.argwhere(zero_mask):
        outer = np.outer(Uh[i], Vh[j])
        mats.append(outer + outer.T)
    return mats


def minimal_face_dimension(X, theta=1.0, tol=DEFAULT_TOL):
    """Certify the minimal face of the rank-sparsity ball at ``X`` (rescaled).

    Returns a :class:`FaceReport`.  Zero decisions are made on the rescaled
    point, so the report is invariant under positive scaling of ``X``.
    """
    _check_theta(theta)
    X = as_matrix(X)
    Y, nv = _unit_sphere_point(X, theta)
    pattern = support_complement(Y, tol)
    f = svd(Y)
    r = numerical_rank(f.sigma, tol)
    if nv == 0.0 or r == 0:
        return FaceReport(
            theta=float(theta),
            norm_value=float(nv),
            rank=0,
            zero_count=int(X.size),
            span_dim=0,
            face_dim=0,
            is_extreme=False,
            is_vertex=False,
            rank_fragile=False,
            tol=tol,
        )
    Uh, Vh = f.top(r)
    # generators come from orthonormal rows, so their natural scale is one
    span_dim = span_dimension(face_generators(Uh, Vh, pattern.zero_mask), tol, floor=1.0)
    face_dim = (r * (r + 1) - 2) // 2 - span_dim
    ratios = f.sigma / f.sigma[0]
    fragile = bool(ratios[r - 1] < 10 * tol.rank_rel)
    if r < ratios.size:
        fragile = fragile or bool(ratios[r] > tol.rank_rel / 10)
    return FaceReport(
        theta=float(theta),
        norm_value=float(nv),
        rank=r,
        zero_count=pattern.zero_count,
        span_dim=span_dim,
        face_dim=face_dim,
        is_extreme=face_dim == 0,
        is_vertex=is_vertex(X, theta, tol),
        rank_fragile=fragile,
        tol=tol,
    )


def check_extreme_inequality(report, d):
    """``r(r+1)/2 - |I| <= 1 + d`` for the rank and zero count in ``report``."""
    if d < 0:
        raise ValueError("d must be non-negative")
    r = report.rank
    return r * (r + 1) // 2 - report.zero_count <= 1 + d


def is_vertex(X, theta=1.0, tol=DEFAULT_TOL):
    """True iff ``X`` is a positive multiple of a vertex ``+-E_ij / (1 + theta)``."""
    _check_theta(theta)
    X = as_matrix(X)
    Y, nv = _unit_sphere_point(X, theta)
    if nv == 0.0:
        return False
    nz = np.abs(Y) > tol.zero_abs
    if np.count_nonzero(nz) != 1:
        return False
    value = abs(Y[nz][0])
    return bool(abs(value - 1.0 / (1.0 + theta)) <= max(tol.zero_abs, 1e-9))


def sample_subgradients(X, theta, samples, rng, tol=DEFAULT_TOL):
    """Random elements of the subdifferential of the joint norm at ``X``.

    ``G = G1 + theta * G2``: ``G1`` carries the signs of ``X`` on its support
    and uniform [-1, 1] entries off it; ``G2 = U1 V1^T + U2 W V2^T`` with
    ``W`` a random matrix of spectral norm at most one on the null block.
    Returns an array of shape ``(samples, n, m)``.
    """
    X = as_matrix(X)
    n, m = X.shape
    zero = np.abs(X) <= tol.zero_abs
    G1 = rng.uniform(-1.0, 1.0, size=(samples, n, m))
    G1[:, ~zero] = np.sign(X[~zero])
    f = svd(X)
    r = numerical_rank(f.sigma, tol)
    U1, V1 = f.top(r)
    G2 = np.broadcast_to(U1 @ V1.T, (samples, n, m)).copy()
    if r < n and r < m:
        U2 = f.U[:, r:]
        V2 = f.V[:, r:]
        W = rng.uniform(-1.0, 1.0, size=(samples, n - r, m - r))
        spec = np.linalg.norm(W, ord=2, axis=(1, 2))
        W /= np.maximum(spec, 1.0)[:, None, None]
        G2 += np.einsum("ia,sab,jb->sij", U2, W, V2)
    return G1 + theta * G2


def affine_hull_dimension(points, rel_tol=1e-9):
    """Dimension of the affine hull of a point cloud (rows of ``points``)."""
    P = np.asarray(points, dtype=float)
    P = P.reshape(P.shape[0], -1)
    if P.shape[0] <= 1:
        return 0
    D = P[1:] - P[0]
    s = np.linalg.svd(D, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def subdifferential_dimension_estimate(X, theta=1.0, samples=64, seed=0, tol=DEFAULT_TOL):
    """Affine-hull dimension of ``samples`` random subgradients at ``X``.

    Equals ``n*m - 1`` exactly at vertices of the ball (full-dimensional normal
    cone) and is smaller elsewhere.
    """
    _check_theta(theta)
    X = as_matrix(X)
    Y, nv = _unit_sphere_point(X, theta)
    if nv == 0.0:
        raise ValueError("subdifferential estimate requires a nonzero matrix")
    rng = np.random.default_rng(seed)
    G = sample_subgradients(Y, theta, samples, rng, tol)
    return affine_hull_dimension(G)
