"""Dense linear-algebra substrate: SVD, tolerance-based rank decisions and
span dimensions of matrix families.

Matrices are plain 2-D ``float64`` numpy arrays throughout the package;
:func:`as_matrix` is the single validation point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SvdError(RuntimeError):
    """Raised when every available LAPACK driver fails to converge."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used for rank, zero and span decisions.

    rank_rel
        Singular values ``<= rank_rel * sigma_1`` are treated as zero.
    zero_abs
        Entries with ``|x| <= zero_abs`` are treated as zero.
    span_rel
        Gram eigenvalues ``<= span_rel * lambda_max`` are treated as zero.
    """

    rank_rel: float = 1e-8
    zero_abs: float = 1e-10
    span_rel: float = 1e-8

    def __post_init__(self):
        for name in ("rank_rel", "zero_abs", "span_rel"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"tolerance {name} must be positive, got {value!r}")

    def to_dict(self):
        return {"rank_rel": self.rank_rel, "zero_abs": self.zero_abs, "span_rel": self.span_rel}


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class SvdFactors:
    """Full singular value decomposition ``X = U[:, :k] diag(sigma) V[:, :k].T``.

    ``U`` is n x n, ``V`` is m x m and ``sigma`` has length ``k = min(n, m)``,
    sorted non-increasingly.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def shape(self):
        return (self.U.shape[0], self.V.shape[0])

    def reconstruct(self):
        k = self.sigma.size
        return (self.U[:, :k] * self.sigma) @ self.V[:, :k].T

    def top(self, r):
        """Leading ``r`` left/right singular vectors as n x r and m x r arrays."""
        return self.U[:, :r], self.V[:, :r]


def as_matrix(X, name="X"):
    """Return ``X`` as a finite 2-D float64 array, raising ``ValueError`` otherwise."""
    A = np.asarray(X, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def svd(X):
    """Full SVD of ``X``.

    Wide orientation is used internally (tall inputs are transposed and the
    factors swapped back), so results refer to the original orientation.
    """
    X = as_matrix(X)
    n, m = X.shape
    if n > m:
        f = svd(X.T)
        return SvdFactors(U=f.V, sigma=f.sigma, V=f.U)
    try:
        U, s, Vt = np.linalg.svd(X, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        try:
            U, s, Vt = scipy.linalg.svd(X, full_matrices=True, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc2:
            raise SvdError(
                f"SVD of {n}x{m} matrix failed to converge in both gesdd ({exc}) "
                f"and gesvd ({exc2}) drivers"
            ) from exc2
    return SvdFactors(U=U, sigma=s, V=Vt.T)


def singular_values(X):
    return np.linalg.svd(as_matrix(X), compute_uv=False)


def nuclear_norm(X):
    return float(np.sum(singular_values(X)))


def l1_norm(X):
    return float(np.sum(np.abs(X)))


def joint_norm(X, theta):
    """``||X||_1 + theta * ||X||_*``."""
    return l1_norm(X) + theta * nuclear_norm(X)


def numerical_rank(sigma, tol=DEFAULT_TOL):
    """Number of singular values above ``tol.rank_rel * sigma[0]``."""
    sigma = np.asarray(sigma, dtype=float).ravel()
    if sigma.size == 0 or sigma[0] <= 0:
        return 0
    return int(np.count_nonzero(sigma > tol.rank_rel * sigma[0]))


def span_dimension(mats, tol=DEFAULT_TOL, floor=0.0):
    """Dimension of the linear span of a family of equally shaped matrices.

    Computed as the numerical rank of the Gram matrix ``G[k, l] = <M_k, M_l>``
    with threshold ``span_rel * max(lambda_max, floor)``.  A positive
    ``floor`` states the natural scale of the family, so that a family made
    only of round-off noise has span dimension 0.
    """
    mats = [np.asarray(M, dtype=float) for M in mats]
    if not mats:
        return 0
    shape = mats[0].shape
    for M in mats[1:]:
        if M.shape != shape:
            raise ValueError(f"shape mismatch in span_dimension: {M.shape} vs {shape}")
    F = np.stack([M.ravel() for M in mats])
    G = F @ F.T
    lam = np.linalg.eigvalsh(G)
    ref = max(lam[-1], floor)
    if ref <= 0:
        return 0
    return int(np.count_nonzero(lam > tol.span_rel * ref))
