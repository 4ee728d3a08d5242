"""Proximal primitives for the l1 norm, the nuclear norm and their sum.

Everything here is exact up to floating point except :func:`prox_joint`
and :func:`project_ball`, which are iterative.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .linalg import as_matrix, joint_norm, svd


def soft_threshold(x, lam):
    """Componentwise ``sign(x) * max(|x| - lam, 0)``."""
    if lam < 0:
        raise ValueError("threshold must be non-negative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def svt(X, lam):
    """Singular value thresholding: the prox of ``lam * ||.||_*``."""
    if lam < 0:
        raise ValueError("threshold must be non-negative")
    X = np.asarray(X, dtype=float)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    s = np.maximum(s - lam, 0.0)
    return (U * s) @ Vt


def _l1_epigraph_multiplier(a, s):
    """Root ``lam`` of ``sum(max(a - lam, 0)) = s + lam`` for ``a >= 0``.

    The left side is piecewise linear and decreasing, so the root is found
    exactly by scanning the sorted breakpoints.
    """
    v = np.sort(a)[::-1]
    csum = np.cumsum(v)
    k = np.arange(1, v.size + 1)
    # with the k largest entries active: csum_k - k*lam = s + lam
    lam = (csum - s) / (k + 1)
    nxt = np.append(v[1:], 0.0)
    ok = (lam <= v) & (lam >= nxt)
    idx = int(np.argmax(ok)) if ok.any() else v.size - 1
    return max(float(lam[idx]), 0.0)


def project_epi_l1(x, s):
    """Euclidean projection of ``(x, s)`` onto ``{(y, t) : ||y||_1 <= t}``."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if a.sum() <= s:
        return x.copy(), float(s)
    if a.size == 0 or a.max() <= -s:
        return np.zeros_like(x), 0.0
    lam = _l1_epigraph_multiplier(a.ravel(), s)
    return soft_threshold(x, lam), float(s + lam)


def project_epi_nuclear(X, s):
    """Euclidean projection of ``(X, s)`` onto ``{(Y, t) : ||Y||_* <= t}``."""
    X = as_matrix(X)
    f = svd(X)
    sig, t = project_epi_l1(f.sigma, s)
    k = f.sigma.size
    return (f.U[:, :k] * sig) @ f.V[:, :k].T, t


def prox_joint(Y, a, b, tol=1e-13, max_iter=20000, state=None):
    """Prox of ``a ||.||_1 + b ||.||_*`` by the Dykstra-like splitting.

    Alternates the two individual proxes with a correction term; the iterates
    converge to the prox of the sum.  The scheme is block-coordinate ascent
    on the dual, so it converges from any correction term, which ``state``
    (a dict) carries between calls as a warm start.  The returned point comes
    out of the soft-threshold step, so its zeros are exact.
    """
    Y = np.asarray(Y, dtype=float)
    q = np.zeros_like(Y)
    if state is not None and state.get("q") is not None and state["q"].shape == Y.shape:
        q = state["q"].copy()
    x = Y - q
    scale = max(1.0, float(np.abs(Y).max()))
    it = 0
    for it in range(1, max_iter + 1):
        z = svt(Y - q, b)
        x_new = soft_threshold(z + q, a)
        q = z + q - x_new
        delta = np.abs(x_new - x).max()
        x = x_new
        if delta <= tol * scale and np.abs(x - z).max() <= 10 * tol * scale:
            break
    if state is not None:
        state["q"] = q
        state["iterations"] = state.get("iterations", 0) + it
    return x


def project_ball(Y, theta=1.0, tol=1e-12, max_iter=20000):
    """Euclidean projection onto ``{X : ||X||_1 + theta ||X||_* <= 1}``.

    Outside the ball the projection is ``prox_{lam f}(Y)`` with the unique
    ``lam > 0`` making the joint norm equal to one; ``lam`` is found by
    Brent's method and each prox is evaluated by :func:`prox_joint`.  The
    result is scaled back inside the ball if round-off leaves it outside.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    Y = as_matrix(Y)
    if joint_norm(Y, theta) <= 1.0:
        return Y.copy()
    hi = float(np.abs(Y).max())
    state = {}

    def excess(lam):
        P = prox_joint(Y, lam, theta * lam, tol=tol, max_iter=max_iter, state=state)
        return joint_norm(P, theta) - 1.0

    lam = brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    P = prox_joint(Y, lam, theta * lam, tol=tol, max_iter=max_iter, state=state)
    nv = joint_norm(P, theta)
    if nv > 1.0:
        P = P / nv
    return P
