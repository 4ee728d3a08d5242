"""Splitting solvers for problems over the rank-sparsity ball.

* :func:`solve_affine_recovery` -- ``min ||X||_1 + theta ||X||_*  s.t.  A(X) = b``
  by three-block consensus ADMM.
* :func:`minimize_linear_over_ball` -- ``min <V, X>`` over the unit ball, by
  Douglas-Rachford or through the equivalent homogenized recovery problem.
* :func:`extreme_point_refine` -- an extreme point of the solution set.

First-order iterates only approximate the rank and zero pattern of a
solution.  :func:`snap_structure` and :func:`face_walk` turn an approximate
point into one whose zeros are exact and whose rank is exact: the walk moves
inside the current face of the norm (where the norm is linear) along
directions that keep ``A(X) = b``, until the face meets the affine set in a
single point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg.lapack import dgesdd

from .linalg import as_matrix, joint_norm, l1_norm, nuclear_norm
from .prox import project_ball, soft_threshold, svt

log = logging.getLogger(__name__)


class InfeasibleError(ValueError):
    """The affine system ``A(X) = b`` has no solution."""


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 20000
    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    rho: float = 1.0
    seed: int = 0
    balance: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        for name in ("abs_tol", "rel_tol", "rho"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolveResult:
    X: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool
    info: dict = field(default_factory=dict)


class LinearMap:
    """Measurement operator ``A(X)_k = <A_k, X>`` with right-hand side ``b``."""

    def __init__(self, ops, b, shape=None):
        ops = [as_matrix(A, "measurement matrix") for A in ops]
        if ops:
            shape = ops[0].shape
            for A in ops:
                if A.shape != shape:
                    raise ValueError(f"measurement shapes differ: {A.shape} vs {shape}")
        elif shape is None:
            raise ValueError("shape is required when there are no measurements")
        self.shape = tuple(shape)
        self.ops = np.array(ops, dtype=float).reshape(len(ops), *self.shape)
        self.b = np.asarray(b, dtype=float).ravel()
        if self.b.size != len(ops):
            raise ValueError(f"b has {self.b.size} entries for {len(ops)} measurements")
        self.matrix = self.ops.reshape(len(ops), self.shape[0] * self.shape[1])
        self._parts = None
        if len(ops):
            self.range_rank = int(np.linalg.matrix_rank(self.matrix))
        else:
            self.range_rank = 0

    @property
    def d(self):
        return self.b.size

    def apply(self, X):
        return self.matrix @ np.asarray(X, dtype=float).ravel()

    def residual(self, X):
        if self.d == 0:
            return 0.0
        return float(np.linalg.norm(self.apply(X) - self.b))

    def projector_parts(self):
        """``(Pn, x0)`` with ``proj(x) = Pn x + x0`` on vectorized matrices."""
        if self._parts is not None:
            return self._parts
        n, m = self.shape
        if self.d == 0:
            self._parts = np.eye(n * m), np.zeros(n * m)
            return self._parts
        pinv = np.linalg.pinv(self.matrix, rcond=1e-12)
        x_ls = pinv @ self.b
        res = np.linalg.norm(self.matrix @ x_ls - self.b)
        if res > 1e-9 * (1.0 + np.linalg.norm(self.b)):
            raise InfeasibleError(f"A(X) = b is inconsistent (least-squares residual {res:.3g})")
        self._parts = np.eye(n * m) - pinv @ self.matrix, x_ls
        return self._parts

    def projector(self):
        """Return ``proj(X)``, the Euclidean projection onto ``{A(X) = b}``.

        Raises :class:`InfeasibleError` if the system is inconsistent.
        """
        n, m = self.shape
        if self.d == 0:
            return lambda X: np.array(X, dtype=float, copy=True)
        Pn, x_ls = self.projector_parts()

        def proj(X):
            return (Pn @ np.asarray(X).ravel() + x_ls).reshape(n, m)

        return proj


# --------------------------------------------------------------------------
# consensus ADMM


def _small_svd(X):
    # the LAPACK driver directly: numpy's wrapper overhead dominates at this size
    U, s, Vt, info = dgesdd(X, full_matrices=0)
    if info != 0:
        return np.linalg.svd(X, full_matrices=False)
    return U, s, Vt


def solve_affine_recovery(A, theta=1.0, cfg=None):
    """Minimize ``||X||_1 + theta ||X||_*`` subject to ``A(X) = b``.

    Three-block consensus ADMM: soft thresholding, singular value
    thresholding and the affine projection, each applied to its own copy,
    followed by averaging.  The penalty is rebalanced by a factor 2 when the
    primal and dual residuals differ by more than 10x.  The returned ``X`` is
    the affine block, so it satisfies the constraints to round-off.
    """
    cfg = cfg or SolverConfig()
    if not theta > 0:
        raise ValueError("theta must be positive")
    n, m = A.shape
    Pn, x_ls = A.projector_parts()
    if A.d == 0 or not np.any(A.b):
        X = np.zeros((n, m))
        return SolveResult(X, 0.0, 0.0, 0.0, 0, True, {"rho": cfg.rho})
    rho = cfg.rho
    nm = n * m
    z = x_ls.copy()
    U = np.zeros((3, nm))
    Xb = np.empty((3, nm))
    sq = np.sqrt(3.0 * nm)
    converged = False
    r_norm = s_norm = np.inf
    k = 0
    for k in range(1, cfg.max_iter + 1):
        V = z - U
        a = V[0]
        Xb[0] = np.sign(a) * np.maximum(np.abs(a) - 1.0 / rho, 0.0)
        Us, sv, Vt = _small_svd(V[1].reshape(n, m))
        Xb[1] = ((Us * np.maximum(sv - theta / rho, 0.0)) @ Vt).ravel()
        Xb[2] = Pn @ V[2] + x_ls
        z_old = z
        z = (Xb + U).sum(axis=0) / 3.0
        R = Xb - z
        U += R
        r_norm = np.sqrt(np.vdot(R, R))
        dz = z - z_old
        s_norm = rho * np.sqrt(3.0 * (dz @ dz))
        x_norm = np.sqrt(np.vdot(Xb, Xb))
        eps_pri = sq * cfg.abs_tol + cfg.rel_tol * max(x_norm, np.sqrt(3.0 * (z @ z)))
        eps_dual = sq * cfg.abs_tol + cfg.rel_tol * rho * np.sqrt(np.vdot(U, U))
        if r_norm < eps_pri and s_norm < eps_dual:
            converged = True
            break
        if cfg.balance and k % 10 == 0:
            if r_norm > 10 * s_norm:
                rho *= 2.0
                U /= 2.0
            elif s_norm > 10 * r_norm:
                rho /= 2.0
                U *= 2.0
    X1, X2, X3 = (Xb[i].reshape(n, m).copy() for i in range(3))
    X = X3
    return SolveResult(
        X=X,
        objective=joint_norm(X, theta),
        primal_residual=float(r_norm),
        dual_residual=float(s_norm),
        iterations=k,
        converged=converged,
        info={"rho": rho, "feasibility": A.residual(X), "hint": _structure_hint(X1, X2)},
    )


def _structure_hint(X1, X2):
    """Zero mask of the soft-threshold block and rank of the SVT block."""
    s = np.linalg.svd(X2, compute_uv=False)
    rank = int(np.count_nonzero(s > 1e-12 * s[0])) if s.size and s[0] > 0 else 0
    return X1 == 0.0, rank


# --------------------------------------------------------------------------
# exact structure: snapping and the facial walk


def _constraint_rows(A):
    if A is None or A.d == 0:
        return np.zeros((0, 0)), np.zeros(0)
    return A.matrix, A.b


def snap_structure(X, A=None, zero_rel=1e-6, rank_rel=1e-6, max_iter=60, zero_mask=None, rank=None):
    """Find a point near ``X`` with exact zeros and exact rank.

    Entries below ``zero_rel * max|X|`` are declared zero and singular values
    below ``rank_rel * sigma_1`` are dropped, unless ``zero_mask`` / ``rank``
    prescribe the structure directly.  Gauss-Newton on the factored form
    ``P Q^T`` then enforces the zero pattern and ``A(X) = b``.  Returns the
    snapped matrix or ``None`` if the declared structure is infeasible near
    ``X``.
    """
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    scale = float(np.abs(X).max())
    if scale == 0.0:
        return X.copy()
    zero = np.abs(X) <= zero_rel * scale if zero_mask is None else np.asarray(zero_mask, dtype=bool)
    U, s, Vt = np.linalg.svd(X)
    r = int(np.count_nonzero(s > rank_rel * s[0])) if rank is None else int(rank)
    if r == 0:
        return None
    sq = np.sqrt(s[:r])
    P = U[:, :r] * sq
    Q = Vt[:r].T * sq
    M, b = _constraint_rows(A)
    zidx = np.flatnonzero(zero.ravel())
    target = 1e-14 * (scale + (np.abs(b).max() if b.size else 0.0))
    eye_n, eye_m = np.eye(n), np.eye(m)
    for _ in range(max_iter):
        Xc = P @ Q.T
        parts = [Xc.ravel()[zidx]]
        if M.size:
            parts.append(M @ Xc.ravel() - b)
        R = np.concatenate(parts)
        if R.size == 0 or np.abs(R).max() <= target:
            break
        JP = np.einsum("ik,ja->ijka", eye_n, Q).reshape(n * m, n * r)
        JQ = np.einsum("jl,ia->ijla", eye_m, P).reshape(n * m, m * r)
        JX = np.hstack([JP, JQ])
        rows = [JX[zidx]]
        if M.size:
            rows.append(M @ JX)
        J = np.vstack(rows)
        step = np.linalg.lstsq(J, -R, rcond=None)[0]
        P = P + step[: n * r].reshape(n, r)
        Q = Q + step[n * r :].reshape(m, r)
    else:
        return None
    Xs = P @ Q.T
    if np.abs(Xs - X).max() > 1e-2 * scale:
        return None
    Xs[zero] = 0.0
    return Xs


def _sym_basis(r):
    basis = []
    for p in range(r):
        for q in range(p, r):
            B = np.zeros((r, r))
            if p == q:
                B[p, p] = 1.0
            else:
                B[p, q] = B[q, p] = 1.0 / np.sqrt(2.0)
            basis.append(B)
    return np.array(basis)


def face_walk(X, A=None, theta=1.0, W=None, max_steps=None):
    """Walk from ``X`` to an extreme point of ``{f <= f(X)} ∩ {A(X) = b}``.

    ``X`` must already carry its intended structure exactly (see
    :func:`snap_structure`).  Writing the current point as ``U A V^T`` with
    ``A`` positive definite, the face of the norm through it is
    ``{U S V^T : S psd, zero pattern kept, signs kept}`` and the norm is
    linear there.  Each step moves along a direction of that face that keeps
    the constraints, preferring descent of the norm and then of ``<W, .>``,
    until a support entry vanishes or the rank drops.  Stops when no feasible
    direction remains, i.e. the face meets the affine set in one point.
    Returns ``(X_extreme, steps)``.
    """
    X = np.array(X, dtype=float, copy=True)
    n, m = X.shape
    zero = X == 0.0
    U, s, Vt = np.linalg.svd(X)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros_like(X), 0
    r = int(np.count_nonzero(s > 1e-12 * s[0]))
    Uh, Vh, lam = U[:, :r], Vt[:r].T, s[:r].copy()
    M, _ = _constraint_rows(A)
    max_steps = max_steps or 4 * (n * m + n + m)
    steps = 0
    while r > 0 and steps < max_steps:
        basis = _sym_basis(r)
        T = np.einsum("ia,kab,jb->kij", Uh, basis, Vh).reshape(len(basis), n * m)
        rows = [T[:, zero.ravel()].T]
        if M.size:
            rows.append(M @ T.T)
        C = np.vstack(rows)
        if C.shape[0]:
            _, sv, Vc = np.linalg.svd(C)
            tol = 1e-10 * max(1.0, sv[0] if sv.size else 0.0)
            rank_c = int(np.count_nonzero(sv > tol))
            N = Vc[rank_c:].T
        else:
            N = np.eye(len(basis))
        if N.shape[1] == 0:
            break
        Xc = (Uh * lam) @ Vh.T
        G = np.where(zero, 0.0, np.sign(Xc)) + theta * (Uh @ Vh.T)
        gG = T @ G.ravel()
        pG = N @ (N.T @ gG)
        if np.linalg.norm(pG) > 1e-9 * max(np.linalg.norm(gG), 1e-300):
            delta = -pG
        else:
            delta = None
            if W is not None:
                gW = T @ np.asarray(W, dtype=float).ravel()
                pW = N @ (N.T @ gW)
                if np.linalg.norm(pW) > 1e-9 * max(np.linalg.norm(gW), 1e-300):
                    delta = -pW
            if delta is None:
                delta = N[:, 0]
        delta = delta / np.linalg.norm(delta)
        Delta = np.einsum("k,kab->ab", delta, basis)
        D = (Uh @ Delta @ Vh.T)
        # step to the first support entry that reaches zero
        t_zero = np.inf
        hit = None
        dscale = np.abs(D).max()
        cand = (~zero) & (Xc * D < 0) & (np.abs(D) > 1e-13 * dscale)
        if cand.any():
            ts = np.full(Xc.shape, np.inf)
            ts[cand] = -Xc[cand] / D[cand]
            t_zero = float(ts.min())
            hit = ts <= t_zero * (1 + 1e-9)
        # step to the boundary of the psd cone
        sq = np.sqrt(lam)
        Mx = Delta / np.outer(sq, sq)
        mu = float(np.linalg.eigvalsh(-Mx)[-1])
        t_psd = 1.0 / mu if mu > 1e-14 else np.inf
        t = min(t_zero, t_psd)
        if not np.isfinite(t):
            raise RuntimeError("facial walk found an unbounded direction; the objective is not a norm")
        S = np.diag(lam) + t * Delta
        S = (S + S.T) / 2.0
        if hit is not None and t_zero <= t_psd * (1 + 1e-9):
            zero = zero | hit
        w, Qs = np.linalg.eigh(S)
        keep = w > 1e-11 * max(w.max(), 1e-300)
        Uh = Uh @ Qs[:, keep]
        Vh = Vh @ Qs[:, keep]
        lam = w[keep]
        r = int(lam.size)
        steps += 1
    if r == 0:
        return np.zeros_like(X), steps
    out = (Uh * lam) @ Vh.T
    out[zero] = 0.0
    return out, steps


_SNAP_LADDER = ((1e-6, 1e-6), (1e-8, 1e-8), (1e-10, 1e-10), (0.0, 1e-13))


def purify(X, A=None, theta=1.0, W=None, hint=None):
    """Snap ``X`` to an exact structure and walk to an extreme point.

    ``hint`` may give ``(zero_mask, rank)``, e.g. the exact zeros of the
    soft-thresholding block and the exact rank of the thresholding block of
    an ADMM run; it is tried first.  Then progressively finer zero/rank
    thresholds are tried until the snapped point satisfies the constraints.
    Returns ``(X_extreme, info)``.
    """
    X = np.asarray(X, dtype=float)
    if not np.any(X):
        return np.zeros_like(X), {"snap": None, "steps": 0}
    if hint is not None:
        Xs = snap_structure(X, A, zero_mask=hint[0], rank=hint[1])
        if Xs is not None:
            Xe, steps = face_walk(Xs, A, theta, W)
            return Xe, {"snap": "hint", "steps": steps}
    for zero_rel, rank_rel in _SNAP_LADDER:
        Xs = snap_structure(X, A, zero_rel=zero_rel, rank_rel=rank_rel)
        if Xs is not None:
            Xe, steps = face_walk(Xs, A, theta, W)
            return Xe, {"snap": (zero_rel, rank_rel), "steps": steps}
    raise RuntimeError("could not snap the point onto an exactly structured feasible point")


# --------------------------------------------------------------------------
# linear objective over the ball


def _linear_dr(V, theta, cfg, proj_affine=None, radius=1.0):
    """Douglas-Rachford for ``min <V, X>`` over ``radius * B`` (and an affine set)."""
    n, m = V.shape
    vnorm = float(np.linalg.norm(V))
    gamma = 1.0 / vnorm if vnorm > 0 else 1.0
    gamma *= max(radius, 1e-300)
    z = np.zeros((n, m))
    x = np.zeros((n, m))
    k = 0
    converged = False
    prim = dual = np.inf
    for k in range(1, cfg.max_iter + 1):
        x_old = x
        x = radius * project_ball(z / radius, theta)
        u = 2 * x - z - gamma * V
        y = proj_affine(u) if proj_affine is not None else u
        z = z + y - x
        prim = float(np.linalg.norm(y - x))
        dual = float(np.linalg.norm(x - x_old))
        scale = max(1.0, float(np.linalg.norm(x)))
        tol = cfg.abs_tol + cfg.rel_tol * scale
        if prim <= tol and dual <= tol:
            converged = True
            break
    return x, y, k, prim, dual, converged


def minimize_linear_over_ball(V, theta=1.0, cfg=None, method="dr", polish=True):
    """Minimize ``<V, X>`` subject to ``||X||_1 + theta ||X||_* <= 1``.

    ``method="dr"`` runs Douglas-Rachford between the linear term (prox is
    a shift) and the ball projection.  ``method="gauge"`` uses homogeneity:
    the minimizers are the positive rescalings onto the unit sphere of the
    solutions of ``min f(X) s.t. <V, X> = -1``, solved by consensus ADMM.
    With ``polish`` the point is snapped to exact structure and walked to an
    extreme point of the optimal face when that does not worsen the value.
    """
    cfg = cfg or SolverConfig()
    V = as_matrix(V, "V")
    n, m = V.shape
    if not np.any(V):
        return SolveResult(np.zeros((n, m)), 0.0, 0.0, 0.0, 0, True, {"method": method})
    if method == "dr":
        x, _, k, prim, dual, converged = _linear_dr(V, theta, cfg)
        X = x
    elif method == "gauge":
        res = solve_affine_recovery(LinearMap([V], [-1.0]), theta, cfg)
        X = res.X / joint_norm(res.X, theta)
        k, prim, dual, converged = res.iterations, res.primal_residual, res.dual_residual, res.converged
    else:
        raise ValueError(f"unknown method {method!r}")
    raw = float(np.sum(V * X))
    info = {"method": method, "raw_objective": raw}
    if polish:
        level = float(np.sum(V * X))
        if level < 0:
            try:
                Xp, pinfo = purify(X, LinearMap([V], [level]), theta)
            except RuntimeError as exc:
                log.debug("polish failed: %s", exc)
                Xp, pinfo = None, None
            if Xp is not None and np.any(Xp):
                Xp = Xp / joint_norm(Xp, theta)
                if float(np.sum(V * Xp)) <= raw + 1e-9 * max(1.0, abs(raw)):
                    X = Xp
                    info.update(polished=True, walk_steps=pinfo["steps"])
    return SolveResult(
        X=X,
        objective=float(np.sum(V * X)),
        primal_residual=float(prim),
        dual_residual=float(dual),
        iterations=int(k),
        converged=bool(converged),
        info=info,
    )


# --------------------------------------------------------------------------
# extreme points of the solution set


def extreme_point_refine(A, theta, c_star, W, cfg=None, start=None, method="dr", hint=None):
    """Return an extreme point of ``{X : A(X) = b, f(X) <= c_star}``.

    ``method="dr"`` first minimizes ``<W, X>`` over that set with
    Douglas-Rachford (affine projection with the linear term folded in,
    against the scaled ball projection).  ``method="face"`` skips that phase
    and starts from ``start`` (typically the recovery solution, whose
    ``info["hint"]`` can be passed as ``hint``).  Both then
    snap to exact structure and run :func:`face_walk` with ``W`` as the
    tie-break direction, so the output is an extreme point exactly, and
    almost surely in ``W`` a distinct one per draw.
    """
    cfg = cfg or SolverConfig()
    n, m = A.shape
    W = as_matrix(W, "W")
    proj = A.projector()
    if c_star <= 0 or A.d == 0 or not np.any(A.b):
        X = np.zeros((n, m))
        return SolveResult(X, 0.0, A.residual(X), 0.0, 0, True, {"method": method})
    iterations = 0
    converged = True
    if method == "dr":
        x, y, iterations, prim, dual, converged = _linear_dr(
            W, theta, cfg, proj_affine=proj, radius=c_star
        )
        X0 = y
    elif method == "face":
        if start is None:
            raise ValueError('method="face" needs a starting solution')
        X0 = proj(as_matrix(start, "start"))
    else:
        raise ValueError(f"unknown method {method!r}")
    X, pinfo = purify(X0, A, theta, W, hint=hint if method == "face" else None)
    obj = joint_norm(X, theta)
    feas = A.residual(X)
    excess = max(0.0, obj - c_star)
    ok = feas <= 1e-8 * (1.0 + np.linalg.norm(A.b)) and excess <= cfg.rel_tol * max(1.0, c_star) + 1e-6
    return SolveResult(
        X=X,
        objective=obj,
        primal_residual=feas,
        dual_residual=excess,
        iterations=int(iterations) + pinfo["steps"],
        converged=bool(converged and ok),
        info={"method": method, "walk_steps": pinfo["steps"], "snap": pinfo["snap"]},
    )


def with_overrides(cfg, **kw):
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})


__all__ = [
    "InfeasibleError",
    "LinearMap",
    "SolveResult",
    "SolverConfig",
    "extreme_point_refine",
    "face_walk",
    "minimize_linear_over_ball",
    "purify",
    "snap_structure",
    "solve_affine_recovery",
    "with_overrides",
    "l1_norm",
    "nuclear_norm",
]
