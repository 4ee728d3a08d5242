"""Independent reference computations used by the tests.

None of these call the code under test; they rely on brute force, grid
search or a generic conic solver.
"""

import itertools

import numpy as np


def nuclear_2x2(X):
    """Nuclear norm of a batch of 2x2 matrices: sqrt(||X||_F^2 + 2 |det X|)."""
    X = np.asarray(X, dtype=float)
    fro2 = np.sum(X * X, axis=(-2, -1))
    det = X[..., 0, 0] * X[..., 1, 1] - X[..., 0, 1] * X[..., 1, 0]
    return np.sqrt(fro2 + 2 * np.abs(det))


def joint_2x2(X, theta=1.0):
    X = np.asarray(X, dtype=float)
    return np.sum(np.abs(X), axis=(-2, -1)) + theta * nuclear_2x2(X)


def grid_zoom_minimize(fun, center, radius, points=21, levels=60, shrink=0.6):
    """Minimize ``fun`` (vectorized over rows) by repeated grid search with zoom."""
    center = np.asarray(center, dtype=float)
    k = center.size
    if k == 0:
        return center, float(fun(center[None, :])[0])
    ticks = np.linspace(-1.0, 1.0, points)
    best, best_val = center, float(fun(center[None, :])[0])
    for _ in range(levels):
        grid = np.array(list(itertools.product(ticks, repeat=k))) * radius + best
        vals = fun(grid)
        i = int(np.argmin(vals))
        if vals[i] <= best_val:
            best, best_val = grid[i], float(vals[i])
        radius *= shrink
    return best, best_val


def ball_zoom_minimize(fun, center, radius, samples=20000, levels=1000, shrink=0.7, seed=0):
    """Random search in a shrinking ball; not tied to the coordinate axes,
    so it follows oblique valleys of a nonsmooth objective."""
    rng = np.random.default_rng(seed)
    best = np.asarray(center, dtype=float)
    k = best.size
    best_val = float(fun(best[None, :])[0])
    if k == 0:
        return best, best_val
    for _ in range(levels):
        D = rng.standard_normal((samples, k))
        D *= (rng.random(samples) ** (1.0 / k) / np.linalg.norm(D, axis=1))[:, None]
        P = best + radius * D
        vals = fun(P)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best, best_val = P[i], float(vals[i])
        else:
            radius *= shrink
        if radius < 1e-13:
            break
    return best, best_val


def affine_recovery_2x2(ops, b, theta=1.0):
    """Brute-force ``min f(X) s.t. <A_k, X> = b_k`` for 2x2 ``X`` via the null-space parameterization."""
    M = np.array([np.asarray(A, dtype=float).ravel() for A in ops]).reshape(len(ops), 4)
    b = np.asarray(b, dtype=float)
    x0 = np.linalg.lstsq(M, b, rcond=None)[0] if len(ops) else np.zeros(4)
    _, s, Vt = np.linalg.svd(M) if len(ops) else (None, np.zeros(0), np.eye(4))
    r = int(np.count_nonzero(s > 1e-12))
    N = Vt[r:].T

    def fun(Z):
        X = (x0 + Z @ N.T).reshape(-1, 2, 2)
        return joint_2x2(X, theta)

    radius = 2.0 * (np.linalg.norm(x0) + 1.0)
    z, val = grid_zoom_minimize(fun, np.zeros(N.shape[1]), radius)
    # the grid stalls in oblique valleys; finish with an isotropic search
    z, val = ball_zoom_minimize(fun, z, radius / 10)
    return (x0 + N @ z).reshape(2, 2), val


def linear_min_2x2_sampling(V, theta=1.0, samples=400000, seed=0):
    """``min <V, X>`` over the 2x2 ball by boundary sampling plus local zoom."""
    rng = np.random.default_rng(seed)
    V = np.asarray(V, dtype=float).ravel()
    W = rng.standard_normal((samples, 4))
    # known special directions: single entries and the diagonal pairs
    extra = []
    for i in range(4):
        for sgn in (1.0, -1.0):
            e = np.zeros(4)
            e[i] = sgn
            extra.append(e)
    for a, c in itertools.product((1.0, -1.0), repeat=2):
        extra.append(np.array([a, 0.0, 0.0, c]))
    W = np.vstack([W, np.array(extra)])

    def ratio(D):
        return (D @ V) / joint_2x2(D.reshape(-1, 2, 2), theta)

    vals = ratio(W)
    i = int(np.argmin(vals))
    _, val = grid_zoom_minimize(ratio, W[i] / np.linalg.norm(W[i]), 0.05, points=9, levels=40)
    return min(val, float(vals[i]))


def face_cone_dimension_cvx(X, theta=1.0, probes=None, seed=0):
    """Dimension of the minimal face of the norm cone at ``X`` via a conic solver.

    The joint norm ball is facially exposed, so the minimal face of the norm at
    ``X`` is ``{Y : f(Y) = <G, Y>}`` for any ``G`` in the relative interior of
    the subdifferential.  Its dimension is the rank of the maximizers of random
    linear functionals over that cone intersected with the unit ball.  The
    cone has empty interior, so membership is imposed by a large penalty on
    ``f(Y) - <G, Y> >= 0``; maximizers then lie within ``O(1/mu)`` of the cone.
    """
    import cvxpy as cp

    rng = np.random.default_rng(seed)
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    zero = np.abs(X) <= 1e-10
    U, s, Vt = np.linalg.svd(X)
    r = int(np.count_nonzero(s > 1e-8 * s[0]))
    G1 = np.where(zero, rng.uniform(-0.5, 0.5, X.shape), np.sign(X))
    G2 = U[:, :r] @ Vt[:r]
    if r < min(n, m):
        Wb = rng.standard_normal((n - r, m - r))
        Wb *= 0.5 / np.linalg.norm(Wb, 2)
        G2 = G2 + U[:, r:] @ Wb @ Vt[r:, :][: m - r]
    G = G1 + theta * G2
    Y = cp.Variable((n, m))
    mu = 1e4
    gap = cp.sum(cp.abs(Y)) + theta * cp.normNuc(Y) - cp.sum(cp.multiply(G, Y))
    cons = [cp.norm(Y, "fro") <= 1]
    sols = []
    for _ in range(probes or 2 * n * m + 4):
        R = rng.standard_normal((n, m))
        prob = cp.Problem(cp.Maximize(cp.sum(cp.multiply(R, Y)) - mu * gap), cons)
        prob.solve(solver=cp.CLARABEL)
        sols.append(np.asarray(Y.value).ravel())
    S = np.array(sols)
    sv = np.linalg.svd(S, compute_uv=False)
    return int(np.count_nonzero(sv > 1e-2 * sv[0]))


def project_ball_cvx(Y, theta=1.0):
    import cvxpy as cp

    Y = np.asarray(Y, dtype=float)
    X = cp.Variable(Y.shape)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(X - Y)), [cp.sum(cp.abs(X)) + theta * cp.normNuc(X) <= 1])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return np.asarray(X.value)


def polytope_vertices_bruteforce(normals, offsets, tol=1e-9):
    """Vertices by solving every square subsystem (no deduplication tricks)."""
    A = np.asarray(normals, dtype=float)
    b = np.asarray(offsets, dtype=float)
    d = A.shape[1]
    pts = []
    for S in itertools.combinations(range(len(A)), d):
        M = A[list(S)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(S)])
        if np.all(A @ x <= b + tol) and not any(np.allclose(x, p, atol=1e-9) for p in pts):
            pts.append(x)
    return pts
