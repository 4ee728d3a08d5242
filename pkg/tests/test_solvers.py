import numpy as np
import pytest

from facegeo.faces import check_extreme_inequality, minimal_face_dimension
from facegeo.linalg import joint_norm
from facegeo.solvers import (
    InfeasibleError,
    LinearMap,
    SolverConfig,
    extreme_point_refine,
    face_walk,
    minimize_linear_over_ball,
    purify,
    snap_structure,
    solve_affine_recovery,
)

from oracles import affine_recovery_2x2, linear_min_2x2_sampling


def E(n, m, i, j):
    X = np.zeros((n, m))
    X[i, j] = 1.0
    return X


def random_instance(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 3))
    ops = [rng.standard_normal((2, 2)) for _ in range(d)]
    X0 = rng.standard_normal((2, 2)) * (rng.random((2, 2)) < 0.7)
    b = [float(np.sum(A * X0)) for A in ops]
    if not np.any(b):
        b[0] = 1.0
    return ops, b


def test_single_entry_measurement():
    res = solve_affine_recovery(LinearMap([E(2, 2, 0, 0)], [1.0]), 1.0)
    assert res.converged
    assert res.objective == pytest.approx(2.0, abs=1e-6)
    assert np.allclose(res.X, E(2, 2, 0, 0), atol=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_recovery_matches_grid_oracle(seed):
    ops, b = random_instance(seed)
    res = solve_affine_recovery(LinearMap(ops, b), 1.0)
    _, val = affine_recovery_2x2(ops, b, 1.0)
    assert res.converged
    assert abs(res.objective - val) < 1e-4
    assert res.info["feasibility"] < 1e-8


def test_zero_rhs_gives_origin():
    res = solve_affine_recovery(LinearMap([E(2, 2, 0, 1)], [0.0]), 1.0)
    assert np.array_equal(res.X, np.zeros((2, 2))) and res.objective == 0.0


def test_no_measurements_gives_origin():
    res = solve_affine_recovery(LinearMap([], [], shape=(2, 3)), 1.0)
    assert res.X.shape == (2, 3) and not res.X.any()


def test_full_identity_measurement_returns_target():
    rng = np.random.default_rng(2)
    X0 = rng.standard_normal((2, 3))
    ops = [E(2, 3, i, j) for i in range(2) for j in range(3)]
    res = solve_affine_recovery(LinearMap(ops, X0.ravel()), 1.0)
    assert np.allclose(res.X, X0, atol=1e-8)


def test_inconsistent_measurements_raise():
    A = LinearMap([E(2, 2, 0, 0), E(2, 2, 0, 0)], [1.0, 2.0])
    with pytest.raises(InfeasibleError):
        solve_affine_recovery(A, 1.0)


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        LinearMap([np.eye(2), np.eye(3)], [1, 1])
    with pytest.raises(ValueError):
        LinearMap([np.eye(2)], [1, 2])


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    with pytest.raises(ValueError):
        SolverConfig(rho=0)


@pytest.mark.parametrize("method", ["dr", "gauge"])
def test_linear_minimum_identity(method):
    res = minimize_linear_over_ball(np.eye(2), 1.0, method=method)
    assert abs(res.objective + 0.5) < 1e-5
    assert joint_norm(res.X, 1.0) <= 1 + 1e-7


@pytest.mark.parametrize("v", [3.0, -0.4])
def test_linear_minimum_scalar(v):
    res = minimize_linear_over_ball(np.array([[v]]), 1.0)
    assert res.objective == pytest.approx(-abs(v) / 2, abs=1e-6)


def test_linear_minimum_zero_objective():
    res = minimize_linear_over_ball(np.zeros((2, 2)))
    assert res.objective == 0.0


@pytest.mark.parametrize("seed", range(6))
def test_linear_minimum_matches_sampling_oracle(seed):
    V = np.random.default_rng(100 + seed).standard_normal((2, 2))
    res = minimize_linear_over_ball(V, 1.0)
    ref = linear_min_2x2_sampling(V, 1.0, samples=200000, seed=seed)
    assert res.objective <= ref + 1e-6
    assert abs(res.objective - ref) < 1e-3


@pytest.mark.parametrize("c", [0.5, 4.0])
def test_linear_minimum_scaling(c):
    V = np.random.default_rng(7).standard_normal((2, 3))
    a = minimize_linear_over_ball(V, 1.0).objective
    b = minimize_linear_over_ball(c * V, 1.0).objective
    assert b == pytest.approx(c * a, rel=1e-5)


def test_polished_point_is_extreme():
    V = np.random.default_rng(9).standard_normal((3, 3))
    res = minimize_linear_over_ball(V, 1.0)
    assert minimal_face_dimension(res.X, 1.0).is_extreme


def test_snap_structure_cleans_noise():
    X = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]])
    noisy = X + 1e-9 * np.random.default_rng(0).standard_normal(X.shape)
    Xs = snap_structure(noisy)
    assert np.allclose(Xs, X, atol=1e-7)
    assert np.all(Xs[:, 2] == 0.0)
    assert np.linalg.svd(Xs, compute_uv=False)[1] < 1e-12


def test_face_walk_without_constraints_reaches_origin():
    X, steps = face_walk(np.eye(2) / 4, None, 1.0)
    assert steps >= 1 and not X.any()


def test_face_walk_leaves_the_segment_interior():
    # I/4 is the midpoint of Diag(1+t, 1-t)/4 on the unit sphere; with the trace
    # fixed the norm is constant there and W decides which end is reached
    A = LinearMap([np.eye(2)], [0.5])
    X, steps = face_walk(np.eye(2) / 4, A, 1.0, W=np.diag([1.0, -1.0]))
    assert steps >= 1
    assert np.allclose(X, np.diag([0.0, 0.5]), atol=1e-12)
    assert joint_norm(X, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_purify_keeps_constraints():
    A = LinearMap([E(2, 2, 0, 0) + E(2, 2, 1, 1)], [1.0])
    X, info = purify(np.eye(2) / 2, A, 1.0)
    assert A.residual(X) < 1e-12
    assert joint_norm(X, 1.0) <= 2.0 + 1e-12
    assert minimal_face_dimension(X).is_extreme


@pytest.mark.parametrize("method", ["dr", "face"])
def test_refine_picks_an_end_of_the_solution_segment(method):
    # trace constraint: the solutions with value 2 form Diag(t, 1-t), t in [0, 1]
    A = LinearMap([E(2, 2, 0, 0) + E(2, 2, 1, 1)], [1.0])
    start = np.eye(2) / 2
    ends = []
    for W in (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])):
        res = extreme_point_refine(A, 1.0, 2.0, W, start=start, method=method)
        assert res.converged
        assert A.residual(res.X) < 1e-10 and res.objective <= 2.0 + 1e-6
        rep = minimal_face_dimension(res.X)
        assert check_extreme_inequality(rep, 1)
        ends.append(res.X)
    assert np.allclose(ends[0], np.diag([0.0, 1.0]), atol=1e-6)
    assert np.allclose(ends[1], np.diag([1.0, 0.0]), atol=1e-6)


def test_refine_zero_rhs():
    A = LinearMap([E(2, 2, 0, 0)], [0.0])
    res = extreme_point_refine(A, 1.0, 0.0, np.ones((2, 2)))
    assert not res.X.any() and res.converged


def test_face_refine_needs_start():
    A = LinearMap([E(2, 2, 0, 0)], [1.0])
    with pytest.raises(ValueError):
        extreme_point_refine(A, 1.0, 2.0, np.ones((2, 2)), method="face")


@pytest.mark.parametrize("seed", range(8))
def test_refined_solutions_satisfy_inequality(seed):
    rng = np.random.default_rng(seed)
    n, m, d = 3, 3, int(rng.integers(1, 7))
    ops = [rng.standard_normal((n, m)) for _ in range(d)]
    X0 = rng.standard_normal((n, 1)) @ rng.standard_normal((1, m))
    A = LinearMap(ops, [np.sum(Ak * X0) for Ak in ops])
    res = solve_affine_recovery(A, 1.0)
    ref = extreme_point_refine(A, 1.0, res.objective, rng.standard_normal((n, m)), start=res.X, method="face", hint=res.info["hint"])
    rep = minimal_face_dimension(ref.X)
    assert check_extreme_inequality(rep, A.range_rank)
