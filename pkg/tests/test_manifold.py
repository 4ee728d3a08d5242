import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facegeo.faces import SupportPattern
from facegeo.manifold import (
    PatternGraph,
    UnionFind,
    component_count,
    manifold_dimension,
    orbit_differential,
    orbit_differential_rank,
    subspace_lower_bound,
)


def graph(mask):
    return PatternGraph.from_pattern(SupportPattern.from_support(np.asarray(mask, dtype=bool)))


def test_component_counts():
    assert component_count(graph(np.ones((2, 2)))) == 1
    assert component_count(graph(np.eye(3))) == 3
    assert component_count(graph(np.zeros((2, 3)))) == 5


def test_graph_validation():
    with pytest.raises(ValueError):
        PatternGraph(2, 2, frozenset({(2, 0)}))


def test_union_find():
    uf = UnionFind(5)
    assert uf.union(0, 1) and uf.union(3, 4) and not uf.union(1, 0)
    assert uf.components == 3 and uf.find(0) == uf.find(1)


@pytest.mark.parametrize("n, m, p, q", [(3, 3, 2, 2), (4, 5, 2, 3), (6, 6, 1, 4), (2, 2, 2, 2)])
def test_block_pattern_dimension(n, m, p, q):
    mask = np.zeros((n, m), dtype=bool)
    mask[:p, :q] = True
    assert manifold_dimension(~mask) == p + q - 1


def test_diagonal_and_full_support():
    for n in (2, 3, 5):
        assert manifold_dimension(~np.eye(n, dtype=bool)) == n
        assert orbit_differential_rank(np.eye(n)) == n
    rng = np.random.default_rng(0)
    X = np.outer(rng.standard_normal(3), rng.standard_normal(3))
    assert manifold_dimension(np.zeros((3, 3), dtype=bool)) == 5
    assert orbit_differential_rank(X) == 5


def test_orbit_differential_examples():
    assert orbit_differential_rank(np.zeros((2, 2))) == 0
    assert orbit_differential_rank(np.ones((2, 2))) == 3
    assert orbit_differential_rank(np.eye(2)) == 2


def test_orbit_differential_is_the_derivative():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((2, 3))
    v, w = rng.standard_normal(2), rng.standard_normal(3)
    t = 1e-6
    moved = np.diag(np.exp(t * v)) @ X @ np.diag(np.exp(t * w))
    fd = (moved - X).ravel() / t
    assert np.allclose(orbit_differential(X) @ np.concatenate([v, w]), fd, atol=1e-5)


def test_subspace_lower_bound():
    assert subspace_lower_bound(np.array([[1.0, 1, 0], [0, 1, 1], [0, 0, 0]])) == 3
    assert subspace_lower_bound(np.zeros((3, 3))) == 0
    X = np.zeros((4, 4))
    X[0, 0] = 1
    assert subspace_lower_bound(X) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31 - 1), st.floats(0.05, 0.95))
def test_rank_matches_component_formula(n, m, seed, density):
    rng = np.random.default_rng(seed)
    mask = rng.random((n, m)) < density
    X = np.where(mask, rng.uniform(0.5, 2.0, (n, m)) * rng.choice([-1, 1], (n, m)), 0.0)
    assert orbit_differential_rank(X) == manifold_dimension(~mask)
