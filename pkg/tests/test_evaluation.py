import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prodgraph.errors import DimensionError, GraphError
from prodgraph.evaluation import (
    extract_factor,
    fro_error,
    is_nonincreasing,
    recovery_metrics,
    rel_fro_error,
    scaling_study,
)
from prodgraph.glp import GLPConfig
from prodgraph.bpgl import PGLConfig
from prodgraph.graph import laplacian
from prodgraph.tensor import ProductKind, product_matrix

from conftest import random_adjacency


def test_metrics_hand_example():
    T = np.zeros((4, 4))
    T[0, 1] = T[1, 2] = T[2, 3] = 1
    T = T + T.T
    E = np.zeros((4, 4))
    E[0, 1] = E[0, 3] = 1
    E = E + E.T
    m = recovery_metrics(E, T)
    assert m.precision == 0.5
    assert np.isclose(m.recall, 1 / 3)
    assert np.isclose(m.f_measure, 0.4)


def test_perfect_recovery():
    W = random_adjacency(np.random.default_rng(0), 6)
    m = recovery_metrics(3 * W, W)
    assert m.f_measure == 1.0
    assert m.rel_fro_error < 1e-12


def test_empty_estimate_precision_zero():
    W = random_adjacency(np.random.default_rng(0), 5)
    m = recovery_metrics(np.zeros((5, 5)), W)
    assert m.precision == 0.0 and m.f_measure == 0.0


def test_metric_errors():
    with pytest.raises(GraphError):
        recovery_metrics(np.ones((3, 3)) - np.eye(3), np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        recovery_metrics(np.zeros((3, 3)), np.zeros((4, 4)))


def test_threshold_removes_tiny_weights():
    T = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], float)
    E = np.array([[0, 1, 1e-9], [1, 0, 0], [1e-9, 0, 0]])
    assert recovery_metrics(E, T).precision == 1.0


@given(st.integers(0, 2**16), st.floats(0.1, 10))
def test_errors_are_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    A, B = random_adjacency(rng, 5), random_adjacency(rng, 5)
    assert np.isclose(rel_fro_error(c * A, B), rel_fro_error(A, B))
    assert np.isclose(fro_error(A, c * B), fro_error(A, B))


@pytest.mark.parametrize("kind", list(ProductKind))
def test_extract_factor_recovers_exact_products(kind):
    rng = np.random.default_rng(1)
    dims = (3, 4, 2)
    mats = [random_adjacency(rng, d, p=1.0) for d in dims]
    W = product_matrix(kind, mats)
    np.fill_diagonal(W, 0)
    for k, Wk in enumerate(mats):
        F = extract_factor(W, dims, k)
        target = Wk * dims[k] / np.trace(laplacian(Wk))
        assert np.allclose(F, target)


def test_is_nonincreasing():
    assert is_nonincreasing([3, 2, 2, 1])
    assert is_nonincreasing([3, 2, 2.5, 1])
    assert not is_nonincreasing([1, 2, 3])
    assert not is_nonincreasing([3, 4, 2, 2.5], allowed_inversions=1)


def test_scaling_study_table():
    cfg = PGLConfig("cartesian", (3, 3), max_sweeps=2, inner=GLPConfig(max_iter=500))
    t = scaling_study("cartesian", (3, 3), [20, 200], seeds=[0, 1], config=cfg,
                      baseline=True, glp_config=GLPConfig(max_iter=500))
    assert len(t.rows) == 2 * 2 * 2 * 2
    assert set(t.medians("bpgl")) == {20, 200}
    assert t.verdict() in (True, False)
    assert {r["method"] for r in t.summary()} == {"bpgl", "glp"}
    with pytest.raises(ValueError):
        scaling_study("cartesian", (3, 3), [], seeds=[0])
