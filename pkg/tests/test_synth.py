import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prowras.synth import (
    ShadowConfig,
    distinct_choices,
    generate_points,
    make_shadows,
    random_convex_combination,
    simplex_weights,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def test_zero_sigma_shadows_equal_parent():
    parents = rng().normal(size=(4, 3))
    sh = make_shadows(parents, ShadowConfig(7, 0.0), rng())
    assert np.array_equal(sh, np.repeat(parents, 7, axis=0))


def test_shadow_count():
    assert make_shadows([[1.0, 2.0]], ShadowConfig(100, 0.001), rng()).shape == (100, 2)


def test_shadow_std():
    sh = make_shadows(np.zeros((1, 3)), ShadowConfig(10**5, 0.001), rng(1))
    std = sh.std(axis=0)
    assert np.all((std >= 0.00095) & (std <= 0.00105))


def test_per_feature_sigma():
    sh = make_shadows(np.zeros((1, 2)), ShadowConfig(20000, [0.0, 0.5]), rng())
    assert np.all(sh[:, 0] == 0)
    assert abs(sh[:, 1].std() - 0.5) < 0.02
    with pytest.raises(ValueError):
        ShadowConfig(2, [0.1, 0.2, 0.3]).sigma_vector(2)


def test_k1_returns_input_point():
    pts = rng().normal(size=(5, 2))
    out = random_convex_combination(pts, 1, rng(3))
    assert any(np.array_equal(out, p) for p in pts)


def test_k2_on_segment():
    x1, x2 = np.array([1.0, 2.0, -1.0]), np.array([4.0, -2.0, 0.5])
    r = rng(4)
    for _ in range(200):
        p = random_convex_combination(np.vstack([x1, x2]), 2, r)
        t = np.dot(p - x1, x2 - x1) / np.dot(x2 - x1, x2 - x1)
        assert -1e-12 <= t <= 1 + 1e-12
        assert np.linalg.norm(x1 + t * (x2 - x1) - p) < 1e-10


def test_triangle_centroid():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    r = rng(5)
    pts = np.array([random_convex_combination(tri, 3, r) for _ in range(10**4)])
    assert np.all(np.abs(pts.mean(axis=0) - tri.mean(axis=0)) < 0.02)


def test_simplex_weights_flat_dirichlet_moments():
    """Flat Dirichlet(k): E[w_i] = 1/k, Var[w_i] = (k-1)/(k^2 (k+1))."""
    k = 4
    w = simplex_weights(k, rng(6), size=200000)
    assert np.allclose(w.sum(1), 1)
    assert np.all(w >= 0)
    assert np.allclose(w.mean(0), 1 / k, atol=3e-3)
    assert np.allclose(w.var(0), (k - 1) / (k * k * (k + 1)), rtol=0.03)


@settings(max_examples=60, deadline=None)
@given(pool=st.integers(1, 40), k=st.integers(1, 40), m=st.integers(0, 30), seed=st.integers(0, 10**6))
def test_distinct_choices(pool, k, m, seed):
    if k > pool:
        with pytest.raises(ValueError):
            distinct_choices(rng(seed), pool, k, m)
        return
    c = distinct_choices(rng(seed), pool, k, m)
    assert c.shape == (m, k)
    assert all(len(set(row)) == k for row in c.tolist())
    assert c.size == 0 or (c.min() >= 0 and c.max() < pool)


def test_distinct_choices_uniform():
    c = distinct_choices(rng(8), 6, 2, 60000)
    counts = np.bincount(c.ravel(), minlength=6) / c.size
    assert np.allclose(counts, 1 / 6, atol=0.01)


def test_raw_branch_two_point_combinations():
    cluster = rng(9).normal(size=(12, 10))
    trace = []
    out = generate_points(cluster, 500, 2, 5, ShadowConfig(), 10, rng(10), trace)
    (t,) = trace
    assert t.branch == "raw" and t.k == 2 and t.pool_size == 5
    assert np.allclose(out, np.einsum("mk,mkf->mf", t.weights, cluster[t.parents]), atol=1e-10)


def test_shadow_branch_pool_size():
    cluster = rng(11).normal(size=(5, 4))
    trace = []
    out = generate_points(cluster, 300, 4, 5, ShadowConfig(100, 0.001), 4, rng(12), trace)
    (t,) = trace
    assert t.branch == "shadow" and t.k == 4 and t.pool_size == 500
    assert out.shape == (300, 4)
    assert t.pool_indices.max() < 500
    assert np.array_equal(t.parents, np.arange(5)[t.pool_indices // 100])


def test_empty_request():
    out = generate_points(np.ones((3, 2)), 0, 2, 5, ShadowConfig(), 2, rng())
    assert out.shape == (0, 2)


def test_singleton_cluster_repeats_point():
    out = generate_points(np.array([[1.0, 2.0, 3.0]]), 4, 2, 5, ShadowConfig(), 3, rng())
    assert np.array_equal(out, np.tile([1.0, 2.0, 3.0], (4, 1)))


def test_k_larger_than_pool_rejected():
    with pytest.raises(ValueError, match="distinct pool members"):
        generate_points(np.ones((2, 8)), 3, 300, 5, ShadowConfig(100), 8, rng())


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 15), f=st.integers(1, 6),
       conv=st.integers(1, 8), neb=st.integers(1, 8))
def test_reconstruction_from_trace(seed, n, f, conv, neb):
    r = rng(seed)
    cluster = r.normal(size=(n, f))
    trace = []
    out = generate_points(cluster, 50, conv, neb, ShadowConfig(20, 0.01), f, r, trace)
    (t,) = trace
    recon = np.einsum("mk,mkf->mf", t.weights, t.members)
    assert np.max(np.abs(recon - out)) < 1e-10
    assert np.allclose(t.weights.sum(1), 1)
    if t.branch == "raw":
        assert np.array_equal(t.members, cluster[t.parents])
    else:
        assert np.max(np.abs(t.members - cluster[t.parents])) < 0.2


def test_raw_branch_inside_hull_2d():
    """Each 2-D output lies on the segment between its two recorded raw parents."""
    r = rng(14)
    cluster = r.normal(size=(15, 2))
    trace = []
    out = generate_points(cluster, 300, 1, 4, ShadowConfig(), 3, r, trace)
    a, b = cluster[trace[0].parents[:, 0]], cluster[trace[0].parents[:, 1]]
    cross = (b - a)[:, 0] * (out - a)[:, 1] - (b - a)[:, 1] * (out - a)[:, 0]
    assert np.all(np.abs(cross) < 1e-10)
    t = ((out - a) * (b - a)).sum(1) / ((b - a) ** 2).sum(1)
    assert np.all((t >= -1e-12) & (t <= 1 + 1e-12))


def test_variance_law_monotone():
    nb = rng(15).normal(size=(5, 3))
    cfg = ShadowConfig(100, 0.001)
    var = []
    for k in (2, 5, 10, 20):
        out = generate_points(nb, 10**5, k, 5, cfg, 2, rng(16 + k))
        v = out.var(axis=0)
        expected = 2 * (nb.var(axis=0) + 0.001 ** 2) / (k + 1)
        assert np.all(v > expected / 2) and np.all(v < expected * 2)
        var.append(v)
    assert all(np.all(a > b) for a, b in zip(var, var[1:]))


def test_determinism():
    cluster = rng(17).normal(size=(20, 3))
    a = generate_points(cluster, 100, 3, 5, ShadowConfig(), 3, rng(99))
    b = generate_points(cluster, 100, 3, 5, ShadowConfig(), 3, rng(99))
    assert np.array_equal(a, b)
