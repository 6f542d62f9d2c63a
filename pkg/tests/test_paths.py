import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gexpect.paths import DiscretePathPair, interpolate, predictable_variation, read_csv, sup_norm, write_csv


def pair(u, v=None):
    u = np.asarray(u, dtype=float)
    if v is None:
        v = np.zeros(len(u))
    return DiscretePathPair(u, v)


def test_midpoint():
    W = interpolate(pair([0.0, 1.0, 0.0]))
    u, _ = W(0.25)
    assert u[0] == 0.5


def test_zero_path():
    W = interpolate(pair([0.0, 0.0, 0.0, 0.0]))
    u, v = W(np.linspace(0, 1, 17))
    assert np.all(u == 0) and np.all(v == 0)


def test_knots_exact_and_endpoint():
    g = np.random.default_rng(0)
    n = 7
    u = np.concatenate([[0.0], g.standard_normal(n)])
    v = np.concatenate([[0.0], np.cumsum(g.random(n))])
    W = interpolate(pair(u, v))
    for k in range(n + 1):
        uk, vk = W(k / n)
        assert uk[0] == u[k] and vk[0, 0] == v[k]


def test_out_of_range():
    W = interpolate(pair([0.0, 1.0]))
    for t in (-0.1, 1.1, float("nan")):
        with pytest.raises(ValueError):
            W(t)


def test_must_start_at_origin():
    with pytest.raises(ValueError):
        pair([1.0, 0.0])
    with pytest.raises(ValueError):
        DiscretePathPair(np.zeros(3), [0.1, 0.2, 0.3])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_interpolation_is_linear(n, a, b, seed):
    g = np.random.default_rng(seed)
    p = DiscretePathPair(np.vstack([np.zeros((1, 2)), g.standard_normal((n, 2))]),
                         np.vstack([np.zeros((1, 2, 2)), g.standard_normal((n, 2, 2))]))
    q = DiscretePathPair(np.vstack([np.zeros((1, 2)), g.standard_normal((n, 2))]),
                         np.vstack([np.zeros((1, 2, 2)), g.standard_normal((n, 2, 2))]))
    t = g.random(11)
    lhs_u, lhs_v = interpolate(p.scale(a) + q.scale(b))(t)
    pu, pv = interpolate(p)(t)
    qu, qv = interpolate(q)(t)
    assert np.allclose(lhs_u, a * pu + b * qu, atol=1e-12)
    assert np.allclose(lhs_v, a * pv + b * qv, atol=1e-12)


def test_sup_norm_examples():
    assert sup_norm(interpolate(pair([0.0, 1.0, 0.0]))) == (1.0, 0.0)
    p = DiscretePathPair(np.zeros((3, 2)), np.array([np.zeros((2, 2)), np.eye(2) / 2, np.eye(2)]))
    assert sup_norm(interpolate(p)) == (0.0, 1.0)
    assert sup_norm(interpolate(pair([0.0, 0.0]))) == (0.0, 0.0)


def test_sup_norm_matches_dense_evaluation():
    g = np.random.default_rng(4)
    p = pair(np.concatenate([[0.0], g.standard_normal(6)]))
    q = pair(np.concatenate([[0.0], g.standard_normal(6)]))
    t = np.linspace(0, 1, 6001)
    dense = np.max(np.abs(interpolate(p)(t)[0] - interpolate(q)(t)[0]))
    assert abs(dense - np.max(np.abs(p.u - q.u))) < 1e-12


def test_predictable_variation_examples():
    qv = predictable_variation(4, [np.array([[0.5]])] * 4)
    assert np.allclose(qv[:, 0, 0], 0.0625 * np.arange(5))
    assert np.all(predictable_variation(3, [np.zeros((1, 1))] * 3) == 0)
    qv = predictable_variation(2, [np.diag([1.0, 2.0]), np.diag([2.0, 1.0])])
    assert np.array_equal(qv[2], np.diag([2.5, 2.5]))


def test_predictable_variation_psd_increments():
    g = np.random.default_rng(5)
    phis = [g.standard_normal((3, 3)) for _ in range(6)]
    phis = [p + p.T for p in phis]
    qv = predictable_variation(6, phis)
    assert DiscretePathPair(np.zeros((7, 3)), qv).increments_psd()


def test_predictable_variation_errors():
    with pytest.raises(ValueError):
        predictable_variation(2, [np.eye(2)])
    with pytest.raises(ValueError):
        predictable_variation(2, [np.eye(2), np.eye(3)])


def test_csv_roundtrip():
    g = np.random.default_rng(6)
    u = np.vstack([np.zeros((1, 2)), g.standard_normal((4, 2))])
    v = np.vstack([np.zeros((1, 2, 2)), np.cumsum(np.tile(np.eye(2), (4, 1, 1)), axis=0)])
    p = DiscretePathPair(u, v)
    buf = io.StringIO()
    write_csv(p, buf)
    assert buf.getvalue().splitlines()[0] == "k,t,u0,u1,v00,v01,v10,v11"
    buf.seek(0)
    q = read_csv(buf)
    assert np.array_equal(q.u, p.u) and np.array_equal(q.v, p.v)
