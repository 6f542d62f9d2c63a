import math

import numpy as np
import pytest

from gexpect.noise import (FiniteSupport, Rademacher, StandardNormal, noise_from_config, quadrature, sample,
                           validate_mgf_bound, validate_moments)


@pytest.mark.parametrize("nu", [StandardNormal(1), StandardNormal(2), StandardNormal(3),
                                Rademacher(1), Rademacher(2), Rademacher(3)])
def test_moments_pass(nu):
    rep = validate_moments(nu)
    assert rep.passed, rep.failures


def test_rademacher_third_moment():
    assert validate_moments(Rademacher(1)).third_abs_moment == 1.0


def test_nonzero_mean_fails():
    nu = FiniteSupport([[1.0], [-0.5]], [0.5, 0.5])
    rep = validate_moments(nu)
    assert not rep.passed
    assert abs(rep.mean[0] - 0.25) < 1e-15


def test_sampled_moments():
    rep = validate_moments(Rademacher(1), sampled=True, count=1_000_000, seed=3)
    assert rep.passed
    with pytest.raises(ValueError):
        validate_moments(Rademacher(1), sampled=True, count=10)


def test_mgf_normal_exact():
    rep = validate_mgf_bound(StandardNormal(1), 2.0, 64)
    assert rep.passed
    assert abs(rep.max_value - math.exp(2.0)) < 1e-9


def test_mgf_rademacher_below_gaussian():
    rep = validate_mgf_bound(Rademacher(1), 2.0, 64)
    assert rep.passed
    assert rep.max_value <= math.exp(2.0)
    vals = [math.cosh(2 / math.sqrt(n)) ** n for n in (1, 2, 4, 8, 16, 32, 64)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert abs(rep.max_value - vals[-1]) < 1e-12


def test_mgf_bounded_support_passes():
    nu = FiniteSupport([[-2.0], [0.5]], [0.2, 0.8])
    assert validate_mgf_bound(nu, 1.5, 256).passed


def test_mgf_bad_args():
    with pytest.raises(ValueError):
        validate_mgf_bound(Rademacher(1), 0.0, 4)


def test_rademacher_quadrature():
    q = quadrature(Rademacher(1), 7)
    assert q.nodes[:, 0].tolist() == [-1.0, 1.0]
    assert q.weights.tolist() == [0.5, 0.5]


def test_normal_quadrature_moments():
    q = quadrature(StandardNormal(1), 5)
    x = q.nodes[:, 0]
    assert abs(q.weights @ x ** 2 - 1) < 1e-12
    assert abs(q.weights @ x ** 4 - 3) < 1e-12
    assert q.exactness_degree == 9
    for k in range(10):
        exact = 0.0 if k % 2 else float(np.prod(np.arange(k - 1, 0, -2))) if k else 1.0
        assert abs(q.weights @ x ** k - exact) < 1e-10


def test_normal_quadrature_2d():
    q = quadrature(StandardNormal(2), 3)
    assert q.size == 9
    assert abs(q.weights.sum() - 1) < 1e-12
    assert np.allclose(np.einsum("q,qi,qj->ij", q.weights, q.nodes, q.nodes), np.eye(2), atol=1e-12)


def test_quadrature_order_too_small():
    with pytest.raises(ValueError):
        quadrature(StandardNormal(1), 1)


def test_sample_determinism_and_empty():
    for nu in (StandardNormal(2), Rademacher(1)):
        assert sample(nu, 5, 0).shape == (0, nu.dim)
        assert np.array_equal(sample(nu, 5, 9000), sample(nu, 5, 9000))
        assert not np.array_equal(sample(nu, 5, 100), sample(nu, 6, 100))


def test_sample_prefix_stable():
    # path i's draw depends only on (seed, i)
    a = sample(StandardNormal(1), 11, 5000)
    b = sample(StandardNormal(1), 11, 9000)
    assert np.array_equal(a, b[:5000])


def test_rademacher_sample_mean():
    x = sample(Rademacher(1), 1, 1_000_000)
    assert set(np.unique(x)) == {-1.0, 1.0}
    assert abs(x.mean()) <= 4 / math.sqrt(1e6)


def test_sampling_agrees_with_quadrature():
    nu = StandardNormal(1)
    f = lambda x: np.tanh(x[:, 0]) ** 2
    x = sample(nu, 2, 1_000_000)
    v = f(x)
    q = nu.quadrature(40)
    assert abs(v.mean() - q.integrate(f(q.nodes))) <= 4 * v.std() / 1e3


def test_finite_support_validation():
    with pytest.raises(ValueError):
        FiniteSupport([[1.0], [-1.0]], [0.5, 0.6])
    with pytest.raises(ValueError):
        FiniteSupport([[1.0], [-1.0]], [1.0, 0.0])


def test_noise_config():
    assert isinstance(noise_from_config({"kind": "normal", "dim": 2}), StandardNormal)
    assert noise_from_config({"kind": "rademacher"}).dim == 1
    with pytest.raises(ValueError):
        noise_from_config({"kind": "cauchy"})
