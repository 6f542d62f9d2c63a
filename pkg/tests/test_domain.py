import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gexpect.domain import (ConvexHull, DiagonalBox, IsotropicInterval, NotPSDError, ScalarInterval,
                            contains, domain_from_config, is_psd, matrix_sqrt, operator_norm, sqrt_grid, sym)


def test_scalar_contains():
    D = ScalarInterval(0.04, 0.25)
    assert contains(D, [[0.1]])
    assert not contains(D, [[0.3]])
    assert contains(D, [[0.04]]) and contains(D, [[0.25]])


def test_hull_contains_midpoint():
    D = ConvexHull([np.diag([1.0, 1.0]), np.diag([4.0, 1.0])])
    assert contains(D, np.diag([2.5, 1.0]))
    assert not contains(D, np.diag([2.5, 2.0]))
    assert not contains(D, np.diag([5.0, 1.0]))


def test_contains_dimension_mismatch():
    with pytest.raises(ValueError):
        contains(ScalarInterval(0.04, 0.25), np.eye(2))


def test_matrix_sqrt_examples():
    assert np.allclose(matrix_sqrt(np.eye(2)), np.eye(2))
    assert np.allclose(matrix_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    R = matrix_sqrt(A)
    assert operator_norm(R @ R - A) <= 1e-10 * operator_norm(A)
    assert is_psd(R)


def test_matrix_sqrt_rejects_indefinite():
    with pytest.raises(NotPSDError):
        matrix_sqrt(np.diag([1.0, -0.5]))
    # round-off sized negatives are clamped
    R = matrix_sqrt(np.diag([1.0, -1e-13]))
    assert R[1, 1] == 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_matrix_sqrt_resquares(d, seed):
    g = np.random.default_rng(seed)
    B = g.standard_normal((d, d))
    A = B @ B.T
    R = matrix_sqrt(A)
    assert operator_norm(R @ R - A) <= 1e-10 * max(operator_norm(A), 1.0)


def test_sym_is_exactly_symmetric():
    A = sym([[1.0, 2.0], [2.0000001, 3.0]])
    assert np.array_equal(A, A.T)


def test_operator_norm_examples():
    assert operator_norm(np.eye(3)) == 1.0
    assert operator_norm(np.diag([2.0, 5.0])) == 5.0
    assert operator_norm([[1.0, 2.0], [2.0, 1.0]]) == 3.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_operator_norm_dominates_spectral_radius(d, seed):
    g = np.random.default_rng(seed)
    A = sym(g.standard_normal((d, d)))
    assert operator_norm(A) >= np.max(np.abs(np.linalg.eigvalsh(A))) - 1e-12


def test_scalar_grid_endpoints():
    G = sqrt_grid(ScalarInterval(0.04, 0.25), 1)
    assert G.controls[:, 0, 0].tolist() == [0.2, 0.5]
    assert sqrt_grid(ScalarInterval(1.0, 1.0), 7).controls[:, 0, 0].tolist() == [1.0]


def test_scalar_grid_mesh():
    D = ScalarInterval(0.04, 0.25)
    for r in (1, 2, 4, 8):
        pts = D.sqrt_grid(r).controls[:, 0, 0]
        assert len(pts) == r + 1
        assert np.allclose(np.diff(pts), (0.5 - 0.2) / r)


def test_isotropic_grid():
    G = sqrt_grid(IsotropicInterval(2, 1.0, 4.0), 2)
    scal = G.controls[:, 0, 0]
    assert np.allclose(scal, [1.0, np.sqrt(2.5), 2.0])
    for c in G.controls:
        assert np.allclose(c, c[0, 0] * np.eye(2))


def test_diagonal_box_grid():
    D = DiagonalBox((0.04, 1.0), (0.25, 4.0))
    G = D.sqrt_grid(2)
    assert G.size == 9
    assert G.is_diagonal()
    assert D.norm() == 4.0


@pytest.mark.parametrize("D", [
    ScalarInterval(0.04, 0.25),
    IsotropicInterval(2, 0.5, 2.0),
    DiagonalBox((0.1, 0.2, 0.3), (0.4, 0.5, 0.6)),
    ConvexHull([np.diag([1.0, 1.0]), np.array([[2.0, 0.5], [0.5, 1.0]]), np.diag([0.5, 3.0])]),
])
@pytest.mark.parametrize("r", [1, 3])
def test_grid_squares_in_domain(D, r):
    G = D.sqrt_grid(r)
    for g in G.controls:
        assert is_psd(g)
        assert D.contains(g @ g)


def test_hull_grid_contains_generators():
    gens = [np.diag([1.0, 1.0]), np.array([[2.0, 0.5], [0.5, 1.0]])]
    G = ConvexHull(gens).sqrt_grid(2)
    sq = G.squares()
    for A in gens:
        assert min(operator_norm(s - A) for s in sq) < 1e-10
    assert G.size == 3


def test_grid_refinement_superset():
    D = ScalarInterval(0.04, 0.25)
    coarse = set(np.round(D.sqrt_grid(2).controls[:, 0, 0], 12))
    fine = set(np.round(D.sqrt_grid(4).controls[:, 0, 0], 12))
    assert coarse <= fine


def test_invalid_domains():
    with pytest.raises(ValueError):
        ScalarInterval(0.3, 0.25)
    with pytest.raises(ValueError):
        ScalarInterval(-0.1, 0.25)
    with pytest.raises(NotPSDError):
        ConvexHull([np.diag([1.0, -1.0])])
    with pytest.raises(ValueError):
        sqrt_grid(ScalarInterval(0.04, 0.25), 0)


def test_domain_config_roundtrip():
    for D in (ScalarInterval(0.04, 0.25), IsotropicInterval(2, 1.0, 4.0), DiagonalBox((0.1,), (0.2,)),
              ConvexHull([np.eye(2)])):
        assert domain_from_config(D.to_config()) == D
