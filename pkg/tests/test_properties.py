"""Sublinear-expectation properties of the tree value on random full-history payoffs."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gexpect import payoffs as P
from gexpect.domain import ScalarInterval
from gexpect.noise import Rademacher
from gexpect.solver import solve_lattice, solve_tree

from helpers import random_pair

TOL = 1e-12
D = ScalarInterval(0.04, 0.25)
RAD = Rademacher(1)


def value(F, n, grid=None):
    return solve_tree(F, grid if grid is not None else D.sqrt_grid(2), RAD, n).value


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_monotone(seed, n):
    F, _, H = random_pair(seed, n)
    assert value(F, n) <= value(F + H, n) + TOL


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_subadditive(seed, n):
    F, G, _ = random_pair(seed, n)
    assert value(F + G, n) <= value(F, n) + value(G, n) + TOL


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.floats(0.0, 10.0))
def test_positively_homogeneous(seed, n, lam):
    F, _, _ = random_pair(seed, n)
    v = value(F, n)
    assert abs(value(F.scaled(lam), n) - lam * v) <= TOL * max(1.0, abs(lam * v))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_domain_and_grid_monotone(seed, n):
    F, _, _ = random_pair(seed, n)
    small = ScalarInterval(0.09, 0.25).sqrt_grid(1)  # {0.3, 0.5}
    big = D.sqrt_grid(3)  # {0.2, 0.3, 0.4, 0.5}
    assert value(F, n, small) <= value(F, n, big) + TOL
    assert value(F, n, D.sqrt_grid(1)) <= value(F, n, D.sqrt_grid(2)) + TOL


@pytest.mark.parametrize("c", [-2.0, 0.0, 0.7])
def test_constant_plus_payoff(c):
    # translation: V(F + c) = V(F) + c
    F, _, _ = random_pair(3, 4)
    assert abs(value(F + P.constant(c), 4) - value(F, 4) - c) <= TOL


def test_lattice_sublinear_markov():
    n = 10
    F, G = P.call(0.05), P.put(-0.1)
    v = lambda X: solve_lattice(X, D.sqrt_grid(3), RAD, n, D).value
    assert v(F + G) <= v(F) + v(G) + TOL
    assert abs(v(F.scaled(3.0)) - 3.0 * v(F)) <= TOL
    assert v(F) <= v(F + P.square()) + TOL
