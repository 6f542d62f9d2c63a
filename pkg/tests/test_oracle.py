import math

import numpy as np
import pytest

from gexpect.oracle import (PdeGrid, PolicyIterationError, StabilityError, barenblatt_with_error,
                            closed_form_extremal, solve_barenblatt)

CALL = lambda x: np.maximum(x, 0.0)
NEG_ABS = lambda x: -np.abs(x)
GRID = PdeGrid.default(0.25)


def test_closed_form_values():
    assert abs(closed_form_extremal(CALL, "convex", 0.04, 0.25) - 0.5 / math.sqrt(2 * math.pi)) < 1e-12
    assert abs(closed_form_extremal(NEG_ABS, "concave", 0.04, 0.25) + 0.2 * math.sqrt(2 / math.pi)) < 1e-12
    for shape in ("convex", "concave"):
        assert closed_form_extremal(lambda x: np.full(np.shape(x), 1.7), shape, 0.04, 0.25) == pytest.approx(1.7)
    with pytest.raises(ValueError):
        closed_form_extremal(CALL, "linear", 0.04, 0.25)


def test_heat_equation_case():
    assert abs(solve_barenblatt(CALL, 0.25, 0.25, GRID) - 0.199471) <= 1e-3


def test_linear_terminal_is_martingale():
    assert abs(solve_barenblatt(lambda x: 2 * x, 0.04, 0.25, GRID)) < 1e-12


def test_square_takes_max_variance():
    assert abs(solve_barenblatt(lambda x: x * x, 0.04, 0.25, GRID) - 0.25) <= 1e-3


@pytest.mark.parametrize("g,shape", [(CALL, "convex"), (NEG_ABS, "concave"), (np.abs, "convex"),
                                     (lambda x: np.exp(0.5 * x), "convex")])
def test_oracles_agree(g, shape):
    assert abs(solve_barenblatt(g, 0.04, 0.25, GRID) - closed_form_extremal(g, shape, 0.04, 0.25)) <= 1e-3


def test_comparison_principle():
    g1 = lambda x: np.sin(3 * x)
    g2 = lambda x: np.sin(3 * x) + 0.1 * np.maximum(x, 0)
    coarse = PdeGrid(-3.0, 3.0, 201, 200)
    assert solve_barenblatt(g1, 0.04, 0.25, coarse) <= solve_barenblatt(g2, 0.04, 0.25, coarse)


def test_nonconvex_between_extremes():
    g = lambda x: np.sin(3 * x)
    v = solve_barenblatt(g, 0.04, 0.25, PdeGrid(-3.0, 3.0, 401, 400))
    lo = max(closed_form_extremal(g, "concave", 0.04, 0.25), closed_form_extremal(g, "convex", 0.04, 0.25))
    assert v >= lo - 1e-4


def test_richardson_estimate_shrinks():
    g = PdeGrid(-3.0, 3.0, 101, 100)
    _, e1 = barenblatt_with_error(CALL, 0.04, 0.25, g)
    _, e2 = barenblatt_with_error(CALL, 0.04, 0.25, g.refined())
    assert e2 < e1


def test_explicit_stability_enforced():
    with pytest.raises(StabilityError):
        solve_barenblatt(CALL, 0.04, 0.25, PdeGrid(-3.0, 3.0, 801, 100, theta=0.0))
    # a stable explicit grid runs and is close to the closed form
    v = solve_barenblatt(CALL, 0.04, 0.25, PdeGrid(-3.0, 3.0, 121, 1000, theta=0.0, rannacher_steps=0))
    assert abs(v - 0.199471) < 5e-3


def test_grid_validation():
    with pytest.raises(ValueError):
        PdeGrid(-1.0, 1.0, 101, 10, theta=1.5)
    with pytest.raises(ValueError):
        PdeGrid(1.0, -1.0, 101, 10)
    with pytest.raises(ValueError):
        solve_barenblatt(CALL, 0.3, 0.2, GRID)


def test_policy_iteration_error_reports_residual(monkeypatch):
    import gexpect.oracle as O
    monkeypatch.setattr(O, "MAX_SWEEPS", 1)
    with pytest.raises(PolicyIterationError):
        solve_barenblatt(CALL, 0.04, 0.25, PdeGrid(-3.0, 3.0, 51, 5))
