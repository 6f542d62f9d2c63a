"""Continuous-time reference values in one dimension.

For a terminal payoff g(B_1) with volatility uncertainty [a_low, a_high] the value
solves the Barenblatt equation

    w_t + 1/2 * max_{s in [a_low, a_high]} s * w_xx = 0,    w(1, x) = g(x),

solved here backwards with theta time stepping and policy iteration on the sign
of w_xx. Convex (concave) g reduce to the constant extreme variance a_high (a_low),
which gives a closed form by one-dimensional quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.linalg import solve_banded

MAX_SWEEPS = 50
ZMAX = 12.0


class StabilityError(ValueError):
    pass


class PolicyIterationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PdeGrid:
    x_min: float
    x_max: float
    nx: int
    nt: int
    theta: float = 0.5
    rannacher_steps: int = 4

    def __post_init__(self):
        if not (0.0 <= self.theta <= 1.0):
            raise ValueError("theta must lie in [0, 1]")
        if self.nx < 5 or self.nt < 1 or self.x_max <= self.x_min:
            raise ValueError("invalid PDE grid")

    @classmethod
    def default(cls, a_high: float, nx: int = 801, nt: int = 2000, theta: float = 0.5) -> "PdeGrid":
        half = 6.0 * math.sqrt(max(a_high, 1e-12))
        return cls(-half, half, nx, nt, theta)

    def refined(self) -> "PdeGrid":
        return PdeGrid(self.x_min, self.x_max, 2 * self.nx - 1, 2 * self.nt, self.theta,
                       2 * self.rannacher_steps)


def _second_difference(w: np.ndarray, dx: float) -> np.ndarray:
    out = np.zeros_like(w)
    out[1:-1] = (w[2:] - 2 * w[1:-1] + w[:-2]) / dx ** 2
    return out


def solve_barenblatt(g: Callable, a_low: float, a_high: float, grid: PdeGrid,
                     x0: float = 0.0) -> float:
    """w(0, x0) for the Barenblatt equation with terminal data g."""
    if a_low > a_high or a_low < 0:
        raise ValueError("need 0 <= a_low <= a_high")
    x = np.linspace(grid.x_min, grid.x_max, grid.nx)
    dx = x[1] - x[0]
    dt = 1.0 / grid.nt
    if grid.theta == 0.0 and dt > dx * dx / max(a_high, 1e-300):
        raise StabilityError(f"explicit scheme unstable: dt={dt:.3e} > dx^2/a_high={dx * dx / a_high:.3e}")
    w = np.asarray(g(x), dtype=float)
    nx = grid.nx
    # first steps fully implicit (Rannacher start-up) to damp the payoff kink
    for step in range(grid.nt):
        theta = 1.0 if step < grid.rannacher_steps else grid.theta
        w = _theta_step(w, dx, dt, theta, a_low, a_high, nx)
    return float(np.interp(x0, x, w))


def _theta_step(w_old, dx, dt, theta, a_low, a_high, nx):
    lap_old = _second_difference(w_old, dx)
    r = dt / dx ** 2
    s = np.where(lap_old >= 0, a_high, a_low)
    w = w_old
    for sweep in range(MAX_SWEEPS):
        rhs = w_old + (1 - theta) * 0.5 * dt * s * lap_old
        coef = theta * 0.5 * r * s
        w_new = _solve_with_linear_bc(rhs, coef, nx)
        lap = theta * _second_difference(w_new, dx) + (1 - theta) * lap_old
        s_new = np.where(lap >= 0, a_high, a_low)
        # sign flips where w_xx is at round-off level leave the iterate unchanged
        if np.array_equal(s_new, s) or np.max(np.abs(w_new - w)) <= 1e-14 * (1.0 + np.max(np.abs(w_new))):
            return w_new
        s, w = s_new, w_new
    resid = float(np.max(np.abs(w_new - w)))
    raise PolicyIterationError(f"policy iteration did not settle in {MAX_SWEEPS} sweeps (residual {resid:.3e})")


def _solve_with_linear_bc(rhs, coef, nx):
    """Tridiagonal solve with w_0 = 2 w_1 - w_2 and w_{N} = 2 w_{N-1} - w_{N-2} substituted."""
    m = nx - 2
    lo = np.zeros(m)
    di = np.zeros(m)
    up = np.zeros(m)
    c = coef[1:-1]
    di[:] = 1 + 2 * c
    lo[1:] = -c[1:]
    up[:-1] = -c[:-1]
    # row 1: -c w_0 + (1+2c) w_1 - c w_2 with w_0 = 2 w_1 - w_2 collapses to w_1
    di[0], up[0] = 1.0, 0.0
    di[-1], lo[-1] = 1.0, 0.0
    band = np.zeros((3, m))
    band[0, 1:] = up[:-1]
    band[1] = di
    band[2, :-1] = lo[1:]
    interior = solve_banded((1, 1), band, rhs[1:-1])
    w = np.empty(nx)
    w[1:-1] = interior
    w[0] = 2 * w[1] - w[2]
    w[-1] = 2 * w[-2] - w[-3]
    return w


def barenblatt_with_error(g: Callable, a_low: float, a_high: float, grid: PdeGrid,
                          x0: float = 0.0) -> tuple[float, float]:
    """(value, Richardson error estimate) from the grid and its 2x refinement."""
    coarse = solve_barenblatt(g, a_low, a_high, grid, x0)
    fine = solve_barenblatt(g, a_low, a_high, grid.refined(), x0)
    return fine, abs(fine - coarse) / 3.0


def closed_form_extremal(g: Callable, shape: str, a_low: float, a_high: float) -> float:
    """E g(sqrt(a) Z) at the extreme variance selected by the declared shape."""
    if shape == "convex":
        a = a_high
    elif shape == "concave":
        a = a_low
    else:
        raise ValueError("shape must be 'convex' or 'concave'")
    if a == 0.0:
        return float(np.asarray(g(np.zeros(1)), dtype=float)[0])
    sd = math.sqrt(a)
    # adaptive quadrature copes with kinks that defeat Gauss-Hermite rules
    f = lambda z: float(np.asarray(g(np.array([sd * z])), dtype=float)[0]) * math.exp(-0.5 * z * z)
    val, _ = quad(f, -ZMAX, ZMAX, points=[0.0], limit=200, epsabs=1e-13, epsrel=1e-12)
    return val / math.sqrt(2 * math.pi)
