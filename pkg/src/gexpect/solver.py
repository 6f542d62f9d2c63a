"""Backward dynamic programming for the discrete-time value V_n.

Two solvers share one recursion

    J_n = F(W_n(u, v)),
    J_k = max_{gamma in grid} sum_w  w * J_{k+1}(.., u_k + gamma x_w / sqrt(n), .., v_k + gamma^2 / n),

with the supremum over sqrt(D) replaced by a finite :class:`ControlGrid` and the
integral over the noise law by a quadrature rule.

* :func:`solve_tree` enumerates every history for a finite-support law. It is exact
  for the grid-restricted problem and accepts any payoff, including full-history ones.
* :func:`solve_lattice` works on a rectangular grid over the Markov state the payoff
  declares (terminal ``(u, v)``, plus running max or running time integral of u^1),
  interpolating J_{k+1} multilinearly at the shifted states.

Argmax ties go to the lowest grid index.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.stats import norm as _normal

from .domain import ControlGrid, UncertaintyDomain
from .noise import FiniteSupport, NoiseDistribution, QuadratureRule
from .payoffs import Markov, PayoffFunctional

DEFAULT_LEAF_BUDGET = 10_000_000
DEFAULT_STATE_BUDGET = 5_000_000
EXTRAPOLATION_CELLS = 2
MAX_DIM = 4  # state and leaf counts grow like (.)^d; larger d is out of reach for exact solves
_CHUNK = 1 << 16


class BudgetExceededError(RuntimeError):
    pass


class ExtrapolationError(RuntimeError):
    pass


# --------------------------------------------------------------------------- #
# results
# --------------------------------------------------------------------------- #

@dataclass
class TreePolicy:
    """Argmax control index per stage, indexed by history id.

    The history id after stage k+1 is ``h * (m * q) + c * q + x`` where ``c`` is the
    chosen control index and ``x`` the realized atom index.
    """

    stages: list
    m: int
    q: int

    def control(self, k: int, hist: np.ndarray) -> np.ndarray:
        return self.stages[k][hist]

    def advance(self, hist, c, x):
        return hist * (self.m * self.q) + c * self.q + x


@dataclass
class ValueAndPolicy:
    value: float
    n: int
    solver_kind: str
    grid: ControlGrid
    policy: object
    value_function: list
    noise: NoiseDistribution
    quad: QuadratureRule
    payoff: Optional[PayoffFunctional] = None
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"value": self.value, "n": self.n, "solver_kind": self.solver_kind,
                "grid_size": self.grid.size, "grid_resolution": self.grid.resolution,
                "diagnostics": self.diagnostics}


# --------------------------------------------------------------------------- #
# tree solver
# --------------------------------------------------------------------------- #

def _leaf_digits(ids: np.ndarray, n: int, m: int, q: int):
    c = np.empty((len(ids), n), dtype=np.int64)
    x = np.empty((len(ids), n), dtype=np.int64)
    ids = ids.copy()
    for j in range(n - 1, -1, -1):
        ids, x[:, j] = np.divmod(ids, q)
        ids, c[:, j] = np.divmod(ids, m)
    return c, x


def _knots(inc_u, inc_v, c, x):
    """Cumulative knots for histories given control and atom indices ``(N, n)``."""
    N, n = c.shape
    d = inc_u.shape[-1]
    u = np.zeros((N, n + 1, d))
    v = np.zeros((N, n + 1, d, d))
    np.cumsum(inc_u[c, x], axis=1, out=u[:, 1:])
    np.cumsum(inc_v[c], axis=1, out=v[:, 1:])
    return u, v


def _increments(grid: ControlGrid, atoms: np.ndarray, n: int):
    inc_u = np.einsum("mij,qj->mqi", grid.controls, atoms) / math.sqrt(n)
    inc_v = grid.squares() / n
    return inc_u, inc_v


def solve_tree(F: PayoffFunctional, grid: ControlGrid, nu: NoiseDistribution, n: int,
               budget: int = DEFAULT_LEAF_BUDGET) -> ValueAndPolicy:
    """Exact value of the grid-restricted problem by full-history enumeration."""
    if not isinstance(nu, FiniteSupport):
        raise TypeError("solve_tree needs a finite-support noise law")
    if nu.dim != grid.dim or F.dim != grid.dim:
        raise ValueError("payoff, grid and noise dimensions differ")
    if grid.dim > MAX_DIM:
        raise ValueError(f"exact solvers support d <= {MAX_DIM}, got d={grid.dim}")
    if n < 1:
        raise ValueError("n must be >= 1")
    m, q = grid.size, len(nu.probs)
    leaves = (m * q) ** n
    if leaves > budget:
        raise BudgetExceededError(
            f"tree needs (|grid| * |support|)^n = ({m}*{q})^{n} = {leaves} leaves, budget {budget}; "
            "use the lattice solver, a coarser control grid or a smaller n")
    inc_u, inc_v = _increments(grid, nu.atoms, n)

    vals = np.empty(leaves)
    for start in range(0, leaves, _CHUNK):
        ids = np.arange(start, min(start + _CHUNK, leaves), dtype=np.int64)
        c, x = _leaf_digits(ids, n, m, q)
        u, v = _knots(inc_u, inc_v, c, x)
        vals[start:start + len(ids)] = F.values(u, v)

    probs = nu.probs
    value_function = [None] * (n + 1)
    value_function[n] = vals
    stages = [None] * n
    for k in range(n - 1, -1, -1):
        cont = vals.reshape(-1, m, q) @ probs
        a = np.argmax(cont, axis=1)
        vals = np.take_along_axis(cont, a[:, None], axis=1)[:, 0]
        stages[k] = a.astype(np.int32)
        value_function[k] = vals
    policy = TreePolicy(stages, m, q)
    return ValueAndPolicy(
        value=float(vals[0]), n=n, solver_kind="tree", grid=grid, policy=policy,
        value_function=value_function, noise=nu, quad=nu.quadrature(2), payoff=F,
        diagnostics={"leaves": leaves, "grid_size": m, "support_size": q,
                     "grid_resolution": grid.resolution})


def policy_expectation(vp: ValueAndPolicy, F: Optional[PayoffFunctional] = None) -> float:
    """Exact forward expectation of F under the extracted tree policy."""
    if vp.solver_kind != "tree":
        raise ValueError("exact forward expectation is only available for tree solutions")
    F = F or vp.payoff
    nu, pol, n = vp.noise, vp.policy, vp.n
    q = pol.q
    inc_u, inc_v = _increments(vp.grid, nu.atoms, n)
    hist = np.zeros(1, dtype=np.int64)
    prob = np.ones(1)
    cs = np.zeros((1, 0), dtype=np.int64)
    xs = np.zeros((1, 0), dtype=np.int64)
    for k in range(n):
        c = pol.control(k, hist).astype(np.int64)
        hist = (pol.advance(hist, c, 0)[:, None] + np.arange(q)[None, :]).reshape(-1)
        prob = (prob[:, None] * nu.probs[None, :]).reshape(-1)
        cs = np.repeat(np.concatenate([cs, c[:, None]], axis=1), q, axis=0)
        xs = np.concatenate([np.repeat(xs, q, axis=0), np.tile(np.arange(q), len(c))[:, None]], axis=1)
    u, v = _knots(inc_u, inc_v, cs, xs)
    return float(prob @ F.values(u, v))


# --------------------------------------------------------------------------- #
# lattice solver
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class StateGridSpec:
    """Truncation and resolution of the lattice.

    ``cells_per_step``: u-grid cells per largest one-step move ``gamma_max / sqrt(n)``
    (so the extremal Rademacher move lands on nodes). ``v_cells_per_step``: v-grid cells
    per largest QV increment ``gamma_max^2 / n``. ``margin_sd``: truncation
    ``|u| <= margin_sd * sqrt(||D||)``.
    """

    margin_sd: float = 6.0
    cells_per_step: int = 4
    v_cells_per_step: int = 1
    budget: int = DEFAULT_STATE_BUDGET

    def refined(self) -> "StateGridSpec":
        return replace(self, cells_per_step=2 * self.cells_per_step,
                       v_cells_per_step=2 * self.v_cells_per_step)


@dataclass(frozen=True)
class Axis:
    name: str
    origin: float
    step: float
    count: int

    @property
    def nodes(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.count)


class StateLattice:
    """Rectangular grid over the reduced Markov state.

    Coordinates are ``u_0..u_{d-1}``, then ``v_00..v_{d-1,d-1}`` (diagonal QV) when the
    payoff uses QV, then one extra coordinate for running max / time integral of u^1.
    """

    def __init__(self, F: PayoffFunctional, grid: ControlGrid, n: int, domain_norm: float,
                 spec: StateGridSpec = StateGridSpec()):
        if F.markov is Markov.NONE:
            raise ValueError(f"payoff {F.name!r} declares no Markov state; use solve_tree")
        if not grid.is_diagonal():
            raise ValueError("the lattice solver supports diagonal controls only")
        self.F, self.grid, self.n, self.spec = F, grid, n, spec
        self.d = d = grid.dim
        self.gdiag = np.einsum("mii->mi", grid.controls)  # (m, d)
        gmax = np.max(self.gdiag, axis=0)
        U = spec.margin_sd * math.sqrt(domain_norm)
        self.truncation = U
        axes = []
        self.du = np.zeros(d)
        for i in range(d):
            if gmax[i] == 0 or U == 0:
                axes.append(Axis(f"u{i}", 0.0, 1.0, 1))
                continue
            du = gmax[i] / (math.sqrt(n) * spec.cells_per_step)
            J = int(math.ceil(U / du - 1e-9))
            axes.append(Axis(f"u{i}", -J * du, du, 2 * J + 1))
            self.du[i] = du
        self.n_u = d
        self.uses_qv = F.uses_qv
        if F.uses_qv:
            for i in range(d):
                vmax = gmax[i] ** 2
                if vmax == 0:
                    axes.append(Axis(f"v{i}{i}", 0.0, 1.0, 1))
                else:
                    cnt = n * spec.v_cells_per_step
                    axes.append(Axis(f"v{i}{i}", 0.0, vmax / cnt, cnt + 1))
        self.extra = F.markov in (Markov.RUNNING_MAX, Markov.PATH_AVERAGE)
        if self.extra:
            a0 = axes[0]
            J = (a0.count - 1) // 2
            if F.markov is Markov.RUNNING_MAX:
                axes.append(Axis("max_u0", 0.0, a0.step, J + 1))
            else:
                axes.append(Axis("avg_u0", a0.origin, a0.step, a0.count))
        self.axes = axes
        self.shape = tuple(a.count for a in axes)
        self.size = int(np.prod(self.shape))
        if self.size > spec.budget:
            raise BudgetExceededError(f"lattice has {self.size} states, budget {spec.budget}")
        self.boundary_probability = float(min(1.0, 4 * d * _normal.sf(spec.margin_sd)))

    # geometry ------------------------------------------------------------
    def nodes(self, sl: slice = slice(None)) -> np.ndarray:
        idx = np.arange(self.size)[sl]
        multi = np.unravel_index(idx, self.shape)
        return np.stack([a.origin + a.step * i for a, i in zip(self.axes, multi)], axis=-1)

    def split(self, states: np.ndarray):
        d = self.d
        u = states[..., :d]
        if self.uses_qv:
            vd = states[..., d:2 * d]
        else:
            vd = np.zeros_like(u)
        extra = states[..., -1] if self.extra else None
        return u, vd, extra

    def transition(self, states: np.ndarray, c: int, x: np.ndarray) -> np.ndarray:
        """States after control ``c`` and noise node ``x`` (diagonal dynamics)."""
        d, n = self.d, self.n
        g = self.gdiag[c]
        out = states.copy()
        u_new = states[..., :d] + g * x / math.sqrt(n)
        out[..., :d] = u_new
        if self.uses_qv:
            out[..., d:2 * d] += g * g / n
        if self.F.markov is Markov.RUNNING_MAX:
            out[..., -1] = np.maximum(states[..., -1], u_new[..., 0])
        elif self.F.markov is Markov.PATH_AVERAGE:
            out[..., -1] = states[..., -1] + 0.5 * (states[..., 0] + u_new[..., 0]) / n
        return out

    def max_shift_cells(self, quad: QuadratureRule) -> np.ndarray:
        """Largest one-step move per axis, in cells."""
        xmax = np.max(np.abs(quad.nodes), axis=0)
        cells = []
        for j, a in enumerate(self.axes):
            if a.count == 1:
                cells.append(0.0)
                continue
            if j < self.d:
                s = np.max(self.gdiag[:, j]) * xmax[j] / math.sqrt(self.n)
            elif self.uses_qv and j < 2 * self.d:
                s = np.max(self.gdiag[:, j - self.d]) ** 2 / self.n
            elif self.F.markov is Markov.RUNNING_MAX:
                s = np.max(self.gdiag[:, 0]) * xmax[0] / math.sqrt(self.n)
            else:
                s = (2 * self.truncation + np.max(self.gdiag[:, 0]) * xmax[0]) / (2 * self.n)
            cells.append(s / a.step)
        return np.array(cells)

    def terminal_values(self) -> np.ndarray:
        vals = np.empty(self.size)
        for start in range(0, self.size, _CHUNK):
            st = self.nodes(slice(start, start + _CHUNK))
            u, vd, extra = self.split(st)
            v = vd[..., :, None] * np.eye(self.d)
            vals[start:start + len(st)] = self.F.state_values(u, v, extra)
        return vals.reshape(self.shape)

    def root_index(self) -> tuple:
        idx = []
        for a in self.axes:
            i = int(round(-a.origin / a.step)) if a.count > 1 else 0
            idx.append(i)
        return tuple(idx)


def interpolate_table(table: np.ndarray, axes: list, query: np.ndarray,
                      margin: Optional[np.ndarray] = None):
    """Multilinear interpolation on a uniform grid with linear extrapolation.

    Returns ``(values, inside)`` where ``inside`` flags queries within ``margin`` cells of
    the grid on every axis.
    """
    D = len(axes)
    lead = query.shape[:-1]
    base = np.zeros(lead, dtype=np.int64)
    inside = np.ones(lead, dtype=bool)
    fracs, strides, active = [], [], []
    stride = 1
    strides_all = []
    for a in reversed(axes):
        strides_all.append(stride)
        stride *= a.count
    strides_all = strides_all[::-1]
    for j, a in enumerate(axes):
        if a.count == 1:
            continue
        s = (query[..., j] - a.origin) / a.step
        if margin is not None:
            inside &= (s >= -margin[j] - 1e-9) & (s <= a.count - 1 + margin[j] + 1e-9)
        i = np.clip(np.floor(s), 0, a.count - 2).astype(np.int64)
        f = s - i
        # snap round-off so on-node queries reproduce node values exactly
        f = np.where(np.abs(f) < 1e-12, 0.0, np.where(np.abs(f - 1) < 1e-12, 1.0, f))
        base += i * strides_all[j]
        fracs.append(f)
        strides.append(strides_all[j])
        active.append(j)
    flat = table.reshape(-1)
    if not fracs:
        return np.full(lead, flat[0]), inside
    out = np.zeros(lead)
    for corner in itertools.product((0, 1), repeat=len(fracs)):
        w = np.ones(lead)
        off = base.copy()
        for b, f, st in zip(corner, fracs, strides):
            if b:
                w = w * f
                off += st
            else:
                w = w * (1 - f)
        nz = w != 0
        if np.all(nz):
            out += w * flat[off]
        else:
            out[nz] += w[nz] * flat[off[nz]]
    return out, inside


def _expected_per_control(J_next: np.ndarray, lattice: StateLattice, quad: QuadratureRule,
                          states: np.ndarray, margin: np.ndarray):
    m = lattice.grid.size
    cont = np.zeros(states.shape[:-1] + (m,))
    inside = np.ones(states.shape[:-1], dtype=bool)
    for c in range(m):
        acc = np.zeros(states.shape[:-1])
        for w, x in zip(quad.weights, quad.nodes):
            vals, ok = interpolate_table(J_next, lattice.axes, lattice.transition(states, c, x), margin)
            acc += w * vals
            inside &= ok
        cont[..., c] = acc
    return cont, inside


def backstep(J_next: np.ndarray, lattice: StateLattice, quad: QuadratureRule,
             threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """One stage of the recursion on the lattice: ``(J_k, argmax index)``."""
    margin = lattice.max_shift_cells(quad) + EXTRAPOLATION_CELLS

    def work(rng_):
        st = lattice.nodes(slice(*rng_))
        cont, inside = _expected_per_control(J_next, lattice, quad, st, margin)
        if not np.all(inside):
            raise ExtrapolationError("shifted state beyond the extrapolation margin")
        a = np.argmax(cont, axis=1)
        return np.take_along_axis(cont, a[:, None], axis=1)[:, 0], a

    chunks = [(s, min(s + _CHUNK, lattice.size)) for s in range(0, lattice.size, _CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    vals = np.concatenate([p[0] for p in parts]).reshape(lattice.shape)
    arg = np.concatenate([p[1] for p in parts]).astype(np.int32).reshape(lattice.shape)
    return vals, arg


@dataclass
class LatticePolicy:
    lattice: StateLattice
    tables: list  # J_0..J_n
    node_argmax: list  # per stage
    quad: QuadratureRule

    def state_vector(self, u, vdiag, extra=None) -> np.ndarray:
        parts = [u]
        if self.lattice.uses_qv:
            parts.append(vdiag)
        if self.lattice.extra:
            parts.append(extra[..., None])
        return np.concatenate(parts, axis=-1)

    def control(self, k: int, states: np.ndarray):
        """Argmax control at arbitrary states, evaluated from the interpolated J_{k+1}.

        Returns ``(index, ok)``; ``ok`` is False where the state is more than
        ``EXTRAPOLATION_CELLS`` outside the lattice.
        """
        lat = self.lattice
        margin = lat.max_shift_cells(self.quad) + EXTRAPOLATION_CELLS
        _, ok = interpolate_table(self.tables[k], lat.axes, states,
                                  np.full(len(lat.axes), float(EXTRAPOLATION_CELLS)))
        cont, inside = _expected_per_control(self.tables[k + 1], lat, self.quad, states, margin)
        return np.argmax(cont, axis=-1), ok & inside


def solve_lattice(F: PayoffFunctional, grid: ControlGrid, nu: NoiseDistribution, n: int,
                  domain: UncertaintyDomain, spec: StateGridSpec = StateGridSpec(),
                  quad_order: int = 9, richardson: bool = False, threads: int = 1) -> ValueAndPolicy:
    """Value and policy on the reduced-state lattice."""
    if nu.dim != grid.dim or F.dim != grid.dim:
        raise ValueError("payoff, grid and noise dimensions differ")
    if grid.dim > MAX_DIM:
        raise ValueError(f"exact solvers support d <= {MAX_DIM}, got d={grid.dim}")
    if F.dim > 1 and not domain.is_diagonal():
        raise ValueError("for d >= 2 the lattice solver needs a diagonal uncertainty domain")
    quad = nu.quadrature(quad_order)
    lat = StateLattice(F, grid, n, domain.norm(), spec)
    J = lat.terminal_values()
    tables = [None] * (n + 1)
    args = [None] * n
    tables[n] = J
    for k in range(n - 1, -1, -1):
        J, a = backstep(J, lat, quad, threads)
        tables[k], args[k] = J, a
    root = lat.root_index()
    value = float(tables[0][root])
    diag = {"state_shape": list(lat.shape), "cells_per_step": spec.cells_per_step,
            "v_cells_per_step": spec.v_cells_per_step, "margin_sd": spec.margin_sd,
            "quadrature_nodes": quad.size, "grid_size": grid.size,
            "grid_resolution": grid.resolution,
            "boundary_hit_probability": lat.boundary_probability, "warnings": []}
    if lat.boundary_probability > 1e-6:
        diag["warnings"].append(
            f"truncation at {spec.margin_sd} sd: boundary hit probability ~{lat.boundary_probability:.2e}")
    if richardson:
        fine = solve_lattice(F, grid, nu, n, domain, spec.refined(), quad_order, False, threads)
        diag["value_refined"] = fine.value
        diag["richardson_error"] = (fine.value - value) / 3.0
    policy = LatticePolicy(lat, tables, args, quad)
    return ValueAndPolicy(value=value, n=n, solver_kind="lattice", grid=grid, policy=policy,
                          value_function=tables, noise=nu, quad=quad, payoff=F, diagnostics=diag)


def solve(F: PayoffFunctional, domain: UncertaintyDomain, nu: NoiseDistribution, n: int,
          resolution: int = 4, kind: str = "auto", quad_order: int = 9,
          spec: StateGridSpec = StateGridSpec(), budget: int = DEFAULT_LEAF_BUDGET,
          richardson: bool = False, threads: int = 1) -> ValueAndPolicy:
    """Pick the tree when it fits the leaf budget (finite support), else the lattice."""
    grid = domain.sqrt_grid(resolution)
    if kind == "auto":
        fits = isinstance(nu, FiniteSupport) and (grid.size * len(nu.probs)) ** n <= budget
        kind = "tree" if fits or F.markov is Markov.NONE else "lattice"
    if kind == "tree":
        return solve_tree(F, grid, nu, n, budget)
    if kind == "lattice":
        return solve_lattice(F, grid, nu, n, domain, spec, quad_order, richardson, threads)
    raise ValueError(f"unknown solver kind {kind!r}")
