"""Forward simulation under an extracted policy.

``simulate_discrete`` runs the optimally controlled discrete martingale and its
predictable variation. ``simulate_continuous`` runs the continuous-time martingale
built from the same policy solved with Gaussian noise: a Brownian motion on a
fine grid, with volatility held constant on each coarse step at the policy value
for the coarse skeleton observed so far. Path ``i`` always uses random numbers
addressed by ``(seed, i)``, so results do not depend on the thread count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng as _rng
from .domain import UncertaintyDomain
from .noise import FiniteSupport, NoiseDistribution, StandardNormal
from .paths import DiscretePathPair, csv_header
from .payoffs import Markov, PayoffFunctional
from .solver import LatticePolicy, TreePolicy, ValueAndPolicy

MAX_FAIL_FRACTION = 1e-3


@dataclass
class SimulationEstimate:
    mean: float
    stderr: float
    n_paths: int
    seed: int
    n_failed: int = 0
    valid: bool = True
    terminal_mean: Optional[np.ndarray] = None
    terminal_stderr: Optional[np.ndarray] = None
    controls_used: list = field(default_factory=list)
    paths: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n_paths": self.n_paths, "seed": self.seed,
                "n_failed": self.n_failed, "valid": self.valid,
                "terminal_mean": None if self.terminal_mean is None else self.terminal_mean.tolist(),
                "terminal_stderr": None if self.terminal_stderr is None else self.terminal_stderr.tolist(),
                "controls_used": self.controls_used}


def _extra_state(F: PayoffFunctional, u: np.ndarray, k: int, n: int):
    """Running max / time integral of u^1 over the first k+1 coarse knots."""
    if F.markov is Markov.RUNNING_MAX:
        return np.max(u[:, :k + 1, 0], axis=1)
    if F.markov is Markov.PATH_AVERAGE:
        x = u[:, :k + 1, 0]
        return (np.sum(x, axis=1) - 0.5 * (x[:, 0] + x[:, -1])) / n
    return None


def _policy_step(vp: ValueAndPolicy, k: int, u, v, hist):
    pol = vp.policy
    if isinstance(pol, TreePolicy):
        return pol.control(k, hist), np.ones(len(hist), dtype=bool)
    if isinstance(pol, LatticePolicy):
        F = pol.lattice.F
        extra = _extra_state(F, u, k, vp.n)
        state = pol.state_vector(u[:, k], np.diagonal(v[:, k], axis1=-2, axis2=-1), extra)
        return pol.control(k, state)
    raise TypeError(f"unsupported policy type {type(pol).__name__}")


def _finish(vals, fails, terms, used, n_paths, seed, kept) -> SimulationEstimate:
    vals = np.concatenate(vals)
    fails = np.concatenate(fails)
    terms = np.concatenate(terms)
    good = ~fails
    n_good = int(good.sum())
    n_failed = int(fails.sum())
    x = vals[good]
    mean = float(np.mean(x)) if n_good else float("nan")
    stderr = float(np.std(x, ddof=1) / math.sqrt(n_good)) if n_good > 1 else float("nan")
    tm = terms[good].mean(axis=0) if n_good else None
    ts = terms[good].std(axis=0, ddof=1) / math.sqrt(n_good) if n_good > 1 else None
    used = sorted(set().union(*used)) if used else []
    return SimulationEstimate(mean=mean, stderr=stderr, n_paths=n_paths, seed=seed, n_failed=n_failed,
                              valid=n_failed <= MAX_FAIL_FRACTION * n_paths, terminal_mean=tm,
                              terminal_stderr=ts, controls_used=used, paths=kept)


def simulate_discrete(vp: ValueAndPolicy, nu: NoiseDistribution, F: PayoffFunctional,
                      n_paths: int, seed: int, threads: int = 1, keep_paths: int = 0) -> SimulationEstimate:
    """Monte Carlo estimate of E F(W_n(M, <M>)) under the optimal policy."""
    if type(nu) is not type(vp.noise) or nu.dim != vp.noise.dim:
        raise ValueError("sampling law differs from the law the policy was solved with")
    if isinstance(vp.policy, TreePolicy) and not isinstance(nu, FiniteSupport):
        raise ValueError("tree policies need a finite-support sampling law")
    n, d = vp.n, nu.dim
    gam = vp.grid.controls
    sq = vp.grid.squares()
    sqrt_n = math.sqrt(n)

    def block(b, start, stop):
        gen = _rng.block_generator(seed, b, _rng.NOISE)
        P = stop - start
        if isinstance(nu, FiniteSupport):
            idx = nu.draw_indices(gen, (_rng.BLOCK, n))[:P]
            Y = nu.atoms[idx]
        else:
            idx = None
            Y = nu.draw(gen, (_rng.BLOCK, n))[:P]
        u = np.zeros((P, n + 1, d))
        v = np.zeros((P, n + 1, d, d))
        hist = np.zeros(P, dtype=np.int64)
        ok = np.ones(P, dtype=bool)
        ctrl = np.empty((P, n), dtype=np.int64)
        for k in range(n):
            c, fine = _policy_step(vp, k, u, v, hist)
            ok &= fine
            ctrl[:, k] = c
            u[:, k + 1] = u[:, k] + np.einsum("pij,pj->pi", gam[c], Y[:, k]) / sqrt_n
            v[:, k + 1] = v[:, k] + sq[c] / n
            if isinstance(vp.policy, TreePolicy):
                hist = vp.policy.advance(hist, c, idx[:, k])
        vals = F.values(u, v)
        kept = []
        if start < keep_paths:
            for i in range(min(P, keep_paths - start)):
                kept.append((start + i, DiscretePathPair(u[i], v[i]), ctrl[i].tolist(), float(vals[i])))
        return vals, ~ok, u[:, -1], set(np.unique(ctrl).tolist()), kept

    parts = _rng.map_blocks(block, n_paths, threads)
    if not parts:
        return SimulationEstimate(float("nan"), float("nan"), 0, seed)
    return _finish([p[0] for p in parts], [p[1] for p in parts], [p[2] for p in parts],
                   [p[3] for p in parts], n_paths, seed, [k for p in parts for k in p[4]])


def simulate_continuous(vp: ValueAndPolicy, F: PayoffFunctional, substeps: int, n_paths: int,
                        seed: int, threads: int = 1, keep_paths: int = 0) -> SimulationEstimate:
    """Monte Carlo estimate of E_n F(B, <B>) for the continuous martingale built from the policy."""
    if not isinstance(vp.noise, StandardNormal):
        raise ValueError("the continuous construction needs a policy solved with standard normal noise")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    n, d, s = vp.n, vp.noise.dim, substeps
    gam = vp.grid.controls
    sq = vp.grid.squares()
    dt = 1.0 / (n * s)
    sdt = math.sqrt(dt)

    def block(b, start, stop):
        gen = _rng.block_generator(seed, b, _rng.BROWNIAN)
        P = stop - start
        dW = gen.standard_normal((_rng.BLOCK, n, s, d))[:P] * sdt
        # coarse skeleton (= the continuous process at k/n) drives the policy
        u = np.zeros((P, n + 1, d))
        v = np.zeros((P, n + 1, d, d))
        uf = np.zeros((P, n * s + 1, d))
        vf = np.zeros((P, n * s + 1, d, d))
        ok = np.ones(P, dtype=bool)
        ctrl = np.empty((P, n), dtype=np.int64)
        steps = np.arange(1, s + 1)[None, :, None, None]
        for k in range(n):
            c, fine = _policy_step(vp, k, u, v, None)
            ok &= fine
            ctrl[:, k] = c
            path = u[:, k, None, :] + np.einsum("pij,psj->psi", gam[c], np.cumsum(dW[:, k], axis=1))
            uf[:, k * s + 1:(k + 1) * s + 1] = path
            vf[:, k * s + 1:(k + 1) * s + 1] = v[:, k, None] + steps * dt * sq[c][:, None]
            u[:, k + 1] = path[:, -1]
            v[:, k + 1] = v[:, k] + sq[c] / n
        vals = F.values(uf, vf)
        kept = []
        if start < keep_paths:
            for i in range(min(P, keep_paths - start)):
                kept.append((start + i, DiscretePathPair(uf[i], vf[i]), ctrl[i].tolist(), float(vals[i])))
        return vals, ~ok, u[:, -1], set(np.unique(ctrl).tolist()), kept

    parts = _rng.map_blocks(block, n_paths, threads)
    if not parts:
        return SimulationEstimate(float("nan"), float("nan"), 0, seed)
    return _finish([p[0] for p in parts], [p[1] for p in parts], [p[2] for p in parts],
                   [p[3] for p in parts], n_paths, seed, [k for p in parts for k in p[4]])


def realized_volatilities_admissible(vp: ValueAndPolicy, est: SimulationEstimate,
                                     domain: UncertaintyDomain) -> bool:
    """Every control used along the simulated paths squares into D."""
    sq = vp.grid.squares()
    return all(domain.contains(sq[c]) for c in est.controls_used)


def dump_paths(est: SimulationEstimate, fh) -> None:
    """CSV: one row per knot with path index, control index of the step starting there, payoff."""
    if not est.paths:
        return
    d = est.paths[0][1].dim
    w = csv.writer(fh)
    w.writerow(["path"] + csv_header(d) + ["control", "payoff"])
    for i, pair, ctrl, val in est.paths:
        N = pair.n
        steps_per_control = N // len(ctrl)
        for k in range(N + 1):
            c = ctrl[k // steps_per_control] if k < N else ""
            w.writerow([i, k, repr(k / N)] + [repr(float(x)) for x in pair.u[k]]
                       + [repr(float(x)) for x in pair.v[k].reshape(-1)] + [c, repr(val)])
