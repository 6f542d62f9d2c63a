"""Monte Carlo checks of the auxiliary moment bounds and the convergence study harness.

The moment bounds are one-sided: the normalized estimates (estimate * n, estimate
* sqrt(n), E exp(A max|M|)) must stay bounded across the tested n. Boundedness is
judged by the max/min ratio of the normalized sequence. The fitted log-log slope
and the ratio max/first (upper-bound reading) are reported alongside.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import rng as _rng
from .domain import UncertaintyDomain
from .noise import FiniteSupport, NoiseDistribution
from .payoffs import PayoffFunctional
from .solver import DEFAULT_LEAF_BUDGET, StateGridSpec, solve

RATIO_LIMIT = 3.0
OVERSAMPLE = 64
INVERSION_TOL = 0.10
RATE = 1.0 / 8.0


@dataclass
class ScalingReport:
    """Normalized estimates across n.

    ``normalized`` is estimate * n**power; ``bound_constant`` its max; ``ratio``
    max/min of it; ``passed`` iff ratio <= 3. ``ratio_to_first`` (max/first) is
    the upper-bound reading, reported but not used for ``passed``.
    """

    name: str
    n_values: list
    estimates: list
    stderrs: list
    power: float
    normalized: list
    slope: float
    bound_constant: float
    ratio: float
    ratio_to_first: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _fit_slope(n_values, estimates) -> float:
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.asarray(estimates, dtype=float)
    if np.any(y <= 0) or len(x) < 2:
        return float("nan")
    return float(np.polyfit(x, np.log(y), 1)[0])


def _report(name, n_values, est, se, power, note="") -> ScalingReport:
    n_arr = np.asarray(n_values, dtype=float)
    est = np.asarray(est, dtype=float)
    norm = est * n_arr ** power
    if np.all(norm == 0):
        # identically zero sequence is trivially bounded
        ratio, first_ratio = 1.0, 1.0
    elif np.any(norm <= 0) or not np.all(np.isfinite(norm)):
        ratio, first_ratio = float("inf"), float("inf")
    else:
        ratio = float(norm.max() / norm.min())
        first_ratio = float(norm.max() / norm[0])
    return ScalingReport(name=name, n_values=[int(n) for n in n_values], estimates=est.tolist(),
                         stderrs=[float(s) for s in se], power=power, normalized=norm.tolist(),
                         slope=_fit_slope(n_values, est),
                         bound_constant=float(norm.max()) if len(norm) else float("nan"),
                         ratio=ratio, ratio_to_first=first_ratio,
                         passed=bool(ratio <= RATIO_LIMIT), note=note)


@dataclass
class DiscretizationReport:
    fourth_moment: ScalingReport
    qv_deviation: ScalingReport

    @property
    def passed(self) -> bool:
        return self.fourth_moment.passed and self.qv_deviation.passed

    def to_dict(self) -> dict:
        return {"fourth_moment": self.fourth_moment.to_dict(),
                "qv_deviation": self.qv_deviation.to_dict(), "passed": self.passed}


def _skeleton_deviation(sigma: float, n: int, n_paths: int, seed: int, oversample: int, threads: int):
    """Per path: max_k max_{t in step k} |M_t - M_{k/n}|^4 and |<M>_t - <N>_k|^2 for M = sigma W."""
    s = oversample
    dt = 1.0 / (n * s)
    var = sigma * sigma

    def block(b, start, stop):
        gen = _rng.block_generator(seed, b, _rng.DIAGNOSTIC + (n << 8))
        P = stop - start
        worst = np.zeros(P)
        for k in range(n):
            dW = gen.standard_normal((_rng.BLOCK, s))[:P]
            excursion = np.max(np.abs(np.cumsum(dW, axis=1)), axis=1) * (sigma * math.sqrt(dt))
            np.maximum(worst, excursion, out=worst)
        # <M>_t = sigma^2 t is deterministic and so is <N>_k = sigma^2 k/n; the fine
        # grid includes t = (k+1)/n where the gap is largest
        qv = np.full(P, (var * s * dt) ** 2)
        return worst ** 4, qv

    parts = _rng.map_blocks(block, n_paths, threads)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _mean_se(x: np.ndarray):
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else float("nan")
    return m, se


def discretization_scaling(sigma: float, n_values: Sequence[int], n_paths: int, seed: int,
                           oversample: int = OVERSAMPLE, threads: int = 1) -> DiscretizationReport:
    """Estimate both skeleton-deviation moments for M = sigma W across n."""
    if len(n_values) < 3:
        raise ValueError("need at least 3 values of n")
    if n_paths < 2:
        raise ValueError("need at least 2 paths")
    n_values = sorted(int(n) for n in n_values)
    f_est, f_se, q_est, q_se = [], [], [], []
    for n in n_values:
        fourth, qv = _skeleton_deviation(sigma, n, n_paths, seed, oversample, threads)
        m, se = _mean_se(fourth)
        f_est.append(m)
        f_se.append(se)
        m, se = _mean_se(qv)
        q_est.append(m)
        q_se.append(se)
    return DiscretizationReport(
        _report("fourth_moment", n_values, f_est, f_se, 1.0),
        _report("qv_deviation", n_values, q_est, q_se, 0.5,
                note="<N>_k = sigma^2 k/n is deterministic; the deviation equals (sigma^2/n)^2"))


def exp_moment_probe(domain: UncertaintyDomain, nu: NoiseDistribution, A: float,
                     n_values: Sequence[int], n_paths: int, seed: int, threads: int = 1) -> ScalingReport:
    """E exp(A max_k ||M_k||) under the constant control of largest norm."""
    if A <= 0:
        raise ValueError("A must be positive")
    grid = domain.sqrt_grid(1)
    gam = grid.controls[grid.max_index()]
    n_values = sorted(int(n) for n in n_values)
    est, ses = [], []
    for n in n_values:
        def block(b, start, stop, n=n):
            gen = _rng.block_generator(seed, b, _rng.NOISE + (n << 8))
            P = stop - start
            if isinstance(nu, FiniteSupport):
                Y = nu.atoms[nu.draw_indices(gen, (_rng.BLOCK, n))[:P]]
            else:
                Y = nu.draw(gen, (_rng.BLOCK, n))[:P]
            M = np.cumsum(Y @ gam.T, axis=1) / math.sqrt(n)
            peak = np.max(np.abs(M), axis=(1, 2))
            return peak

        peak = np.concatenate(_rng.map_blocks(block, n_paths, threads))
        with np.errstate(over="ignore"):
            vals = np.exp(A * peak)
        if not np.all(np.isfinite(vals)):
            rep = _report("exp_moment", n_values[:len(est)], est, ses, 0.0)
            rep.passed = False
            rep.note = f"overflow at n={n}"
            return rep
        m, se = _mean_se(vals)
        est.append(m)
        ses.append(se)
    return _report("exp_moment", n_values, est, ses, 0.0)


@dataclass
class ConvergenceRow:
    n: int
    value: float
    oracle: float
    error: float
    resolution: int
    runtime: float
    solver_kind: str
    failure: Optional[str] = None


CSV_COLUMNS = ["n", "value", "oracle", "error", "scaled_error", "resolution", "solver_kind", "runtime", "failure"]


@dataclass
class ConvergenceTable:
    rows: list
    mode: str
    max_scaled_error: float
    empirical_slope: float
    monotone: bool
    passed: bool
    warnings: list = field(default_factory=list)

    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    def to_dict(self, runtimes: bool = True) -> dict:
        rows = []
        for r in self.rows:
            d = asdict(r)
            d["scaled_error"] = r.error * r.n ** RATE
            if not runtimes:
                d.pop("runtime")
            rows.append(d)
        return {"mode": self.mode, "rows": rows, "max_scaled_error": self.max_scaled_error,
                "empirical_slope": self.empirical_slope, "monotone": self.monotone,
                "passed": self.passed, "warnings": self.warnings}

    def write_csv(self, fh, runtimes: bool = True) -> None:
        cols = CSV_COLUMNS if runtimes else [c for c in CSV_COLUMNS if c != "runtime"]
        w = csv.writer(fh)
        w.writerow(cols)
        for d in self.to_dict(runtimes)["rows"]:
            w.writerow(["" if d[c] is None else (repr(d[c]) if isinstance(d[c], float) else d[c])
                        for c in cols])

    def to_json(self, runtimes: bool = True) -> str:
        return json.dumps(self.to_dict(runtimes), indent=2, sort_keys=True)


def errors_monotone(errors: Sequence[float], tol: float = INVERSION_TOL) -> bool:
    """Non-increasing up to a single inversion of at most ``tol`` relative size."""
    inversions = 0
    for a, b in zip(errors[:-1], errors[1:]):
        if b > a + 1e-15:
            inversions += 1
            if inversions > 1 or b > (1 + tol) * a + 1e-15:
                return False
    return True


def convergence_study(F: PayoffFunctional, domain: UncertaintyDomain, nu: NoiseDistribution,
                      n_values: Sequence[int], oracle: Optional[float] = None, resolution: int = 4,
                      kind: str = "auto", quad_order: int = 9, spec: StateGridSpec = StateGridSpec(),
                      budget: int = DEFAULT_LEAF_BUDGET, threads: int = 1) -> ConvergenceTable:
    """Solve at each n and tabulate |V_n - V|; Cauchy mode (against the largest n) if no oracle."""
    n_values = sorted(int(n) for n in n_values)
    rows, warnings = [], []
    for n in n_values:
        t0 = time.perf_counter()
        try:
            vp = solve(F, domain, nu, n, resolution=resolution, kind=kind, quad_order=quad_order,
                       spec=spec, budget=budget, threads=threads)
            value, sk, fail = vp.value, vp.solver_kind, None
            warnings.extend(f"n={n}: {w}" for w in vp.diagnostics.get("warnings", []))
        except (RuntimeError, ValueError, ArithmeticError) as exc:
            value, sk, fail = float("nan"), kind, f"{type(exc).__name__}: {exc}"
        rows.append(ConvergenceRow(n, value, float("nan"), float("nan"), resolution,
                                   time.perf_counter() - t0, sk, fail))
    mode = "oracle" if oracle is not None else "cauchy"
    ref = oracle if oracle is not None else rows[-1].value
    for r in rows:
        r.oracle = float(ref)
        r.error = abs(r.value - ref)
    errs = np.array([r.error for r in rows])
    ok = np.isfinite(errs)
    scaled = errs[ok] * np.array([r.n for r in rows])[ok] ** RATE
    max_scaled = float(scaled.max()) if len(scaled) else float("nan")
    n_ok = np.array([r.n for r in rows])[ok]
    slope = _fit_slope(n_ok, errs[ok]) if mode == "oracle" else _fit_slope(n_ok[:-1], errs[ok][:-1])
    monotone = bool(np.all(ok) and errors_monotone(errs.tolist()))
    return ConvergenceTable(rows=rows, mode=mode, max_scaled_error=max_scaled, empirical_slope=slope,
                            monotone=monotone, passed=monotone and math.isfinite(max_scaled),
                            warnings=warnings)
