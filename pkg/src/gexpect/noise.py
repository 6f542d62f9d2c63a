"""Driving noise laws, their quadrature rules and moment checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import rng as _rng

DEFAULT_ORDER = 9
MOMENT_TOL = 1e-10


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray  # (q, d)
    weights: np.ndarray  # (q,)
    exactness_degree: int

    @property
    def size(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Contract the last axis of ``values`` (one entry per node) with the weights."""
        return values @ self.weights


class NoiseDistribution:
    dim: int
    finite_support = False

    def quadrature(self, order: int = DEFAULT_ORDER) -> QuadratureRule:
        raise NotImplementedError

    def sample(self, seed: int, count: int) -> np.ndarray:
        """``count`` i.i.d. draws, shape ``(count, d)``; deterministic in ``seed``."""
        out = np.empty((count, self.dim))
        for b, start, stop in _rng.block_ranges(count):
            g = _rng.block_generator(seed, b, _rng.NOISE)
            out[start:stop] = self.draw(g, (_rng.BLOCK,))[: stop - start]
        return out

    def draw(self, gen: np.random.Generator, shape: tuple) -> np.ndarray:
        """Draws of shape ``shape + (d,)`` from a given generator."""
        raise NotImplementedError

    def log_mgf(self, y: np.ndarray) -> np.ndarray:
        """log E exp(<x, y>) for ``y`` of shape ``(..., d)``."""
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class StandardNormal(NoiseDistribution):
    dim: int = 1

    def quadrature(self, order=DEFAULT_ORDER):
        if order < 2:
            raise ValueError("quadrature order must be >= 2")
        x, w = np.polynomial.hermite_e.hermegauss(order)
        w = w / w.sum()
        nodes = np.array(list(itertools.product(x, repeat=self.dim)))
        weights = np.array([np.prod(c) for c in itertools.product(w, repeat=self.dim)])
        return QuadratureRule(nodes, weights / weights.sum(), 2 * order - 1)

    def draw(self, gen, shape):
        return gen.standard_normal(shape + (self.dim,))

    def log_mgf(self, y):
        y = np.asarray(y, dtype=float)
        return 0.5 * np.sum(y * y, axis=-1)

    def to_config(self):
        return {"kind": "normal", "dim": self.dim}


class FiniteSupport(NoiseDistribution):
    finite_support = True

    def __init__(self, atoms, probs):
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        probs = np.asarray(probs, dtype=float)
        if len(probs) != len(atoms) or len(probs) == 0:
            raise ValueError("atoms and probabilities must be nonempty and aligned")
        if np.any(probs <= 0):
            raise ValueError("probabilities must be positive")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        self.atoms = atoms
        self.probs = probs
        self.dim = atoms.shape[1]
        self._cdf = np.cumsum(probs)
        self._cdf[-1] = 1.0

    def __repr__(self):
        return f"FiniteSupport(atoms={self.atoms.tolist()}, probs={self.probs.tolist()})"

    def __eq__(self, other):
        return (type(self) is type(other) and np.array_equal(self.atoms, other.atoms)
                and np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash((self.atoms.tobytes(), self.probs.tobytes()))

    def quadrature(self, order=DEFAULT_ORDER):
        if order < 2:
            raise ValueError("quadrature order must be >= 2")
        return QuadratureRule(self.atoms.copy(), self.probs.copy(), np.iinfo(np.int32).max)

    def draw_indices(self, gen, shape):
        return np.searchsorted(self._cdf, gen.random(shape), side="right").clip(0, len(self.probs) - 1)

    def draw(self, gen, shape):
        return self.atoms[self.draw_indices(gen, shape)]

    def log_mgf(self, y):
        y = np.asarray(y, dtype=float)
        return logsumexp(y @ self.atoms.T, b=self.probs, axis=-1)

    def to_config(self):
        return {"kind": "finite", "atoms": self.atoms.tolist(), "probs": self.probs.tolist()}


class Rademacher(FiniteSupport):
    """Independent fair signs per coordinate; atoms in lexicographic sign order."""

    def __init__(self, dim: int = 1):
        atoms = np.array(list(itertools.product([-1.0, 1.0], repeat=dim)))
        super().__init__(atoms, np.full(len(atoms), 0.5 ** dim))
        self._place = 2 ** np.arange(dim - 1, -1, -1)

    def __repr__(self):
        return f"Rademacher(dim={self.dim})"

    def draw_indices(self, gen, shape):
        bits = gen.integers(0, 2, size=shape + (self.dim,))
        return bits @ self._place

    def log_mgf(self, y):
        y = np.abs(np.asarray(y, dtype=float))
        # log cosh without overflow
        return np.sum(y + np.log1p(np.exp(-2 * y)) - np.log(2.0), axis=-1)

    def to_config(self):
        return {"kind": "rademacher", "dim": self.dim}


@dataclass
class MomentReport:
    mean: np.ndarray
    covariance: np.ndarray
    third_abs_moment: float
    passed: bool
    method: str
    tolerance: str
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {"mean": self.mean.tolist(), "covariance": self.covariance.tolist(),
                "third_abs_moment": self.third_abs_moment, "passed": self.passed,
                "method": self.method, "tolerance": self.tolerance, "failures": self.failures}


def validate_moments(nu: NoiseDistribution, sampled: bool = False, count: int = 1_000_000,
                     seed: int = 0) -> MomentReport:
    """Check zero mean and identity covariance, and report E||x||^3 (sup norm).

    Exact variants are checked from their quadrature rule at ``MOMENT_TOL``. With
    ``sampled=True`` the check uses ``count`` draws and a 4-standard-error band.
    """
    d = nu.dim
    if not sampled:
        rule = nu.quadrature(max(DEFAULT_ORDER, 16))
        x, w = rule.nodes, rule.weights
        mean = w @ x
        cov = np.einsum("q,qi,qj->ij", w, x, x)
        third = float(w @ np.max(np.abs(x), axis=1) ** 3)
        failures = []
        if np.max(np.abs(mean)) > MOMENT_TOL:
            failures.append(f"mean {mean.tolist()} != 0")
        if np.max(np.abs(cov - np.eye(d))) > MOMENT_TOL:
            failures.append(f"covariance {cov.tolist()} != I")
        if not np.isfinite(third):
            failures.append("third absolute moment is not finite")
        return MomentReport(mean, cov, third, not failures, "exact", f"abs {MOMENT_TOL:g}", failures)

    if count < 1_000_000:
        raise ValueError("sampled moment checks need at least 10^6 draws")
    x = nu.sample(seed, count)
    mean = x.mean(axis=0)
    outer = np.einsum("ni,nj->nij", x, x)
    cov = outer.mean(axis=0)
    cov_se = outer.std(axis=0, ddof=1) / np.sqrt(count)
    mean_se = x.std(axis=0, ddof=1) / np.sqrt(count)
    third = float(np.mean(np.max(np.abs(x), axis=1) ** 3))
    failures = []
    if np.any(np.abs(mean) > 4 * mean_se + 1e-15):
        failures.append(f"mean {mean.tolist()} outside 4 standard errors")
    if np.any(np.abs(cov - np.eye(d)) > 4 * cov_se + 1e-15):
        failures.append("covariance outside 4 standard errors of I")
    if not np.isfinite(third):
        failures.append("third absolute moment is not finite")
    return MomentReport(mean, cov, third, not failures, "sampled", "4 standard errors", failures)


@dataclass
class MgfReport:
    radius: float
    n_max: int
    max_value: float
    threshold: float
    argmax_n: int
    passed: bool
    note: str = "checked on a finite (n, y) grid of the sup-norm ball of the given radius only"

    def to_dict(self):
        return dict(self.__dict__)


def validate_mgf_bound(nu: NoiseDistribution, radius: float, n_max: int,
                       points_per_axis: int = 41, safety: float = 10.0) -> MgfReport:
    """max over n in {1, 2, 4, .., n_max} and y in the ball of psi(y / sqrt n)^n."""
    if radius <= 0 or n_max < 1:
        raise ValueError("radius must be > 0 and n_max >= 1")
    axis = np.linspace(-radius, radius, points_per_axis)
    ys = np.array(list(itertools.product(axis, repeat=nu.dim)))
    ns = [1]
    while ns[-1] * 2 <= n_max:
        ns.append(ns[-1] * 2)
    if ns[-1] != n_max:
        ns.append(n_max)
    best, best_n = -np.inf, ns[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for n in ns:
            val = float(np.max(n * nu.log_mgf(ys / np.sqrt(n))))
            if not np.isfinite(val):
                best, best_n = np.inf, n
                break
            if val > best:
                best, best_n = val, n
    log_thr = radius ** 2 * nu.dim + np.log(safety)
    max_value = float(np.exp(best)) if best < 700 else np.inf
    return MgfReport(radius, n_max, max_value, float(np.exp(log_thr)), best_n,
                     bool(np.isfinite(best) and best <= log_thr))


def quadrature(nu: NoiseDistribution, order: int = DEFAULT_ORDER) -> QuadratureRule:
    return nu.quadrature(order)


def sample(nu: NoiseDistribution, seed: int, count: int) -> np.ndarray:
    return nu.sample(seed, count)


def noise_from_config(cfg: dict) -> NoiseDistribution:
    kind = cfg.get("kind", "rademacher")
    if kind == "normal":
        return StandardNormal(int(cfg.get("dim", 1)))
    if kind == "rademacher":
        return Rademacher(int(cfg.get("dim", 1)))
    if kind == "finite":
        return FiniteSupport(cfg["atoms"], cfg["probs"])
    raise ValueError(f"unknown noise kind {kind!r}")
