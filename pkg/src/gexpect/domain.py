"""Volatility uncertainty sets and finite control grids over their square roots.

Matrices are plain ``numpy`` arrays of shape ``(d, d)``. Norms follow the sup
convention on R^d throughout the package: vectors use ``max |x_i|`` and
symmetric matrices use the induced operator norm (max absolute row sum).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

TOL_PSD = 1e-10
HULL_TOL = 1e-8


class NotPSDError(ValueError):
    """Raised when a matrix has an eigenvalue below ``-TOL_PSD * ||A||``."""


def sym(A) -> np.ndarray:
    """Return ``A`` as a float symmetric matrix (upper triangle mirrored)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    upper = np.triu(A)
    return upper + np.triu(A, 1).T


def operator_norm(A) -> float:
    """Operator norm induced by the sup norm: max absolute row sum."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return float(np.max(np.sum(np.abs(A), axis=-1)))


def matrix_sqrt(A) -> np.ndarray:
    """Unique PSD square root via symmetric eigendecomposition.

    Eigenvalues in ``[-TOL_PSD * ||A||, 0)`` are clamped to zero; anything more
    negative raises :class:`NotPSDError`.
    """
    A = sym(A)
    w, Q = np.linalg.eigh(A)
    scale = max(operator_norm(A), 1.0)
    if w.min() < -TOL_PSD * scale:
        raise NotPSDError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    R = (Q * np.sqrt(w)) @ Q.T
    return sym(0.5 * (R + R.T))


def is_psd(A, tol: float = TOL_PSD) -> bool:
    A = sym(A)
    scale = max(operator_norm(A), 1.0)
    return bool(np.linalg.eigvalsh(A).min() >= -tol * scale)


@dataclass(frozen=True)
class ControlGrid:
    """Finite subset of sqrt(D). ``controls`` has shape ``(m, d, d)``."""

    controls: np.ndarray
    resolution: int

    @property
    def size(self) -> int:
        return self.controls.shape[0]

    @property
    def dim(self) -> int:
        return self.controls.shape[1]

    def squares(self) -> np.ndarray:
        return np.einsum("mij,mjk->mik", self.controls, self.controls)

    def is_diagonal(self) -> bool:
        off = self.controls - np.einsum("mii->mi", self.controls)[:, :, None] * np.eye(self.dim)
        return bool(np.all(off == 0.0))

    def max_index(self) -> int:
        """Index of the control with the largest operator norm (first on ties)."""
        norms = [operator_norm(g) for g in self.controls]
        return int(np.argmax(norms))


class UncertaintyDomain:
    """Base class for the compact convex set D of admissible volatility matrices."""

    dim: int

    def contains(self, A) -> bool:
        A = sym(A)
        if A.shape != (self.dim, self.dim):
            raise ValueError(f"dimension mismatch: domain d={self.dim}, matrix {A.shape}")
        return self._contains(A)

    def _contains(self, A: np.ndarray) -> bool:
        raise NotImplementedError

    def norm(self) -> float:
        """sup over D of the operator norm."""
        raise NotImplementedError

    def sqrt_grid(self, resolution: int) -> ControlGrid:
        if int(resolution) < 1:
            raise ValueError("resolution must be >= 1")
        controls = self._grid(int(resolution))
        return ControlGrid(controls=_unique_matrices(controls), resolution=int(resolution))

    def _grid(self, resolution: int) -> np.ndarray:
        raise NotImplementedError

    def is_diagonal(self) -> bool:
        return False

    def coordinate_max_variance(self) -> np.ndarray:
        """Per-coordinate upper bound of the diagonal entries over D."""
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


def _interval_tol(a_high: float) -> float:
    return TOL_PSD * max(abs(a_high), 1.0)


def _check_interval(lo: float, hi: float, name: str = "a") -> None:
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError(f"{name}_low/{name}_high must be finite")
    if lo < 0:
        raise ValueError(f"{name}_low must be >= 0, got {lo}")
    if lo > hi:
        raise ValueError(f"{name}_low ({lo}) exceeds {name}_high ({hi})")


def _sqrt_points(lo: float, hi: float, resolution: int) -> np.ndarray:
    """Uniform grid on [sqrt(lo), sqrt(hi)] with both endpoints exact."""
    s_lo, s_hi = np.sqrt(lo), np.sqrt(hi)
    if s_lo == s_hi:
        return np.array([s_lo])
    h = (s_hi - s_lo) / resolution
    pts = s_lo + h * np.arange(resolution + 1)
    pts[-1] = s_hi
    return np.clip(pts, s_lo, s_hi)


@dataclass(frozen=True)
class ScalarInterval(UncertaintyDomain):
    a_low: float
    a_high: float
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        _check_interval(self.a_low, self.a_high)

    def _contains(self, A):
        a, tol = A[0, 0], _interval_tol(self.a_high)
        return bool(self.a_low - tol <= a <= self.a_high + tol)

    def norm(self):
        return float(self.a_high)

    def _grid(self, resolution):
        return _sqrt_points(self.a_low, self.a_high, resolution)[:, None, None]

    def is_diagonal(self):
        return True

    def coordinate_max_variance(self):
        return np.array([float(self.a_high)])

    def to_config(self):
        return {"kind": "scalar", "a_low": self.a_low, "a_high": self.a_high}


@dataclass(frozen=True)
class IsotropicInterval(UncertaintyDomain):
    """D = { s I : s in [a_low, a_high] }; the grid is uniform in s."""

    dim: int
    a_low: float
    a_high: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        _check_interval(self.a_low, self.a_high)

    def _contains(self, A):
        s = A[0, 0]
        tol = _interval_tol(self.a_high)
        if np.max(np.abs(A - s * np.eye(self.dim))) > tol:
            return False
        return bool(self.a_low - tol <= s <= self.a_high + tol)

    def norm(self):
        return float(self.a_high)

    def _grid(self, resolution):
        if self.a_low == self.a_high:
            s = np.array([self.a_low])
        else:
            s = np.linspace(self.a_low, self.a_high, resolution + 1)
        return np.sqrt(s)[:, None, None] * np.eye(self.dim)

    def is_diagonal(self):
        return True

    def coordinate_max_variance(self):
        return np.full(self.dim, float(self.a_high))

    def to_config(self):
        return {"kind": "isotropic", "dim": self.dim, "a_low": self.a_low, "a_high": self.a_high}


@dataclass(frozen=True)
class DiagonalBox(UncertaintyDomain):
    """D = { diag(a_1..a_d) : a_i in [low_i, high_i] }; sqrt-uniform per axis."""

    lows: tuple
    highs: tuple

    def __post_init__(self):
        if len(self.lows) != len(self.highs) or not self.lows:
            raise ValueError("lows and highs must be nonempty and of equal length")
        for i, (lo, hi) in enumerate(zip(self.lows, self.highs)):
            _check_interval(float(lo), float(hi), name=f"a{i}")
        object.__setattr__(self, "lows", tuple(float(x) for x in self.lows))
        object.__setattr__(self, "highs", tuple(float(x) for x in self.highs))

    @property
    def dim(self) -> int:
        return len(self.lows)

    def _contains(self, A):
        tol = _interval_tol(max(self.highs))
        diag = np.diag(A)
        if np.max(np.abs(A - np.diag(diag))) > tol:
            return False
        return bool(np.all(np.array(self.lows) - tol <= diag) and np.all(diag <= np.array(self.highs) + tol))

    def norm(self):
        return float(max(self.highs))

    def _grid(self, resolution):
        axes = [_sqrt_points(lo, hi, resolution) for lo, hi in zip(self.lows, self.highs)]
        return np.array([np.diag(p) for p in itertools.product(*axes)])

    def is_diagonal(self):
        return True

    def coordinate_max_variance(self):
        return np.array(self.highs)

    def to_config(self):
        return {"kind": "diagonal", "lows": list(self.lows), "highs": list(self.highs)}


class ConvexHull(UncertaintyDomain):
    """D = conv(generators), generators symmetric PSD."""

    def __init__(self, generators: Sequence):
        gens = np.array([sym(g) for g in generators])
        if gens.ndim != 3 or len(gens) == 0:
            raise ValueError("ConvexHull needs at least one d x d generator")
        for g in gens:
            if not is_psd(g):
                raise NotPSDError("hull generators must be positive semidefinite")
        self.generators = gens
        self.dim = gens.shape[1]

    def __eq__(self, other):
        return isinstance(other, ConvexHull) and np.array_equal(self.generators, other.generators)

    def __hash__(self):
        return hash(self.generators.tobytes())

    def __repr__(self):
        return f"ConvexHull(generators={self.generators.tolist()})"

    def _contains(self, A):
        # feasibility LP: w >= 0, sum w = 1, sum w_i G_i = A (upper triangle), within HULL_TOL
        k = len(self.generators)
        iu = np.triu_indices(self.dim)
        G = np.array([g[iu] for g in self.generators]).T
        a = A[iu]
        # slack variables absorb residuals; minimise their total
        m = G.shape[0]
        c = np.concatenate([np.zeros(k), np.ones(2 * m)])
        A_eq = np.hstack([G, np.eye(m), -np.eye(m)])
        A_eq = np.vstack([A_eq, np.concatenate([np.ones(k), np.zeros(2 * m)])])
        b_eq = np.concatenate([a, [1.0]])
        res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * (k + 2 * m), method="highs")
        return bool(res.status == 0 and res.fun <= HULL_TOL * max(1.0, operator_norm(A)))

    def norm(self):
        # operator norm is convex, so the max over D sits at a generator
        return float(max(operator_norm(g) for g in self.generators))

    def _grid(self, resolution):
        k = len(self.generators)
        out = []
        for w in _simplex_lattice(k, resolution):
            out.append(matrix_sqrt(np.tensordot(w, self.generators, axes=1)))
        return np.array(out)

    def is_diagonal(self):
        off = self.generators - np.einsum("kii->ki", self.generators)[:, :, None] * np.eye(self.dim)
        return bool(np.all(off == 0.0))

    def coordinate_max_variance(self):
        return np.max(np.einsum("kii->ki", self.generators), axis=0)

    def to_config(self):
        return {"kind": "hull", "generators": self.generators.tolist()}


def _simplex_lattice(k: int, resolution: int) -> np.ndarray:
    """All weight vectors in the k-simplex with entries in {0, 1/r, ..., 1}."""
    out = []
    for combo in itertools.combinations_with_replacement(range(k), resolution):
        w = np.bincount(combo, minlength=k) / resolution
        out.append(w)
    return np.array(out)


def _unique_matrices(mats: np.ndarray) -> np.ndarray:
    seen, keep = set(), []
    for M in mats:
        key = M.round(14).tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(M)
    return np.array(keep)


def contains(domain: UncertaintyDomain, A) -> bool:
    return domain.contains(A)


def sqrt_grid(domain: UncertaintyDomain, resolution: int) -> ControlGrid:
    return domain.sqrt_grid(resolution)


def domain_from_config(cfg: dict) -> UncertaintyDomain:
    kind = cfg.get("kind", "scalar")
    if kind == "scalar":
        return ScalarInterval(float(cfg["a_low"]), float(cfg["a_high"]))
    if kind == "isotropic":
        return IsotropicInterval(int(cfg["dim"]), float(cfg["a_low"]), float(cfg["a_high"]))
    if kind == "diagonal":
        return DiagonalBox(tuple(cfg["lows"]), tuple(cfg["highs"]))
    if kind == "hull":
        return ConvexHull(cfg["generators"])
    raise ValueError(f"unknown domain kind {kind!r}")
