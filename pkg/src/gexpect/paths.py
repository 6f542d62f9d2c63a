"""Discrete path pairs (u, v), their piecewise-linear interpolant and CSV dumps."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import TOL_PSD, operator_norm, sym


@dataclass(frozen=True)
class DiscretePathPair:
    """Knots ``u`` of shape ``(n+1, d)`` and ``v`` of shape ``(n+1, d, d)``, both starting at 0."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        v = np.asarray(self.v, dtype=float)
        if v.ndim == 1:
            v = v[:, None, None]
        if u.shape[0] != v.shape[0] or u.shape[0] < 2:
            raise ValueError("u and v need the same number (>= 2) of knots")
        if v.shape[1:] != (u.shape[1], u.shape[1]):
            raise ValueError(f"v knots must be {u.shape[1]}x{u.shape[1]} matrices")
        if np.any(u[0] != 0) or np.any(v[0] != 0):
            raise ValueError("paths must start at the origin (u_0 = 0, v_0 = 0)")
        v = 0.5 * (v + np.swapaxes(v, 1, 2))
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.u.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.u.shape[1]

    def increments_psd(self, tol: float = TOL_PSD) -> bool:
        dv = np.diff(self.v, axis=0)
        for m in dv:
            scale = max(operator_norm(m), 1.0)
            if np.linalg.eigvalsh(m).min() < -tol * scale:
                return False
        return True

    def __add__(self, other: "DiscretePathPair") -> "DiscretePathPair":
        return DiscretePathPair(self.u + other.u, self.v + other.v)

    def scale(self, a: float) -> "DiscretePathPair":
        return DiscretePathPair(a * self.u, a * self.v)


@dataclass(frozen=True)
class InterpolatedPath:
    """W_n(u, v): the pair linearly interpolated on the grid {k/n}."""

    knots: DiscretePathPair

    @property
    def u(self) -> np.ndarray:
        return self.knots.u

    @property
    def v(self) -> np.ndarray:
        return self.knots.v

    @property
    def n(self) -> int:
        return self.knots.n

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > 1)) or np.any(~np.isfinite(t)):
            raise ValueError("t must lie in [0, 1]")
        n = self.n
        nt = n * t
        k = np.minimum(np.floor(nt).astype(int), n - 1)
        return k, nt - k

    def __call__(self, t):
        """(u(t), v(t)); ``t`` scalar or array."""
        k, w = self._locate(t)
        w_u = np.expand_dims(w, -1)
        w_v = np.expand_dims(w_u, -1)
        u = (1 - w_u) * self.u[k] + w_u * self.u[k + 1]
        v = (1 - w_v) * self.v[k] + w_v * self.v[k + 1]
        return u, v


def interpolate(path: DiscretePathPair) -> InterpolatedPath:
    return InterpolatedPath(path)


def sup_norm(path: InterpolatedPath) -> tuple[float, float]:
    """(||u||, ||v||); piecewise-linear paths attain their sup at knots."""
    un = float(np.max(np.abs(path.u)))
    vn = float(max(operator_norm(m) for m in path.v))
    return un, vn


def predictable_variation(n: int, controls: Sequence) -> np.ndarray:
    """<M>_k = (1/n) sum_{j<=k} phi_j^2, returned with <M>_0 = 0, shape ``(n+1, d, d)``."""
    phis = [sym(p) for p in controls]
    if len(phis) != n:
        raise ValueError(f"expected {n} controls, got {len(phis)}")
    d = phis[0].shape[0]
    if any(p.shape != (d, d) for p in phis):
        raise ValueError("controls must all have the same dimension")
    out = np.zeros((n + 1, d, d))
    for k, p in enumerate(phis, start=1):
        out[k] = out[k - 1] + (p @ p) / n
    return out


def csv_header(d: int) -> list[str]:
    cols = ["k", "t"] + [f"u{i}" for i in range(d)]
    cols += [f"v{i}{j}" for i in range(d) for j in range(d)]
    return cols


def path_rows(path: DiscretePathPair, prefix: Iterable = ()) -> list[list]:
    n, d = path.n, path.dim
    rows = []
    for k in range(n + 1):
        rows.append(list(prefix) + [k, repr(k / n)] + [repr(float(x)) for x in path.u[k]]
                    + [repr(float(x)) for x in path.v[k].reshape(-1)])
    return rows


def write_csv(path: DiscretePathPair, fh) -> None:
    w = csv.writer(fh)
    w.writerow(csv_header(path.dim))
    w.writerows(path_rows(path))


def read_csv(fh) -> DiscretePathPair:
    r = csv.reader(fh)
    header = next(r)
    d = sum(1 for h in header if h.startswith("u"))
    u, v = [], []
    for row in r:
        vals = [float(x) for x in row[2:]]
        u.append(vals[:d])
        v.append(np.array(vals[d:]).reshape(d, d))
    return DiscretePathPair(np.array(u), np.array(v))
