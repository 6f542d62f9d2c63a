"""Path functionals F(u, v) with exponential-Lipschitz growth constants.

A payoff carries a batched ``path_fn`` acting on knot arrays ``u`` of shape
``(..., N+1, d)`` and ``v`` of shape ``(..., N+1, d, d)``. Since the interpolant
is piecewise linear, functionals such as the running maximum or the time average
are computed exactly from knots (the latter with trapezoid weights), for any
number of knots ``N``.

Payoffs that only need a low-dimensional summary of the path also provide a
``state_fn`` evaluated on the reduced Markov state; the lattice solver uses it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import rng as _rng
from .domain import IsotropicInterval, UncertaintyDomain
from .paths import InterpolatedPath


class Markov(str, enum.Enum):
    TERMINAL = "terminal"
    RUNNING_MAX = "running_max"
    PATH_AVERAGE = "path_average"
    NONE = "none"


class PayoffEvaluationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PayoffFunctional:
    name: str
    dim: int
    path_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    H1: float
    H2: float
    bound: Optional[float] = None
    markov: Markov = Markov.NONE
    # state_fn(u (..., d), v (..., d, d), extra (...) or None) -> (...)
    state_fn: Optional[Callable] = None
    uses_qv: bool = True
    # scalar terminal function of u^1(1), when the payoff is of that form
    terminal_g: Optional[Callable[[np.ndarray], np.ndarray]] = None
    shape: Optional[str] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.H1 < 0 or self.H2 < 0:
            raise ValueError("growth constants H1, H2 must be nonnegative")
        if self.markov is not Markov.NONE and self.state_fn is None:
            raise ValueError("a Markov descriptor requires a state_fn")

    def values(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.asarray(self.path_fn(u, v), dtype=float)
        if not np.all(np.isfinite(out)):
            raise PayoffEvaluationError(f"payoff {self.name!r} produced non-finite values")
        return out

    def state_values(self, u, v, extra=None) -> np.ndarray:
        if self.state_fn is None:
            raise ValueError(f"payoff {self.name!r} has no Markov state evaluator")
        out = np.asarray(self.state_fn(u, v, extra), dtype=float)
        if not np.all(np.isfinite(out)):
            raise PayoffEvaluationError(f"payoff {self.name!r} produced non-finite values")
        return out

    def scaled(self, lam: float) -> "PayoffFunctional":
        """lam * F (lam >= 0)."""
        if lam < 0:
            raise ValueError("scaling must be nonnegative")
        sf = None if self.state_fn is None else (lambda u, v, e, f=self.state_fn: lam * f(u, v, e))
        tg = None if self.terminal_g is None else (lambda x, g=self.terminal_g: lam * g(x))
        return replace(self, name=f"{lam!r}*{self.name}", path_fn=lambda u, v, f=self.path_fn: lam * f(u, v),
                       H1=lam * self.H1, state_fn=sf, terminal_g=tg,
                       bound=None if self.bound is None else lam * self.bound)

    def __add__(self, other: "PayoffFunctional") -> "PayoffFunctional":
        markov = self.markov if self.markov == other.markov else Markov.NONE
        sf = None
        if markov is not Markov.NONE:
            sf = lambda u, v, e, f=self.state_fn, g=other.state_fn: f(u, v, e) + g(u, v, e)
        return PayoffFunctional(
            name=f"({self.name}+{other.name})", dim=self.dim,
            path_fn=lambda u, v, f=self.path_fn, g=other.path_fn: f(u, v) + g(u, v),
            H1=self.H1 + other.H1, H2=max(self.H2, other.H2), markov=markov, state_fn=sf,
            uses_qv=self.uses_qv or other.uses_qv)


def evaluate(F: PayoffFunctional, path: InterpolatedPath) -> float:
    if path.u.shape[-1] != F.dim:
        raise ValueError(f"payoff dimension {F.dim} does not match path dimension {path.u.shape[-1]}")
    return float(F.values(path.u, path.v))


# --------------------------------------------------------------------------- #
# knot functionals
# --------------------------------------------------------------------------- #

def running_max(u: np.ndarray, coord: int = 0) -> np.ndarray:
    return np.max(u[..., coord], axis=-1)


def time_average(u: np.ndarray, coord: int = 0) -> np.ndarray:
    x = u[..., coord]
    N = x.shape[-1] - 1
    return (np.sum(x, axis=-1) - 0.5 * (x[..., 0] + x[..., -1])) / N


def stock_path(path: InterpolatedPath, s0, half_qv: bool = False) -> "StockPath":
    """S^i = s0_i exp(u^i - c v^ii) at knots, c = 1 (default) or 1/2."""
    s0 = np.atleast_1d(np.asarray(s0, dtype=float))
    if np.any(s0 <= 0):
        raise ValueError("s0 must be positive")
    return StockPath(_stock_knots(path.u, path.v, s0, half_qv))


def _stock_knots(u, v, s0, half_qv):
    c = 0.5 if half_qv else 1.0
    diag = np.diagonal(v, axis1=-2, axis2=-1)
    return s0 * np.exp(u - c * diag)


@dataclass(frozen=True)
class StockPath:
    knots: np.ndarray  # (n+1, d)

    def __call__(self, t):
        n = self.knots.shape[0] - 1
        t = np.asarray(t, dtype=float)
        k = np.minimum(np.floor(n * t).astype(int), n - 1)
        w = np.expand_dims(n * t - k, -1)
        return (1 - w) * self.knots[k] + w * self.knots[k + 1]


# --------------------------------------------------------------------------- #
# built-in families
# --------------------------------------------------------------------------- #

def constant(c: float, dim: int = 1) -> PayoffFunctional:
    c = float(c)
    return PayoffFunctional(
        name=f"constant({c!r})", dim=dim,
        path_fn=lambda u, v: np.full(u.shape[:-2], c),
        H1=1.0, H2=0.0, bound=abs(c), markov=Markov.TERMINAL,
        state_fn=lambda u, v, e: np.full(u.shape[:-1], c), uses_qv=False,
        terminal_g=lambda x: np.full(np.shape(x), c), shape="linear",
        params={"family": "constant", "value": c})


def terminal(g: Callable, name: str, H1: float, H2: float = 0.0, dim: int = 1,
             coord: int = 0, shape: Optional[str] = None, bound: Optional[float] = None,
             params: Optional[dict] = None) -> PayoffFunctional:
    """F(u, v) = g(u^coord(1))."""
    return PayoffFunctional(
        name=name, dim=dim,
        path_fn=lambda u, v: g(u[..., -1, coord]),
        H1=H1, H2=H2, bound=bound, markov=Markov.TERMINAL,
        state_fn=lambda u, v, e: g(u[..., coord]), uses_qv=False,
        terminal_g=g if coord == 0 else None, shape=shape,
        params=params or {"family": name})


def call(strike: float = 0.0, dim: int = 1) -> PayoffFunctional:
    K = float(strike)
    return terminal(lambda x: np.maximum(x - K, 0.0), f"call({K!r})", 1.0, 0.0, dim,
                    shape="convex", params={"family": "call", "strike": K})


def put(strike: float = 0.0, dim: int = 1) -> PayoffFunctional:
    K = float(strike)
    return terminal(lambda x: np.maximum(K - x, 0.0), f"put({K!r})", 1.0, 0.0, dim,
                    shape="convex", params={"family": "put", "strike": K})


def square(dim: int = 1) -> PayoffFunctional:
    # |x^2 - y^2| <= (|x| + |y|)|x - y| <= exp(|x| + |y|)|x - y|
    return terminal(lambda x: x * x, "square", 1.0, 1.0, dim, shape="convex",
                    params={"family": "square"})


def absolute(dim: int = 1) -> PayoffFunctional:
    return terminal(np.abs, "abs", 1.0, 0.0, dim, shape="convex", params={"family": "abs"})


def neg_abs(dim: int = 1) -> PayoffFunctional:
    return terminal(lambda x: -np.abs(x), "neg_abs", 1.0, 0.0, dim, shape="concave",
                    params={"family": "neg_abs"})


def exponential(rate: float = 1.0, dim: int = 1) -> PayoffFunctional:
    a = float(rate)
    return terminal(lambda x: np.exp(a * x), f"exp({a!r})", abs(a), abs(a), dim, shape="convex",
                    params={"family": "exp", "rate": a})


def linear(coeffs) -> PayoffFunctional:
    a = np.atleast_1d(np.asarray(coeffs, dtype=float))
    return PayoffFunctional(
        name=f"linear({a.tolist()})", dim=len(a),
        path_fn=lambda u, v: u[..., -1, :] @ a,
        H1=float(np.sum(np.abs(a))) or 1.0, H2=0.0, markov=Markov.TERMINAL,
        state_fn=lambda u, v, e: u @ a, uses_qv=False,
        terminal_g=(lambda x: a[0] * x) if len(a) == 1 else None, shape="linear",
        params={"family": "linear", "coeffs": a.tolist()})


def qv_trace(dim: int = 1) -> PayoffFunctional:
    # |tr dv| <= sum_i |dv_ii| <= d ||dv||
    return PayoffFunctional(
        name="qv_trace", dim=dim,
        path_fn=lambda u, v: np.trace(v[..., -1, :, :], axis1=-2, axis2=-1),
        H1=float(dim), H2=0.0, markov=Markov.TERMINAL,
        state_fn=lambda u, v, e: np.trace(v, axis1=-2, axis2=-1), uses_qv=True,
        params={"family": "qv_trace"})


def stock_call(s0=1.0, strike: float = 1.0, dim: int = 1, coord: int = 0,
               half_qv: bool = False, put_: bool = False) -> PayoffFunctional:
    """European call (or put) on S^coord(1), S = s0 exp(B - c<B>)."""
    s0v = np.broadcast_to(np.asarray(s0, dtype=float), (dim,)).copy()
    K = float(strike)
    c = 0.5 if half_qv else 1.0

    def g(u1, v11):
        s = s0v[coord] * np.exp(u1 - c * v11)
        return np.maximum(K - s, 0.0) if put_ else np.maximum(s - K, 0.0)

    kind = "stock_put" if put_ else "stock_call"
    # |e^a - e^b| <= e^{max(a, b)}|a - b| and |a| <= ||u|| + ||v||, so H1 = s0, H2 = 1
    return PayoffFunctional(
        name=f"{kind}(s0={s0v[coord]!r},K={K!r})", dim=dim,
        path_fn=lambda u, v: g(u[..., -1, coord], v[..., -1, coord, coord]),
        H1=float(s0v[coord]), H2=1.0, bound=K if put_ else None, markov=Markov.TERMINAL,
        state_fn=lambda u, v, e: g(u[..., coord], v[..., coord, coord]), uses_qv=True,
        params={"family": kind, "s0": s0v.tolist(), "strike": K, "half_qv": half_qv})


def stock_put(s0=1.0, strike: float = 1.0, dim: int = 1, coord: int = 0,
              half_qv: bool = False) -> PayoffFunctional:
    return stock_call(s0, strike, dim, coord, half_qv, put_=True)


def lookback(strike: Optional[float] = None, dim: int = 1) -> PayoffFunctional:
    """max_t u^1(t), or (max_t u^1(t) - K)^+ with a strike."""
    if strike is None:
        h = lambda m: m
        name = "lookback"
    else:
        K = float(strike)
        h = lambda m: np.maximum(m - K, 0.0)
        name = f"lookback({K!r})"
    return PayoffFunctional(
        name=name, dim=dim, path_fn=lambda u, v: h(running_max(u)),
        H1=1.0, H2=0.0, markov=Markov.RUNNING_MAX,
        state_fn=lambda u, v, e: h(e), uses_qv=False,
        params={"family": "lookback", "strike": strike})


def asian_call(strike: float = 0.0, dim: int = 1) -> PayoffFunctional:
    """(int_0^1 u^1(t) dt - K)^+."""
    K = float(strike)
    return PayoffFunctional(
        name=f"asian_call({K!r})", dim=dim,
        path_fn=lambda u, v: np.maximum(time_average(u) - K, 0.0),
        H1=1.0, H2=0.0, markov=Markov.PATH_AVERAGE,
        state_fn=lambda u, v, e: np.maximum(e - K, 0.0), uses_qv=False,
        params={"family": "asian_call", "strike": K})


def custom(path_fn: Callable, H1: float, H2: float, dim: int = 1, name: str = "custom",
           bound: Optional[float] = None) -> PayoffFunctional:
    """Full-history payoff from a batched knot function; tree solver only."""
    return PayoffFunctional(name=name, dim=dim, path_fn=path_fn, H1=H1, H2=H2, bound=bound,
                            params={"family": "custom"})


FAMILIES = {
    "constant": lambda p, d: constant(p.get("value", 0.0), d),
    "call": lambda p, d: call(p.get("strike", 0.0), d),
    "put": lambda p, d: put(p.get("strike", 0.0), d),
    "square": lambda p, d: square(d),
    "abs": lambda p, d: absolute(d),
    "neg_abs": lambda p, d: neg_abs(d),
    "exp": lambda p, d: exponential(p.get("rate", 1.0), d),
    "linear": lambda p, d: linear(p.get("coeffs", [1.0] * d)),
    "qv_trace": lambda p, d: qv_trace(d),
    "stock_call": lambda p, d: stock_call(p.get("s0", 1.0), p.get("strike", 1.0), d,
                                          half_qv=p.get("half_qv", False)),
    "stock_put": lambda p, d: stock_put(p.get("s0", 1.0), p.get("strike", 1.0), d,
                                        half_qv=p.get("half_qv", False)),
    "lookback": lambda p, d: lookback(p.get("strike"), d),
    "asian_call": lambda p, d: asian_call(p.get("strike", 0.0), d),
}


def payoff_from_config(cfg: dict, dim: int) -> PayoffFunctional:
    family = cfg.get("family")
    if family not in FAMILIES:
        raise ValueError(f"unknown payoff family {family!r}; choose from {sorted(FAMILIES)}")
    F = FAMILIES[family](cfg, dim)
    overrides = {}
    if "H1" in cfg:
        overrides["H1"] = float(cfg["H1"])
    if "H2" in cfg:
        overrides["H2"] = float(cfg["H2"])
    if "bound" in cfg:
        overrides["bound"] = float(cfg["bound"])
    if cfg.get("markov") == "none":
        overrides["markov"] = Markov.NONE
    return replace(F, **overrides) if overrides else F


# --------------------------------------------------------------------------- #
# growth-condition checker
# --------------------------------------------------------------------------- #

@dataclass
class CheckReport:
    trials: int
    max_ratio: float
    passed: bool
    worst: dict = field(default_factory=dict)
    bound_violations: int = 0


def _sup_u(u):
    return np.max(np.abs(u), axis=(-1, -2))


def _sup_v(v):
    return np.max(np.sum(np.abs(v), axis=-1), axis=(-1, -2))


def _random_paths(gen, trials, n, controls, scale):
    d = controls.shape[1]
    idx = gen.integers(0, len(controls), size=(trials, n))
    gam = controls[idx]  # (T, n, d, d)
    xi = gen.standard_normal((trials, n, d))
    du = np.einsum("tkij,tkj->tki", gam, xi) / np.sqrt(n)
    dv = np.einsum("tkij,tkjl->tkil", gam, gam) / n
    u = np.concatenate([np.zeros((trials, 1, d)), np.cumsum(du, axis=1)], axis=1)
    v = np.concatenate([np.zeros((trials, 1, d, d)), np.cumsum(dv, axis=1)], axis=1)
    return u * scale[:, None, None], v * scale[:, None, None, None] ** 2


def lipschitz_bound_check(F: PayoffFunctional, trials: int, seed: int,
                          domain: Optional[UncertaintyDomain] = None, n: int = 8) -> CheckReport:
    """Sample path pairs and test the exponential-Lipschitz inequality with (H1, H2).

    Paths have increments of size 1/sqrt(n) with QV increments in D/n, then are
    rescaled by a random magnitude (log-uniform over roughly [0.05, 12]) so both
    small and large paths are probed. Half the pairs are independent paths, the
    other half are small perturbations of each other.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    domain = domain or IsotropicInterval(F.dim, 0.0, 1.0)
    controls = domain.sqrt_grid(4).controls
    gen = _rng.block_generator(seed, 0, _rng.LIPSCHITZ)
    scale = np.exp(gen.uniform(-3.0, 2.5, size=trials))
    u1, v1 = _random_paths(gen, trials, n, controls, scale)
    u2, v2 = _random_paths(gen, trials, n, controls, scale)
    near = gen.random(trials) < 0.5
    eps = np.exp(gen.uniform(-10.0, 0.0, size=trials))
    u2 = np.where(near[:, None, None], u1 + eps[:, None, None] * (u2 - u1), u2)
    v2 = np.where(near[:, None, None, None], v1 + eps[:, None, None, None] * (v2 - v1), v2)

    f1, f2 = F.values(u1, v1), F.values(u2, v2)
    dist = _sup_u(u1 - u2) + _sup_v(v1 - v2)
    growth = F.H2 * (_sup_u(u1) + _sup_u(u2) + _sup_v(v1) + _sup_v(v2))
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        rhs = F.H1 * np.exp(growth) * dist
        lhs = np.abs(f1 - f2)
        ratio = np.where(lhs == 0, 0.0, lhs / rhs)
    ratio = np.nan_to_num(ratio, nan=np.inf)
    i = int(np.argmax(ratio))
    bound_violations = 0
    if F.bound is not None:
        bound_violations = int(np.sum(np.abs(f1) > F.bound) + np.sum(np.abs(f2) > F.bound))
    max_ratio = float(ratio[i])
    return CheckReport(trials=trials, max_ratio=max_ratio,
                       passed=bool(max_ratio <= 1 + 1e-9 and bound_violations == 0),
                       worst={"index": i, "lhs": float(lhs[i]), "rhs": float(rhs[i])},
                       bound_violations=bound_violations)
