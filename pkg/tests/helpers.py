"""Random full-history payoffs for the sublinear-expectation property checks."""

import numpy as np

from gexpect import payoffs as P


def _features(n, gen):
    j = int(gen.integers(1, n + 1))
    K = float(gen.uniform(-0.3, 0.3))
    w = float(gen.uniform(0.5, 4.0))
    return [
        lambda u, v: u[..., -1, 0],
        lambda u, v: np.maximum(u[..., -1, 0] - K, 0.0),
        lambda u, v: np.max(u[..., 0], axis=-1),
        lambda u, v: np.abs(u[..., j, 0]),
        lambda u, v: v[..., -1, 0, 0],
        lambda u, v: np.sin(w * u[..., -1, 0]),
        lambda u, v: np.mean(u[..., 0], axis=-1),
    ]


def random_payoff(gen, n, nonneg=False):
    feats = _features(n, gen)
    c = gen.standard_normal(len(feats))
    if nonneg:
        c = np.abs(c)
    return P.custom(lambda u, v: sum(ci * f(u, v) for ci, f in zip(c, feats)),
                    H1=float(np.sum(np.abs(c))) + 1.0, H2=0.0, name="random")


def random_pair(seed, n):
    """(F, G, H) with H >= 0 so F <= F + H pointwise."""
    gen = np.random.default_rng(seed)
    return random_payoff(gen, n), random_payoff(gen, n), random_payoff(gen, n, nonneg=True)
