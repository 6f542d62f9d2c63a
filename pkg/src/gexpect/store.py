"""Versioned on-disk form of a solved instance.

A solution is an ``.npz`` archive (value tables, argmax tables, control grid) next to
a JSON summary with the same stem. The payoff, noise law, domain and lattice spec
are stored as configuration and rebuilt on load, since payoffs are callables.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .domain import ControlGrid, domain_from_config
from .noise import QuadratureRule, noise_from_config
from .payoffs import payoff_from_config
from .solver import LatticePolicy, StateGridSpec, StateLattice, TreePolicy, ValueAndPolicy

FORMAT_VERSION = 1


class SolutionFormatError(ValueError):
    pass


def _summary_path(path: Path) -> Path:
    return path.with_suffix(".json")


def save_solution(vp: ValueAndPolicy, path, config: dict) -> Path:
    """Write ``path`` (.npz) and its JSON summary.

    ``config`` needs the keys ``domain``, ``noise``, ``payoff`` (dicts accepted by the
    ``*_from_config`` builders) and, for lattice solutions, ``spec``.
    """
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    meta = {"format_version": FORMAT_VERSION, "solver_kind": vp.solver_kind, "value": vp.value,
            "n": vp.n, "grid_resolution": vp.grid.resolution, "config": config,
            "quad_exactness": vp.quad.exactness_degree,
            "diagnostics": vp.diagnostics}
    arrays = {"meta": np.array(json.dumps(meta, sort_keys=True)), "controls": vp.grid.controls,
              "quad_nodes": vp.quad.nodes, "quad_weights": vp.quad.weights}
    if vp.solver_kind == "tree":
        pol: TreePolicy = vp.policy
        arrays["tree_mq"] = np.array([pol.m, pol.q])
        for k, a in enumerate(pol.stages):
            arrays[f"policy_{k}"] = a
    else:
        pol: LatticePolicy = vp.policy
        for k, a in enumerate(pol.node_argmax):
            arrays[f"policy_{k}"] = a
    for k, t in enumerate(vp.value_function):
        arrays[f"value_{k}"] = np.asarray(t)
    np.savez_compressed(path, **arrays)
    _summary_path(path).write_text(json.dumps(
        {k: meta[k] for k in ("format_version", "solver_kind", "value", "n", "grid_resolution",
                              "config", "diagnostics")}, indent=2, sort_keys=True) + "\n")
    return path


def load_solution(path) -> ValueAndPolicy:
    path = Path(path)
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("format_version") != FORMAT_VERSION:
            raise SolutionFormatError(
                f"{path}: format version {meta.get('format_version')} (expected {FORMAT_VERSION})")
        n = int(meta["n"])
        cfg = meta["config"]
        grid = ControlGrid(z["controls"], int(meta["grid_resolution"]))
        nu = noise_from_config(cfg["noise"])
        F = payoff_from_config(cfg["payoff"], grid.dim)
        values = [z[f"value_{k}"] for k in range(n + 1)]
        policy_tables = [z[f"policy_{k}"] for k in range(n)]
        quad = QuadratureRule(z["quad_nodes"], z["quad_weights"], int(meta["quad_exactness"]))
        if meta["solver_kind"] == "tree":
            m, q = (int(x) for x in z["tree_mq"])
            policy = TreePolicy(policy_tables, m, q)
        else:
            domain = domain_from_config(cfg["domain"])
            spec = StateGridSpec(**cfg["spec"])
            lat = StateLattice(F, grid, n, domain.norm(), spec)
            if tuple(values[0].shape) != lat.shape:
                raise SolutionFormatError(f"{path}: stored tables {values[0].shape} do not match "
                                          f"the rebuilt lattice {lat.shape}")
            policy = LatticePolicy(lat, values, policy_tables, quad)
    return ValueAndPolicy(value=float(meta["value"]), n=n, solver_kind=meta["solver_kind"], grid=grid,
                          policy=policy, value_function=values, noise=nu, quad=quad, payoff=F,
                          diagnostics=meta["diagnostics"])


def spec_config(spec: StateGridSpec) -> dict:
    return asdict(spec)
