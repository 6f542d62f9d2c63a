"""Command-line front end: ``gexpect <command> [--config FILE] [flags]``.

Commands: solve, simulate, oracle, converge, diagnose, validate-dist.

The configuration file is INI with the sections listed in ``SCHEMA``; unknown
sections or keys are rejected. A JSON file is also accepted, either a bare
``{section: {key: value}}`` mapping or a previous run's summary (its ``config``
entry), so any summary can be replayed. Flags override the file.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 computational failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import diagnostics as diag
from .domain import domain_from_config
from .noise import StandardNormal, noise_from_config, validate_mgf_bound, validate_moments
from .oracle import PdeGrid, barenblatt_with_error, closed_form_extremal, solve_barenblatt
from .payoffs import payoff_from_config
from .simulate import dump_paths, realized_volatilities_admissible, simulate_continuous, simulate_discrete
from .solver import StateGridSpec, solve
from .store import load_solution, save_solution

SCHEMA_VERSION = 1
COMMANDS = ("solve", "simulate", "oracle", "converge", "diagnose", "validate-dist")


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------- #
# value parsers (accept INI strings or already-typed JSON values)
# --------------------------------------------------------------------------- #

def _str(x):
    return str(x).strip()


def _float(x):
    return float(x)


def _int(x):
    if isinstance(x, str):
        f = float(x)
    else:
        f = x
    if float(f) != int(f):
        raise ValueError(f"{x!r} is not an integer")
    return int(f)


def _bool(x):
    if isinstance(x, bool):
        return x
    s = str(x).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{x!r} is not a boolean")


def _split(x):
    if isinstance(x, (list, tuple)):
        return list(x)
    return [p for p in str(x).replace(";", ",").split(",") if p.strip()]


def _floats(x):
    return [float(p) for p in _split(x)]


def _ints(x):
    return [_int(p) for p in _split(x)]


def _json(x):
    return json.loads(x) if isinstance(x, str) else x


def _choice(*options):
    def parse(x):
        s = _str(x)
        if s not in options:
            raise ValueError(f"{s!r} is not one of {', '.join(options)}")
        return s
    return parse


def _oracle_spec(x):
    s = _str(x)
    if s in ("auto", "closed_form", "pde", "none"):
        return s
    return float(s)


# section -> key -> (parser, default); None defaults mean "unset"
SCHEMA: dict[str, dict[str, tuple[Callable, Any]]] = {
    "domain": {"kind": (_choice("scalar", "isotropic", "diagonal", "hull"), "scalar"),
               "a_low": (_float, 0.04), "a_high": (_float, 0.25), "dim": (_int, 1),
               "lows": (_floats, None), "highs": (_floats, None), "generators": (_json, None)},
    "noise": {"kind": (_choice("rademacher", "normal", "finite"), "rademacher"), "dim": (_int, None),
              "atoms": (_json, None), "probs": (_json, None)},
    "payoff": {"family": (_str, "call"), "strike": (_float, None), "value": (_float, None),
               "rate": (_float, None), "coeffs": (_floats, None), "s0": (_float, None),
               "half_qv": (_bool, None), "H1": (_float, None), "H2": (_float, None),
               "bound": (_float, None), "markov": (_choice("none"), None)},
    "solver": {"kind": (_choice("auto", "tree", "lattice"), "auto"), "n": (_int, 8),
               "resolution": (_int, 4), "quad_order": (_int, 9), "leaf_budget": (_int, 10_000_000),
               "state_budget": (_int, 5_000_000), "margin_sd": (_float, 6.0),
               "cells_per_step": (_int, 4), "v_cells_per_step": (_int, 1), "richardson": (_bool, False)},
    "simulation": {"mode": (_choice("discrete", "continuous"), "discrete"), "paths": (_int, 100_000),
                   "seed": (_int, 0), "substeps": (_int, 16), "dump_count": (_int, 100)},
    "oracle": {"nx": (_int, 801), "nt": (_int, 2000), "theta": (_float, 0.5),
               "half_width_sd": (_float, 6.0), "x0": (_float, 0.0)},
    "converge": {"n_values": (_ints, [4, 8, 16, 32, 64]), "oracle": (_oracle_spec, "auto")},
    "diagnose": {"sigma": (_float, 0.5), "n_values": (_ints, [8, 16, 32, 64, 128]),
                 "paths": (_int, 10_000), "seed": (_int, 0), "oversample": (_int, 64), "A": (_float, 1.0),
                 "exp_n_values": (_ints, [16, 64, 256])},
    "validate": {"sampled": (_bool, False), "count": (_int, 1_000_000), "seed": (_int, 0),
                 "radius": (_float, 1.0), "n_max": (_int, 1024)},
    "output": {"format": (_choice("json", "csv"), "json")},
}


def _read_raw(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        if "config" in obj and "schema_version" in obj:
            obj = obj["config"]
        if not isinstance(obj, dict) or not all(isinstance(v, dict) for v in obj.values()):
            raise ConfigError(f"{path}: expected a mapping of sections to key/value mappings")
        return obj
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " ")) from exc
    return {s: dict(cp.items(s)) for s in cp.sections()}


def resolve_config(raw: dict) -> dict:
    """Typed config with every key present (defaults filled); raises ConfigError naming section.key."""
    out = {}
    for section in raw:
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]; known: {', '.join(SCHEMA)}")
    for section, keys in SCHEMA.items():
        given = raw.get(section, {})
        for key in given:
            if key not in keys:
                raise ConfigError(f"unknown key {section}.{key}; known: {', '.join(keys)}")
        res = {}
        for key, (parse, default) in keys.items():
            if key in given and given[key] is not None:
                try:
                    res[key] = parse(given[key])
                except (ValueError, TypeError, json.JSONDecodeError) as exc:
                    raise ConfigError(f"{section}.{key}: {exc}") from exc
            else:
                res[key] = default
        out[section] = res
    _check_config(out)
    return out


def _positive(cfg, section, key, strict=True):
    v = cfg[section][key]
    if v is None:
        return
    if (strict and v <= 0) or (not strict and v < 0):
        raise ConfigError(f"{section}.{key}: must be {'> 0' if strict else '>= 0'}, got {v!r}")


def _check_config(cfg: dict) -> None:
    dom = cfg["domain"]
    if dom["kind"] in ("scalar", "isotropic"):
        if dom["a_low"] < 0:
            raise ConfigError(f"domain.a_low: must be >= 0, got {dom['a_low']!r}")
        if dom["a_low"] > dom["a_high"]:
            raise ConfigError(f"domain.a_low: must be <= domain.a_high ({dom['a_low']!r} > {dom['a_high']!r})")
    if dom["kind"] == "diagonal":
        if dom["lows"] is None or dom["highs"] is None:
            raise ConfigError("domain.lows: diagonal domains need lows and highs")
        if len(dom["lows"]) != len(dom["highs"]):
            raise ConfigError("domain.highs: lows and highs differ in length")
        for i, (lo, hi) in enumerate(zip(dom["lows"], dom["highs"])):
            if lo < 0 or lo > hi:
                raise ConfigError(f"domain.lows: entry {i} must satisfy 0 <= low <= high ({lo!r}, {hi!r})")
    if dom["kind"] == "hull" and not dom["generators"]:
        raise ConfigError("domain.generators: hull domains need generators")
    if cfg["noise"]["kind"] == "finite" and (cfg["noise"]["atoms"] is None or cfg["noise"]["probs"] is None):
        raise ConfigError("noise.atoms: finite noise needs atoms and probs")
    for section, key in [("solver", "n"), ("solver", "resolution"), ("solver", "quad_order"),
                         ("solver", "leaf_budget"), ("solver", "state_budget"), ("solver", "margin_sd"),
                         ("solver", "cells_per_step"), ("solver", "v_cells_per_step"),
                         ("simulation", "paths"), ("simulation", "substeps"), ("oracle", "nx"),
                         ("oracle", "nt"), ("oracle", "half_width_sd"), ("diagnose", "paths"),
                         ("diagnose", "oversample"), ("diagnose", "A"), ("validate", "count"),
                         ("validate", "radius"), ("validate", "n_max")]:
        _positive(cfg, section, key)
    _positive(cfg, "simulation", "dump_count", strict=False)
    _positive(cfg, "diagnose", "sigma", strict=False)
    if not 0.0 <= cfg["oracle"]["theta"] <= 1.0:
        raise ConfigError(f"oracle.theta: must lie in [0, 1], got {cfg['oracle']['theta']!r}")
    for section, key in [("converge", "n_values"), ("diagnose", "n_values"), ("diagnose", "exp_n_values")]:
        vals = cfg[section][key]
        if not vals or any(v < 1 for v in vals):
            raise ConfigError(f"{section}.{key}: need a nonempty list of positive integers")
    if len(cfg["diagnose"]["n_values"]) < 3:
        raise ConfigError("diagnose.n_values: need at least 3 values")


def config_to_ini(cfg: dict) -> str:
    """INI text for a resolved config (unset keys omitted)."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for section, keys in cfg.items():
        cp.add_section(section)
        for key, val in keys.items():
            if val is None:
                continue
            if isinstance(val, (list, dict)) and key in ("generators", "atoms", "probs"):
                text = json.dumps(val)
            elif isinstance(val, list):
                text = ", ".join(repr(v) for v in val)
            else:
                text = repr(val) if isinstance(val, float) else str(val)
            cp.set(section, key, text)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# --------------------------------------------------------------------------- #
# object construction
# --------------------------------------------------------------------------- #

def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def build_domain(cfg):
    dom = _drop_none(cfg["domain"])
    try:
        return domain_from_config(dom)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"domain: {exc}") from exc


def build_noise(cfg, dim: int):
    nc = _drop_none(cfg["noise"])
    nc.setdefault("dim", dim)
    try:
        nu = noise_from_config(nc)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"noise: {exc}") from exc
    if nu.dim != dim:
        raise ConfigError(f"noise.dim: {nu.dim} does not match the domain dimension {dim}")
    return nu


def build_payoff(cfg, dim: int):
    try:
        return payoff_from_config(_drop_none(cfg["payoff"]), dim)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"payoff: {exc}") from exc


def build_spec(cfg) -> StateGridSpec:
    s = cfg["solver"]
    return StateGridSpec(margin_sd=s["margin_sd"], cells_per_step=s["cells_per_step"],
                         v_cells_per_step=s["v_cells_per_step"], budget=s["state_budget"])


def _solve(cfg, domain, nu, F, threads):
    s = cfg["solver"]
    return solve(F, domain, nu, s["n"], resolution=s["resolution"], kind=s["kind"],
                 quad_order=s["quad_order"], spec=build_spec(cfg), budget=s["leaf_budget"],
                 richardson=s["richardson"], threads=threads)


def _solution_config(cfg) -> dict:
    return {"domain": _drop_none(cfg["domain"]), "noise": _drop_none(cfg["noise"]),
            "payoff": _drop_none(cfg["payoff"]),
            "spec": {"margin_sd": cfg["solver"]["margin_sd"], "cells_per_step": cfg["solver"]["cells_per_step"],
                     "v_cells_per_step": cfg["solver"]["v_cells_per_step"],
                     "budget": cfg["solver"]["state_budget"]}}


# --------------------------------------------------------------------------- #
# commands
# --------------------------------------------------------------------------- #

def _root_control(vp):
    if vp.solver_kind == "tree":
        c = int(vp.policy.control(0, np.zeros(1, dtype=np.int64))[0])
    else:
        c = int(vp.policy.node_argmax[0][vp.policy.lattice.root_index()])
    return {"index": c, "matrix": vp.grid.controls[c].tolist()}


def cmd_solve(cfg, args):
    domain = build_domain(cfg)
    nu = build_noise(cfg, domain.dim)
    F = build_payoff(cfg, domain.dim)
    vp = _solve(cfg, domain, nu, F, args.threads)
    res = vp.summary()
    res["root_control"] = _root_control(vp)
    if args.save_solution:
        p = save_solution(vp, args.save_solution, _solution_config(cfg))
        res["solution_file"] = str(p)
    return res


def _load_or_solve(cfg, args):
    if args.solution:
        if not Path(args.solution).is_file():
            raise ConfigError(f"--solution: no such file {args.solution}")
        vp = load_solution(args.solution)
        return vp, domain_from_config(load_solution_config(args.solution)["domain"])
    domain = build_domain(cfg)
    nu = build_noise(cfg, domain.dim)
    F = build_payoff(cfg, domain.dim)
    return _solve(cfg, domain, nu, F, args.threads), domain


def load_solution_config(path) -> dict:
    return json.loads(Path(path).with_suffix(".json").read_text())["config"]


def cmd_simulate(cfg, args):
    sim = cfg["simulation"]
    vp, domain = _load_or_solve(cfg, args)
    keep = sim["dump_count"] if args.dump_paths else 0
    if sim["mode"] == "continuous":
        if not isinstance(vp.noise, StandardNormal):
            raise ConfigError("noise.kind: continuous simulation needs a policy solved with normal noise")
        est = simulate_continuous(vp, vp.payoff, sim["substeps"], sim["paths"], sim["seed"],
                                  args.threads, keep)
    else:
        est = simulate_discrete(vp, vp.noise, vp.payoff, sim["paths"], sim["seed"], args.threads, keep)
    if args.dump_paths:
        with open(args.dump_paths, "w", newline="") as fh:
            dump_paths(est, fh)
    res = {"estimate": est.to_dict(), "mode": sim["mode"], "value": vp.value, "n": vp.n,
           "solver_kind": vp.solver_kind,
           "z_score": (est.mean - vp.value) / est.stderr if est.stderr and est.stderr > 0 else None,
           "controls_admissible": realized_volatilities_admissible(vp, est, domain)}
    if args.solution:
        res["solution_file"] = str(args.solution)
    return res


def _terminal_scalar(cfg):
    domain = build_domain(cfg)
    if cfg["domain"]["kind"] != "scalar":
        raise ConfigError("domain.kind: the oracle needs a scalar (d = 1) domain")
    F = build_payoff(cfg, 1)
    if F.terminal_g is None:
        raise ConfigError(f"payoff.family: {F.name!r} is not a terminal payoff g(u(1))")
    return domain, F


def _pde_grid(cfg, a_high):
    o = cfg["oracle"]
    half = o["half_width_sd"] * math.sqrt(max(a_high, 1e-12))
    return PdeGrid(-half, half, o["nx"], o["nt"], o["theta"])


def cmd_oracle(cfg, args):
    domain, F = _terminal_scalar(cfg)
    a_low, a_high = cfg["domain"]["a_low"], cfg["domain"]["a_high"]
    value, err = barenblatt_with_error(F.terminal_g, a_low, a_high, _pde_grid(cfg, a_high), cfg["oracle"]["x0"])
    res = {"pde_value": value, "richardson_error": err, "shape": F.shape}
    if F.shape in ("convex", "concave") and cfg["oracle"]["x0"] == 0.0:
        cf = closed_form_extremal(F.terminal_g, F.shape, a_low, a_high)
        res["closed_form"] = cf
        res["difference"] = abs(value - cf)
    return res


def _oracle_value(cfg):
    spec = cfg["converge"]["oracle"]
    if isinstance(spec, float):
        return spec, "given"
    if spec == "none":
        return None, "none"
    if cfg["domain"]["kind"] != "scalar":
        if spec == "auto":
            return None, "none"
        raise ConfigError("converge.oracle: oracles need a scalar (d = 1) domain")
    F = build_payoff(cfg, 1)
    a_low, a_high = cfg["domain"]["a_low"], cfg["domain"]["a_high"]
    if spec in ("auto", "closed_form") and F.terminal_g is not None and F.shape in ("convex", "concave"):
        return closed_form_extremal(F.terminal_g, F.shape, a_low, a_high), "closed_form"
    if spec == "closed_form":
        raise ConfigError("converge.oracle: closed_form needs a convex or concave terminal payoff")
    if F.terminal_g is not None:
        return solve_barenblatt(F.terminal_g, a_low, a_high, _pde_grid(cfg, a_high)), "pde"
    if spec == "pde":
        raise ConfigError("converge.oracle: pde needs a terminal payoff")
    return None, "none"


def cmd_converge(cfg, args):
    domain = build_domain(cfg)
    nu = build_noise(cfg, domain.dim)
    F = build_payoff(cfg, domain.dim)
    oracle, source = _oracle_value(cfg)
    s = cfg["solver"]
    table = diag.convergence_study(F, domain, nu, cfg["converge"]["n_values"], oracle,
                                   resolution=s["resolution"], kind=s["kind"], quad_order=s["quad_order"],
                                   spec=build_spec(cfg), budget=s["leaf_budget"], threads=args.threads)
    res = table.to_dict(runtimes=not args.no_timestamp)
    res["oracle_source"] = source
    res["_table"] = table
    return res


def cmd_diagnose(cfg, args):
    d = cfg["diagnose"]
    domain = build_domain(cfg)
    nu = build_noise(cfg, domain.dim)
    scal = diag.discretization_scaling(d["sigma"], d["n_values"], d["paths"], d["seed"], d["oversample"],
                                       args.threads)
    expo = diag.exp_moment_probe(domain, nu, d["A"], d["exp_n_values"], d["paths"], d["seed"], args.threads)
    return {"discretization": scal.to_dict(), "exp_moment": expo.to_dict(),
            "passed": bool(scal.passed and expo.passed)}


def cmd_validate(cfg, args):
    v = cfg["validate"]
    domain_dim = cfg["noise"]["dim"] or build_domain(cfg).dim
    nu = build_noise(cfg, domain_dim)
    mom = validate_moments(nu, v["sampled"], v["count"], v["seed"])
    mgf = validate_mgf_bound(nu, v["radius"], v["n_max"])
    return {"noise": nu.to_config(), "moments": mom.to_dict(), "mgf": mgf.to_dict(),
            "passed": bool(mom.passed and mgf.passed)}


HANDLERS = {"solve": cmd_solve, "simulate": cmd_simulate, "oracle": cmd_oracle, "converge": cmd_converge,
            "diagnose": cmd_diagnose, "validate-dist": cmd_validate}


# --------------------------------------------------------------------------- #
# output
# --------------------------------------------------------------------------- #

def _clean(x):
    """JSON-safe copy: numpy to Python, NaN to null, infinities to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items() if not str(k).startswith("_")}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        f = float(x)
        if math.isnan(f):
            return None
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return x


def _flatten(prefix, x, rows):
    if isinstance(x, dict):
        for k, v in x.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, rows)
    elif isinstance(x, list) and x and any(isinstance(v, (dict, list)) for v in x):
        for i, v in enumerate(x):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append([prefix, json.dumps(x)])


def _csv_text(command, result, runtimes) -> str:
    buf = io.StringIO()
    if command == "converge":
        result["_table"].write_csv(buf, runtimes)
        return buf.getvalue()
    w = csv.writer(buf)
    if command == "diagnose":
        w.writerow(["report", "n", "estimate", "stderr", "normalized"])
        for rep in (result["discretization"]["fourth_moment"], result["discretization"]["qv_deviation"],
                    result["exp_moment"]):
            for row in zip(rep["n_values"], rep["estimates"], rep["stderrs"], rep["normalized"]):
                w.writerow([rep["name"]] + [repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()
    rows = []
    _flatten("", _clean(result), rows)
    w.writerow(["key", "value"])
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------- #
# entry point
# --------------------------------------------------------------------------- #

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gexpect", description="Discrete-time G-expectation solver.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="INI or JSON configuration file")
    p.add_argument("--n", type=int, help="number of time steps (solver.n)")
    p.add_argument("--seed", type=int, help="random seed for the command's Monte Carlo section")
    p.add_argument("--paths", type=int, help="Monte Carlo paths for the command's section")
    p.add_argument("--substeps", type=int, help="Brownian substeps per coarse step (continuous mode)")
    p.add_argument("--mode", choices=("discrete", "continuous"), help="simulation mode")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    p.add_argument("--format", choices=("json", "csv"), help="output format")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--no-timestamp", action="store_true", help="omit timestamps and runtimes (test mode)")
    p.add_argument("--dump-paths", help="CSV file for per-path dumps (simulate)")
    p.add_argument("--save-solution", help="write the solved tables to this .npz (solve)")
    p.add_argument("--solution", help="simulate from a saved .npz instead of solving")
    return p


def _apply_flags(raw: dict, args) -> dict:
    raw = {s: dict(v) for s, v in raw.items()}
    mc = {"diagnose": "diagnose", "validate-dist": "validate"}.get(args.command, "simulation")

    def put(section, key, val):
        if val is not None:
            raw.setdefault(section, {})[key] = val

    put("solver", "n", args.n)
    put(mc, "seed", args.seed)
    if mc != "validate":
        put(mc, "paths", args.paths)
    put("simulation", "substeps", args.substeps)
    put("simulation", "mode", args.mode)
    put("output", "format", args.format)
    return raw


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    t0 = time.perf_counter()
    try:
        raw = _read_raw(args.config) if args.config else {}
        cfg = resolve_config(_apply_flags(raw, args))
        result = HANDLERS[args.command](cfg, args)
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, ArithmeticError, MemoryError, OSError) as exc:
        print(f"computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    fmt = cfg["output"]["format"]
    if fmt == "csv":
        _emit(_csv_text(args.command, result, not args.no_timestamp), args.out)
        return 0
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command, "config": cfg, "result": result}
    if not args.no_timestamp:
        doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        doc["runtime_seconds"] = time.perf_counter() - t0
    _emit(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n", args.out)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
