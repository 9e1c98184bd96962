"""Run configuration: defaults, YAML file, flag overrides (flags > file > defaults).

The file is a nested YAML mapping with the same layout as ``DEFAULTS``. Every
key in a file or override must exist in ``DEFAULTS``; unknown keys are
configuration errors, so typos never pass silently.
"""
from __future__ import annotations

import copy
import os
from pathlib import Path

import yaml

from .errors import ConfigError
from .grid import ModelParams, MomentumGrid

OUTPUT_ENV = "HEATCELL_OUTPUT_DIR"

_HALF = {"family": "maxwellian", "beta": 2.0, "drift": 0.0, "amplitude": 1.0, "tail": 0.0,
         "csv": None, "perturbation": {"amplitude": 0.0, "centre": 0.8, "width": 0.55}}

DEFAULTS = {
    "model": {"m": 1.0, "M": 3.0, "rho": None},
    "grid": {"p_max": 6.0, "n": 240},
    "lambda_scale": 1.0,
    "seed": 0,
    "density": {"family": "cone", "params": {}, "csv": None, "tails": [0.0, 0.0]},
    "fixed_point": {"tol": 1e-13, "max_iter": 5000},
    "evolve": {"x_end": 0.1, "tol": 1e-8, "form": "lav", "require_completion": True,
               "stations_plotted": 5},
    "bvp": {"x_end": 0.1, "tol": 1e-10, "evolve_tol": None, "max_newton": 8, "workers": 1},
    "boundary": {"left": copy.deepcopy(_HALF),
                 "right": {**copy.deepcopy(_HALF),
                           "perturbation": {"amplitude": 0.0, "centre": -0.8, "width": 0.55}}},
    "relax": {"cells": 64, "cfl": 0.9, "t_end": 1e9, "time_stepping": "local",
              "scatterer_update": "resolve", "steady_tol": 1e-8},
    "chain": {"N": 16, "b": 1.0, "omega": 0.7, "sweep_tol": 1e-10, "max_sweeps": 500,
              "compare": False},
    "verify": {"n_samples": 100000, "L2": 10.0, "n_points": 10000},
    "sweep": {"subcommand": "fluxes", "key": "grid.n", "values": [120, 240], "workers": 1},
    "output": {"directory": "heatcell-out", "formats": ["csv", "json", "svg"]},
}

_OPEN = {"density.params"}  # mappings whose keys are free-form


def _merge(base: dict, extra: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        key = f"{prefix}{k}"
        if key.rstrip(".") in _OPEN or prefix.rstrip(".") in _OPEN:
            out[k] = v
            continue
        if k not in out:
            raise ConfigError(f"unknown configuration key {key!r}", field=key)
        if isinstance(out[k], dict) and key not in _OPEN:
            if not isinstance(v, dict):
                raise ConfigError(f"{key!r} must be a mapping", field=key)
            out[k] = _merge(out[k], v, key + ".")
        else:
            out[k] = v
    return out


def parse_override(item: str) -> dict:
    """``a.b.c=value`` -> nested dict, value parsed as YAML."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value", field=item)
    key, raw = item.split("=", 1)
    return _nested(key.strip(), yaml.safe_load(raw))


def _nested(key: str, value) -> dict:
    out: dict = {}
    cur = out
    parts = key.split(".")
    for part in parts[:-1]:
        cur = cur.setdefault(part, {})
    cur[parts[-1]] = value
    return out


def load_config(path=None, overrides=(), flags: dict | None = None) -> dict:
    """Resolve a run configuration.

    Precedence, lowest first: ``DEFAULTS``, the YAML file, the output
    directory variable ``HEATCELL_OUTPUT_DIR``, ``key=value`` overrides, then
    ``flags`` (dotted keys to typed values, from command-line options).
    """
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}", field="config", path=str(p))
        try:
            doc = yaml.safe_load(p.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file is not valid YAML: {exc}", field="config") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a mapping", field="config")
        cfg = _merge(cfg, doc)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        cfg["output"]["directory"] = env
    for item in overrides:
        cfg = _merge(cfg, parse_override(item))
    for key, value in (flags or {}).items():
        if value is not None:
            cfg = _merge(cfg, _nested(key, value))
    validate(cfg)
    return cfg


def _num(cfg, key, lo=None, hi=None, lo_open=False, integer=False):
    cur = cfg
    for part in key.split("."):
        cur = cur[part]
    if integer:
        if isinstance(cur, bool) or not isinstance(cur, int):
            raise ConfigError(f"{key} must be an integer", field=key, value=cur)
    elif isinstance(cur, bool) or not isinstance(cur, (int, float)):
        raise ConfigError(f"{key} must be a number", field=key, value=cur)
    if lo is not None and (cur <= lo if lo_open else cur < lo):
        raise ConfigError(f"{key} must be {'>' if lo_open else '>='} {lo}", field=key, value=cur)
    if hi is not None and cur > hi:
        raise ConfigError(f"{key} must be <= {hi}", field=key, value=cur)


def validate(cfg: dict) -> None:
    model_params(cfg)
    _num(cfg, "grid.n", integer=True)
    _num(cfg, "grid.p_max", 0.0, lo_open=True)
    momentum_grid(cfg)
    _num(cfg, "lambda_scale", 0.0)
    _num(cfg, "seed", 0, integer=True)
    _num(cfg, "fixed_point.tol", 0.0, lo_open=True)
    _num(cfg, "fixed_point.max_iter", 1, integer=True)
    _num(cfg, "evolve.x_end", 0.0, lo_open=True)
    _num(cfg, "evolve.tol", 0.0, lo_open=True)
    if cfg["evolve"]["form"] not in ("lav", "champ"):
        raise ConfigError("evolve.form must be lav or champ", field="evolve.form")
    _num(cfg, "bvp.x_end", 0.0, lo_open=True)
    _num(cfg, "bvp.tol", 0.0, lo_open=True)
    _num(cfg, "bvp.max_newton", 1, integer=True)
    _num(cfg, "bvp.workers", 1, integer=True)
    _num(cfg, "relax.cells", 1, integer=True)
    _num(cfg, "relax.cfl", 0.0, 1.0, lo_open=True)
    _num(cfg, "relax.t_end", 0.0, lo_open=True)
    _num(cfg, "chain.N", 1, integer=True)
    _num(cfg, "chain.b", 0.0)
    _num(cfg, "chain.omega", 0.0, 1.0, lo_open=True)
    _num(cfg, "chain.sweep_tol", 0.0, lo_open=True)
    _num(cfg, "verify.n_samples", 1, integer=True)
    _num(cfg, "verify.L2", 1.0)
    for side in ("left", "right"):
        _num(cfg, f"boundary.{side}.beta", 0.0, lo_open=True)
        _num(cfg, f"boundary.{side}.amplitude", 0.0, lo_open=True)
        _num(cfg, f"boundary.{side}.tail", 0.0)
        _num(cfg, f"boundary.{side}.perturbation.width", 0.0, lo_open=True)
        csv = cfg["boundary"][side]["csv"]
        if csv is not None and not Path(csv).exists():
            raise ConfigError(f"boundary.{side}.csv: file not found", field=f"boundary.{side}.csv",
                              path=str(csv))
    tails = cfg["density"]["tails"]
    if (not isinstance(tails, list) or len(tails) != 2
            or not all(isinstance(t, (int, float)) and t >= 0 for t in tails)):
        raise ConfigError("density.tails must be two nonnegative numbers", field="density.tails",
                          value=tails)
    csv = cfg["density"]["csv"]
    if csv is not None and not Path(csv).exists():
        raise ConfigError("density.csv: file not found", field="density.csv", path=str(csv))
    fmts = cfg["output"]["formats"]
    if not isinstance(fmts, list) or not set(fmts) <= {"csv", "json", "svg"}:
        raise ConfigError("output.formats must be a list drawn from csv, json, svg",
                          field="output.formats", value=fmts)


def model_params(cfg: dict) -> ModelParams:
    m = cfg["model"]
    if m.get("rho") is not None:
        return ModelParams.from_rho(float(m["rho"]), m=float(m["m"]))
    return ModelParams(m=float(m["m"]), M=float(m["M"]))


def momentum_grid(cfg: dict) -> MomentumGrid:
    g = cfg["grid"]
    return MomentumGrid(p_max=float(g["p_max"]), n=g["n"])
