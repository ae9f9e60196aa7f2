"""Experiment configuration: loading, defaults, validation and echo."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Any, Dict, List

import yaml

from ..clustering import MODES
from ..errors import ConfigError

SCENARIOS = ("gaussian", "sbm-slice", "multilayer", "matrix-files")
BOUND_IDS = ("dk", "thm2", "rankR", "thm3", "thm4", "thm5", "thm6")

MAX_N = 8192
MAX_LAYERS = 512

DEFAULTS: Dict[str, Any] = {
    "scenario": "gaussian",
    "gaussian": {
        "n": 400, "m": 400, "r": 3, "theta": 1.0, "sigma": 1.0,
        "gamma": None, "nu": None, "c0": 1.5, "c_sigma": 0.5, "balanced_exact": True,
    },
    "sbm_slice": {
        "n": 4096, "r": 2, "m": 64, "rho": None, "b": 0.1,
        "c0": 1.5, "c_sigma": 0.1, "balanced_exact": True,
    },
    "multilayer": {
        "n": 500, "L": 60, "M": 3, "K": [2, 2, 2], "rho": 0.2, "c_lambda": 0.15,
    },
    "matrix_files": {
        "truth": None, "observed": None, "r": None, "labels": None,
    },
    "modes": ["direct", "symmetrized-hollow"],
    "bounds": ["thm4", "thm5"],
    "replicates": 10,
    "master_seed": 0,
    "seed_start": 0,
    "threads": 1,
    "kmeans": {"restarts": 20, "max_iters": 300, "a": 0.5},
    "knobs": None,
    "constants": {},
    "calibration": {
        "enabled": False,
        "calib_seeds": [0, 100],
        "valid_seeds": [100, 300],
        "quantile": 0.99,
    },
    "sweep": {
        "axes": "gamma_nu",
        "x": [],
        "y": [],
    },
    "output": "results.csv",
    "allow_large": False,
}


@dataclass
class ExperimentConfig:
    """Fully resolved configuration (defaults merged in)."""

    data: Dict[str, Any]

    def __getitem__(self, key):
        return self.data[key]

    @property
    def scenario(self) -> str:
        return self.data["scenario"]

    @property
    def params(self) -> Dict[str, Any]:
        return self.data[self.scenario.replace("-", "_")]

    @property
    def seeds(self) -> List[int]:
        s0 = int(self.data["seed_start"])
        return list(range(s0, s0 + int(self.data["replicates"])))

    def replace(self, **updates) -> "ExperimentConfig":
        d = copy.deepcopy(self.data)
        for k, v in updates.items():
            if isinstance(v, dict) and isinstance(d.get(k), dict):
                d[k].update(v)
            else:
                d[k] = v
        return ExperimentConfig(d)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True, default_flow_style=False)


def _merge(base: Dict[str, Any], over: Dict[str, Any], path: str, problems: List[str]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}{k}"
        if k not in base:
            problems.append(f"unknown key '{where}'")
            continue
        if isinstance(base[k], dict) and base[k]:
            if not isinstance(v, dict):
                problems.append(f"'{where}' must be a mapping")
                continue
            out[k] = _merge(base[k], v, where + ".", problems)
        else:
            out[k] = v
    return out


def _num(d, key, where, problems, lo=None, hi=None, integer=False, allow_none=False):
    v = d.get(key)
    where = f"{where}.{key}" if where else key
    if v is None:
        if not allow_none:
            problems.append(f"'{where}' is required")
        return
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
        problems.append(f"'{where}' must be {'an integer' if integer else 'a number'}, got {v!r}")
        return
    if not math.isfinite(v):
        problems.append(f"'{where}' must be finite")
    elif lo is not None and v < lo:
        problems.append(f"'{where}' must be >= {lo}, got {v}")
    elif hi is not None and v > hi:
        problems.append(f"'{where}' must be <= {hi}, got {v}")


def validate(d: Dict[str, Any]) -> List[str]:
    """Return every problem found in a merged config (empty list if valid)."""
    p: List[str] = []
    if d["scenario"] not in SCENARIOS:
        p.append(f"'scenario' must be one of {SCENARIOS}, got {d['scenario']!r}")
    modes = d["modes"]
    if not isinstance(modes, list) or not modes:
        p.append("'modes' must be a nonempty list")
    else:
        for m in modes:
            if m not in MODES:
                p.append(f"unknown mode {m!r} (choose from {MODES})")
        if len(set(modes)) != len(modes):
            p.append("'modes' contains duplicates")
    bounds = d["bounds"]
    if not isinstance(bounds, list):
        p.append("'bounds' must be a list")
    else:
        for b in bounds:
            if b not in BOUND_IDS:
                p.append(f"unknown bound {b!r} (choose from {BOUND_IDS})")
    _num(d, "replicates", "", p, lo=1, integer=True)
    _num(d, "master_seed", "", p, lo=0, hi=2**64 - 1, integer=True)
    _num(d, "seed_start", "", p, lo=0, integer=True)
    _num(d, "threads", "", p, lo=1, integer=True)
    km = d["kmeans"]
    _num(km, "restarts", "kmeans", p, lo=1, integer=True)
    _num(km, "max_iters", "kmeans", p, lo=1, integer=True)
    _num(km, "a", "kmeans", p, lo=1e-12)
    if not isinstance(d["constants"], dict):
        p.append("'constants' must be a mapping of bound id to constant")
    else:
        for k, v in d["constants"].items():
            if k not in BOUND_IDS:
                p.append(f"'constants' has unknown bound {k!r}")
            _num(d["constants"], k, "constants", p, lo=0)
    if d["knobs"] is not None:
        if not isinstance(d["knobs"], dict):
            p.append("'knobs' must be a mapping")
        else:
            for k in d["knobs"]:
                if k not in ("eps1", "eps2", "t_eps1", "t_eps2"):
                    p.append(f"'knobs' has unknown key {k!r}")
                else:
                    _num(d["knobs"], k, "knobs", p, lo=0)
    cal = d["calibration"]
    ranges_ok = True
    for key in ("calib_seeds", "valid_seeds"):
        rng = cal.get(key)
        if not (isinstance(rng, list) and len(rng) == 2 and all(isinstance(x, int) for x in rng) and rng[0] < rng[1]):
            p.append(f"'calibration.{key}' must be [start, stop) with start < stop")
            ranges_ok = False
    _num(cal, "quantile", "calibration", p, lo=0.0, hi=1.0)
    if cal.get("enabled") and ranges_ok:
        a, b = cal["calib_seeds"], cal["valid_seeds"]
        if a[0] < b[1] and b[0] < a[1]:
            p.append("calibration seed ranges overlap")
    big = bool(d.get("allow_large"))
    sc = d["scenario"]
    if sc == "gaussian":
        g = d["gaussian"]
        _num(g, "m", "gaussian", p, lo=2, integer=True)
        _num(g, "r", "gaussian", p, lo=1, integer=True)
        _num(g, "theta", "gaussian", p, lo=1e-300)
        _num(g, "c0", "gaussian", p, lo=1.0)
        _num(g, "c_sigma", "gaussian", p, lo=0.0, hi=1.0)
        if g.get("gamma") is None:
            _num(g, "n", "gaussian", p, lo=2, integer=True)
        else:
            _num(g, "gamma", "gaussian", p, lo=0.01, hi=4)
        if g.get("nu") is None:
            _num(g, "sigma", "gaussian", p, lo=0.0)
        else:
            _num(g, "nu", "gaussian", p, lo=-4, hi=4)
        n = g.get("n") if g.get("gamma") is None else (
            round(g["m"] ** g["gamma"]) if isinstance(g.get("m"), int) and isinstance(g.get("gamma"), (int, float)) else None)
        for name, val in (("n", n), ("m", g.get("m"))):
            if isinstance(val, int) and val > MAX_N and not big:
                p.append(f"gaussian {name}={val} exceeds the desk cap {MAX_N} (set allow_large)")
    elif sc == "sbm-slice":
        s = d["sbm_slice"]
        _num(s, "n", "sbm_slice", p, lo=3, integer=True)
        _num(s, "m", "sbm_slice", p, lo=2, integer=True)
        _num(s, "r", "sbm_slice", p, lo=1, integer=True)
        _num(s, "rho", "sbm_slice", p, lo=1e-300, hi=1.0, allow_none=True)
        _num(s, "b", "sbm_slice", p, lo=0.0, hi=0.999)
        if isinstance(s.get("n"), int) and s["n"] > MAX_N and not big:
            p.append(f"sbm_slice n={s['n']} exceeds the desk cap {MAX_N} (set allow_large)")
        if isinstance(s.get("n"), int) and isinstance(s.get("m"), int) and not s["m"] < s["n"]:
            p.append("sbm_slice.m must be smaller than n")
    elif sc == "multilayer":
        ml = d["multilayer"]
        _num(ml, "n", "multilayer", p, lo=2, integer=True)
        _num(ml, "L", "multilayer", p, lo=2, integer=True)
        _num(ml, "M", "multilayer", p, lo=1, integer=True)
        _num(ml, "rho", "multilayer", p, lo=1e-300, hi=1.0)
        K = ml.get("K")
        if not (isinstance(K, list) and all(isinstance(k, int) and k >= 1 for k in K)):
            p.append("'multilayer.K' must be a list of positive integers")
        elif isinstance(ml.get("M"), int) and len(K) != ml["M"]:
            p.append("'multilayer.K' must have M entries")
        if isinstance(ml.get("L"), int) and ml["L"] > MAX_LAYERS and not big:
            p.append(f"multilayer L={ml['L']} exceeds the desk cap {MAX_LAYERS} (set allow_large)")
        if isinstance(ml.get("n"), int) and ml["n"] > MAX_N and not big:
            p.append(f"multilayer n={ml['n']} exceeds the desk cap {MAX_N} (set allow_large)")
    elif sc == "matrix-files":
        mf = d["matrix_files"]
        for key in ("truth", "observed"):
            if not isinstance(mf.get(key), str):
                p.append(f"'matrix_files.{key}' must be a file path")
        _num(mf, "r", "matrix_files", p, lo=1, integer=True)
    sw = d["sweep"]
    if sw.get("axes") not in ("gamma_nu", "alpha_beta"):
        p.append("'sweep.axes' must be 'gamma_nu' or 'alpha_beta'")
    return p


def resolve(raw: Dict[str, Any] | None) -> ExperimentConfig:
    """Merge ``raw`` over the defaults and validate, listing all problems."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level")
    problems: List[str] = []
    merged = _merge(DEFAULTS, raw, "", problems)
    problems.extend(validate(merged))
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(merged)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return resolve(raw)
