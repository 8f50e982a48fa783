"""Flat JSON run configuration.

Keys are RunConfig field names plus the experiment's own parameters, all at
top level::

    {"seed": 42, "capacity": 16, "generations": 200,
     "experiment": "arithmetic", "start": 1, "step": 1}

Unknown keys are errors, so a typo can't silently fall back to a default.
Rationals may be given as numbers or as strings like ``"1/4"``.
"""

from __future__ import annotations

import json
from dataclasses import fields
from fractions import Fraction
from pathlib import Path

from .dsl import ParseError, parse_text, to_text
from .engine import ConfigError, RunConfig
from .experiments import ExperimentSpec, Family, Generator
from .organism import StepBackMode

REQUIRED = ("seed", "capacity", "generations", "experiment")

# experiment id -> (family, generator)
EXPERIMENTS = {
    "constant": (Family.SEQUENCE_PREDICTION, Generator.CONSTANT),
    "arithmetic": (Family.SEQUENCE_PREDICTION, Generator.ARITHMETIC),
    "address_copy": (Family.SEQUENCE_PREDICTION, Generator.ADDRESS_COPY),
    "integer_series": (Family.INTEGER_SERIES, Generator.CONSTANT),
    "punishment_establishment": (Family.PUNISHMENT_ESTABLISHMENT, Generator.CONSTANT),
}

_INT_KEYS = {"seed", "capacity", "generations", "death_threshold", "max_size", "max_candidates",
             "fuel_per_eval", "lit_range", "min_support", "max_memory", "policy_window"}
_RATIONAL_KEYS = {"alpha", "p_react", "epsilon_explore"}
_EXP_INT_KEYS = {"start", "step", "reward_correct", "reward_wrong"}
_EXP_CODE_KEYS = {"constant", "template", "initial_base"}
_EXP_PATH_KEYS = {"theta", "vary"}


def _int(key, v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(key, f"expected an integer, got {v!r}")
    return v


def _rational(key, v) -> Fraction:
    if isinstance(v, bool):
        raise ConfigError(key, f"expected a number, got {v!r}")
    try:
        # str() keeps 0.1 as 1/10 rather than its binary expansion
        return Fraction(str(v)) if isinstance(v, float) else Fraction(v)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(key, f"expected a rational, got {v!r}") from None


def _code(key, v):
    if not isinstance(v, str):
        raise ConfigError(key, "expected code text")
    try:
        return parse_text(v)
    except ParseError as exc:
        raise ConfigError(key, str(exc)) from None


def _path(key, v) -> tuple:
    if not isinstance(v, list) or not all(isinstance(i, int) and i >= 0 for i in v):
        raise ConfigError(key, "expected a list of non-negative integers")
    return tuple(v)


def config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in REQUIRED:
        if key not in d:
            raise ConfigError(key, "missing required key")
    run_kw, exp_kw = {}, {}
    for key, v in d.items():
        if key == "experiment":
            if v not in EXPERIMENTS:
                raise ConfigError(key, f"unknown experiment {v!r}; one of {sorted(EXPERIMENTS)}")
            exp_kw["family"], exp_kw["generator"] = EXPERIMENTS[v]
        elif key in _INT_KEYS:
            run_kw[key] = _int(key, v)
        elif key in _RATIONAL_KEYS:
            run_kw[key] = _rational(key, v)
        elif key == "step_back_mode":
            try:
                run_kw[key] = StepBackMode(v)
            except ValueError:
                raise ConfigError(key, "expected 'Delete' or 'Deactivate'") from None
        elif key in _EXP_INT_KEYS:
            exp_kw[key] = _int(key, v)
        elif key in _EXP_CODE_KEYS:
            exp_kw[key] = _code(key, v)
        elif key in _EXP_PATH_KEYS:
            exp_kw[key] = _path(key, v)
        else:
            raise ConfigError(key, "unknown key")
    try:
        run_kw["experiment"] = ExperimentSpec(**exp_kw)
    except ValueError as exc:
        bad = "reward_wrong" if "reward_wrong" in str(exc) else "theta"
        raise ConfigError(bad, str(exc)) from None
    return RunConfig(**run_kw)


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(d)


def config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of :func:`config_from_dict`, with rationals as strings."""
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "experiment":
            continue
        if isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, StepBackMode):
            v = v.value
        out[f.name] = v
    spec = cfg.experiment
    out["experiment"] = next(k for k, (fam, gen) in EXPERIMENTS.items()
                             if fam is spec.family and
                             (fam is not Family.SEQUENCE_PREDICTION or gen is spec.generator))
    for f in fields(spec):
        if f.name in ("family", "generator"):
            continue
        v = getattr(spec, f.name)
        if v is None:
            continue
        if f.name in _EXP_CODE_KEYS:
            v = to_text(v)
        elif f.name in _EXP_PATH_KEYS:
            v = list(v)
        out[f.name] = v
    return out
