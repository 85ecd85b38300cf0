"""Experiment configuration: TOML files with strictly validated sections.

A config names the model to run, the interaction function, and the numeric
parameters of the chosen experiment.  Unknown sections or keys are rejected
outright so that a config file is a faithful record of what was run.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .interaction import InteractionFunction

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "MODELS"]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


MODELS = ("classify", "discrete", "renormalized", "forest", "diffusion",
          "rayknight", "convergence", "compare")

_NUMBER = (int, float)

# section -> key -> (allowed types, required)
_SCHEMAS: Dict[str, Dict[str, tuple]] = {
    "experiment": {
        "model": ((str,), True),
        "master_seed": ((int,), True),
        "replicates": ((int,), False),
        "output_dir": ((str,), False),
    },
    "interaction": {
        "kind": ((str,), True),
        "theta": (_NUMBER, False),
        "gamma": (_NUMBER, False),
        "beta": (_NUMBER, False),
        "csv": ((str,), False),
    },
    "classify": {
        "tail_limit": (_NUMBER, False),
        "tolerance": (_NUMBER, False),
    },
    "discrete": {
        "lam": (_NUMBER, True),
        "mu": (_NUMBER, True),
        "m": ((int,), True),
        "t_max": (_NUMBER, True),
        "max_events": ((int,), False),
    },
    "renormalized": {
        "x": (_NUMBER, True),
        "N": ((int,), True),
        "t_max": (_NUMBER, True),
        "y": (_NUMBER, False),
        "max_events": ((int,), False),
    },
    "forest": {
        "lam": (_NUMBER, True),
        "mu": (_NUMBER, True),
        "m": ((int,), True),
        "t_max": (_NUMBER, True),
        "p": (_NUMBER, False),
        "max_events": ((int,), False),
    },
    "diffusion": {
        "x": (_NUMBER, True),
        "t_max": (_NUMBER, True),
        "dt": (_NUMBER, True),
        "variant": ((str,), False),      # feller | coupled | environment
        "y": (_NUMBER, False),
        "env_constant": (_NUMBER, False),
        "a": (_NUMBER, False),
        "b": (_NUMBER, False),
        "t_cap": (_NUMBER, False),
    },
    "rayknight": {
        "x_targets": ((list,), True),
        "ds": (_NUMBER, False),
        "dh": (_NUMBER, False),
        "K": (_NUMBER, False),
        "s_cap_steps": ((int,), False),
        "query_levels": ((list,), False),
        "env_constant": (_NUMBER, False),
    },
    "convergence": {
        "N_list": ((list,), True),
        "x": (_NUMBER, True),
        "t": (_NUMBER, True),
        "dt": (_NUMBER, True),
        "ks_threshold": (_NUMBER, False),
    },
    "compare": {
        "pairing": ((str,), True),
        "ks_threshold": (_NUMBER, True),
        "t": (_NUMBER, False),
        "n_total": ((int,), False),
        "level": (_NUMBER, False),
        "dt": (_NUMBER, False),
    },
}

_PAIRINGS = ("coupling", "forest-vs-gillespie", "increment",
             "rayknight-vs-diffusion", "coupled-diffusion")

# sections each model is allowed to use besides experiment/interaction
_MODEL_SECTIONS = {
    "classify": {"classify"},
    "discrete": {"discrete"},
    "renormalized": {"renormalized"},
    "forest": {"forest", "discrete"},
    "diffusion": {"diffusion"},
    "rayknight": {"rayknight"},
    "convergence": {"convergence"},
    "compare": {"compare", "discrete", "renormalized", "diffusion", "rayknight"},
}


@dataclass
class ExperimentConfig:
    model: str
    master_seed: int
    replicates: int
    output_dir: Optional[str]
    sections: Dict[str, Dict[str, Any]]
    source_path: str
    raw: Dict[str, Any] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.sections.get(name, {}))

    def interaction(self) -> InteractionFunction:
        sec = self.section("interaction")
        kind = sec["kind"]
        beta = sec.get("beta")
        if kind == "zero":
            return InteractionFunction.zero()
        if kind == "logistic":
            _need(sec, "theta", "gamma", kind=kind)
            return InteractionFunction.logistic(sec["theta"], sec["gamma"], beta)
        if kind == "linear":
            _need(sec, "theta", kind=kind)
            return InteractionFunction.linear(sec["theta"], beta)
        if kind == "custom":
            _need(sec, "csv", kind=kind)
            path = Path(self.source_path).parent / sec["csv"]
            try:
                table = _load_table(path)
            except OSError as exc:
                raise ConfigError(f"cannot read custom interaction CSV: {exc}")
            return InteractionFunction.custom(table[:, 0], table[:, 1],
                                              beta if beta is not None else 0.0)
        raise ConfigError(f"unknown interaction kind {kind!r}")


def _need(sec: Dict[str, Any], *keys: str, kind: str) -> None:
    for key in keys:
        if key not in sec:
            raise ConfigError(f"interaction kind {kind!r} requires key {key!r}")


def _load_table(path) -> np.ndarray:
    with open(path) as fh:
        first = fh.readline()
    skip = 0 if first and first.lstrip()[:1].lstrip("-").replace(".", "").isdigit() else 1
    table = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if table.shape[1] != 2:
        raise ConfigError("custom interaction CSV must have two columns: z, f(z)")
    return table


def load_config(path) -> ExperimentConfig:
    """Parse and strictly validate a TOML experiment config."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}")

    for section in raw:
        if section not in _SCHEMAS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(raw[section], dict):
            raise ConfigError(f"[{section}] must be a table")
        schema = _SCHEMAS[section]
        for key, value in raw[section].items():
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            types, _ = schema[key]
            if not isinstance(value, types) or isinstance(value, bool):
                raise ConfigError(
                    f"[{section}].{key} has wrong type {type(value).__name__}")
        for key, (types, required) in schema.items():
            if required and key not in raw[section]:
                raise ConfigError(f"section [{section}] is missing key {key!r}")

    if "experiment" not in raw:
        raise ConfigError("config needs an [experiment] section")
    exp = raw["experiment"]
    model = exp["model"]
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}; choose one of {MODELS}")

    allowed = {"experiment", "interaction"} | _MODEL_SECTIONS[model]
    extra = set(raw) - allowed
    if extra:
        raise ConfigError(
            f"sections {sorted(extra)} are not used by model {model!r}")
    if "interaction" not in raw:
        raise ConfigError("config needs an [interaction] section")

    replicates = exp.get("replicates", 1)
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")

    cfg = ExperimentConfig(
        model=model,
        master_seed=exp["master_seed"],
        replicates=int(replicates),
        output_dir=exp.get("output_dir"),
        sections={k: dict(v) for k, v in raw.items()},
        source_path=str(path),
        raw=raw,
    )
    _validate_numbers(cfg)
    return cfg


def _validate_numbers(cfg: ExperimentConfig) -> None:
    """Cross-field sanity checks mirroring the target modules' preconditions."""
    def positive(sec, *keys):
        s = cfg.sections.get(sec, {})
        for k in keys:
            if k in s and not s[k] > 0:
                raise ConfigError(f"[{sec}].{k} must be > 0")

    def nonneg(sec, *keys):
        s = cfg.sections.get(sec, {})
        for k in keys:
            if k in s and s[k] < 0:
                raise ConfigError(f"[{sec}].{k} must be >= 0")

    positive("discrete", "t_max")
    nonneg("discrete", "lam", "mu", "m")
    positive("renormalized", "N", "t_max")
    nonneg("renormalized", "x", "y")
    positive("forest", "t_max", "p")
    nonneg("forest", "lam", "mu", "m")
    positive("diffusion", "dt", "t_max", "t_cap")
    nonneg("diffusion", "x", "y", "a", "env_constant")
    positive("rayknight", "ds", "dh", "K", "s_cap_steps")
    positive("convergence", "t", "dt")
    positive("compare", "ks_threshold", "t", "dt", "level")
    sec = cfg.sections.get("compare", {})
    if sec and sec["pairing"] not in _PAIRINGS:
        raise ConfigError(f"unknown pairing {sec['pairing']!r}; "
                          f"choose one of {_PAIRINGS}")
    ray = cfg.sections.get("rayknight", {})
    if "x_targets" in ray:
        xs = ray["x_targets"]
        if (not xs or any(not isinstance(v, _NUMBER) or v <= 0 for v in xs)
                or any(b <= a for a, b in zip(xs, xs[1:]))):
            raise ConfigError("[rayknight].x_targets must be strictly increasing "
                              "positive numbers")
    conv = cfg.sections.get("convergence", {})
    if "N_list" in conv:
        ns = conv["N_list"]
        if (not ns or any(not isinstance(v, int) or v < 1 for v in ns)
                or any(b <= a for a, b in zip(ns, ns[1:]))):
            raise ConfigError("[convergence].N_list must be strictly increasing "
                              "integers >= 1")
