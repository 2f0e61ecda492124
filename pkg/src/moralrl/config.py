"""Experiment configuration files.

INI syntax (``key = value`` under ``[section]`` headers). Every key is
optional; unknown sections or keys are rejected. Relative paths are resolved
against the directory of the config file. See ``data/camping.ini`` for the
reproduction defaults and the README for the full schema.
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .agents import AgentConfig
from .blame import EstimatorConfig
from .camping import CampConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = str(Path(__file__).with_name("data") / "camping.scm")
    outcome: str = "F"
    max_conjuncts: int = 1
    environment: CampConfig = CampConfig()
    agent: AgentConfig = AgentConfig()
    blame: EstimatorConfig = EstimatorConfig()
    restarts: int = 50
    episodes: int = 2000
    eval_episodes: int = 100
    eval_epsilon: float = 0.0
    seed: int = 0
    conditions: tuple = (1.0, 0.7)
    blame_window: int = 200
    trace_window: int = 100
    workers: int = 1
    check_invariants: bool = True
    out: str = "runs/latest"

    def __post_init__(self):
        if self.restarts < 1:
            raise ConfigError("restarts must be at least 1")
        if self.episodes < 1 or self.eval_episodes < 0:
            raise ConfigError("episodes must be positive and eval_episodes non-negative")
        if self.max_conjuncts < 1:
            raise ConfigError("max_conjuncts must be at least 1")
        if not 0 <= self.eval_epsilon <= 1:
            raise ConfigError("eval_epsilon must lie in [0, 1]")
        if self.blame_window < 1 or self.trace_window < 1:
            raise ConfigError("windows must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        for p in self.conditions:
            if not 0 <= p <= 1:
                raise ConfigError(f"condition p_A={p} outside [0, 1]")

    def restart_seed(self, restart: int) -> int:
        return self.seed + restart

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conditions"] = list(self.conditions)
        return d


# section -> {key: (target, type)}; target is a top-level field or "<group>.<field>"
_SCHEMA = {
    "model": {
        "path": ("model", str),
        "outcome": ("outcome", str),
        "max_conjuncts": ("max_conjuncts", int),
    },
    "environment": {f.name: (f"environment.{f.name}", int if f.name == "max_steps" else float)
                    for f in fields(CampConfig)},
    "agent": {f.name: (f"agent.{f.name}", float) for f in fields(AgentConfig)},
    "blame": {f.name: (f"blame.{f.name}", float) for f in fields(EstimatorConfig)},
    "experiment": {
        "restarts": ("restarts", int),
        "episodes": ("episodes", int),
        "eval_episodes": ("eval_episodes", int),
        "eval_epsilon": ("eval_epsilon", float),
        "seed": ("seed", int),
        "conditions": ("conditions", "floats"),
        "blame_window": ("blame_window", int),
        "trace_window": ("trace_window", int),
        "workers": ("workers", int),
        "check_invariants": ("check_invariants", bool),
    },
    "output": {"dir": ("out", str)},
}


def _convert(section, key, raw, kind):
    try:
        if kind == "floats":
            return tuple(float(x) for x in raw.replace(",", " ").split())
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot read {raw!r} as {getattr(kind, '__name__', kind)}") from None


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read an INI config; ``overrides`` replace top-level fields afterwards."""
    top: dict = {}
    groups: dict = {"environment": {}, "agent": {}, "blame": {}}
    if path is not None:
        path = Path(path)
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keys are case-sensitive (p_A)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as err:
            raise ConfigError(f"{path}: {err}") from None
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
                target, kind = _SCHEMA[section][key]
                value = _convert(section, key, raw, kind)
                if "." in target:
                    group, name = target.split(".")
                    groups[group][name] = value
                else:
                    top[target] = value
        for key in ("model", "out"):
            if key in top and not Path(top[key]).is_absolute():
                top[key] = str((path.parent / top[key]).resolve())
    try:
        cfg = ExperimentConfig(
            environment=CampConfig(**groups["environment"]),
            agent=AgentConfig(**groups["agent"]),
            blame=EstimatorConfig(**groups["blame"]),
            **top,
        )
        overrides = {k: v for k, v in overrides.items() if v is not None}
        cfg = replace(cfg, **overrides) if overrides else cfg
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from None
    if not Path(cfg.model).is_file():
        raise ConfigError(f"model file not found: {cfg.model}")
    return cfg


def default_config_path() -> Path:
    return Path(__file__).with_name("data") / "camping.ini"
