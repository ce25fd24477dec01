"""Experiment configuration: JSON file + CLI overrides, strictly validated."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

COMMANDS = ("decay", "verify", "train", "benchmark")

# named random sub-streams derived from one root seed
STREAMS = {"instance": 11, "trajectory": 23, "evaluation": 37}


def substream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), STREAMS[name]])


def substream_seed(seed: int, name: str) -> int:
    return int(np.random.SeedSequence([int(seed), STREAMS[name]]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    command: str
    out: str = "out"
    seeds: list = field(default_factory=lambda: [0])
    instance_seed: int = 0

    # factored-MDP instance source: a model file or the random generator
    model: str | None = None
    topology: str = "line"
    n: int = 6
    states: int = 2
    actions: int = 3
    coupling: float | None = None

    # decay
    agent: int = 0
    kappa_max: int | None = None
    trials: int = 100

    # verify
    gamma: float = 0.9
    slack: float = 1e-9

    # train
    env: str = "mdp"
    kappa: int = 1
    horizon: int = 200_000
    alpha0: float = 1.0
    eta0: float = 10.0
    alpha_exp: float = 0.75
    eta_exp: float = 0.99
    rescale: bool = False
    frozen_policy: bool = False
    cadence: int = 100
    oracle: bool = False
    oracle_every: int = 1000
    window: int = 10_000

    # wireless environment
    grid: list = field(default_factory=lambda: [3, 3])
    deadline: int = 2
    arrival: list | None = None
    success: list | None = None

    # benchmark
    p_values: list = field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8])
    eval_steps: int = 10_000
    episodes: int = 5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.env not in ("mdp", "wireless"):
            raise ConfigError("env must be 'mdp' or 'wireless'")
        if not self.seeds or any(not isinstance(s, int) or s < 0 for s in self.seeds):
            raise ConfigError("seeds must be a nonempty list of nonnegative integers")
        if len(self.grid) != 2 or min(self.grid) < 1:
            raise ConfigError(f"grid must be [rows, cols] with positive entries, got {self.grid}")
        for name in ("n", "states", "actions", "trials", "horizon", "cadence", "oracle_every",
                     "window", "eval_steps", "episodes", "deadline"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.kappa < 0 or (self.kappa_max is not None and self.kappa_max < 0):
            raise ConfigError("kappa values must be nonnegative")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must lie in [0, 1)")
        if self.coupling is not None and not 0.0 <= self.coupling <= 1.0:
            raise ConfigError("coupling must lie in [0, 1]")
        if any(not 0.0 <= p <= 1.0 for p in self.p_values):
            raise ConfigError("p_values must lie in [0, 1]")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path, command: str, overrides: dict | None = None) -> "ExperimentConfig":
        doc = {}
        if path is not None:
            try:
                doc = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(doc, dict):
                raise ConfigError("config file must hold a JSON object")
            if doc.get("command", command) != command:
                raise ConfigError(f"config is for {doc['command']!r}, not {command!r}")
        doc["command"] = command
        doc.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def header(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
