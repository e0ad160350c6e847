"""Scenario files: YAML documents describing one experiment and its roster.

A scenario fixes the platform, target trajectory, disturbance, duration and
the list of optimizers to compare. Parameters for roster members are named
(``expert`` or ``detune`` for the quadrotor, ``base`` or ``detune`` for the
car) or given explicitly as a list of log-gains or a mapping of gain names to
gains, optionally with a ``shift`` added to every log-gain.
"""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from mgaps import car_env as ce
from mgaps import expert
from mgaps import quad_env as qe
from mgaps import quad_policy as qp
from mgaps import reference as rf
from mgaps.cost import CarCostWeights, QuadCostWeights

PLATFORMS = ("quad", "car")
METHODS = ("fixed", "mgaps", "difftune", "oprf")
HINDSIGHT = ("best", "worst")


class ScenarioError(ValueError):
    pass


@dataclass
class Member:
    """One roster entry. For DiffTune ``eta`` is divided by the episode length."""

    name: str
    method: str
    theta0: Any = "detune"
    eta: float = 0.0
    horizon: int | str = 2000
    epsilon: float = 0.05
    clip: float | None = None
    start_after: float = 0.0  # seconds of fixed theta0 before learning begins

    def __post_init__(self):
        if self.method not in METHODS:
            raise ScenarioError(f"member {self.name!r}: unknown method {self.method!r}")
        if self.method != "fixed" and not self.eta >= 0:
            raise ScenarioError(f"member {self.name!r}: eta must be >= 0")
        if isinstance(self.horizon, str):
            if self.horizon not in HINDSIGHT:
                raise ScenarioError(f"member {self.name!r}: horizon must be an int or one of {HINDSIGHT}")
        elif int(self.horizon) < 1:
            raise ScenarioError(f"member {self.name!r}: horizon must be >= 1")
        if self.start_after < 0:
            raise ScenarioError(f"member {self.name!r}: start_after must be >= 0")


@dataclass
class Sweep:
    lengths: list[int]
    eta: float
    theta0: Any = "detune"
    clip: float | None = None


@dataclass
class Scenario:
    name: str
    platform: str
    trajectory: Any
    duration: float
    env: Any
    roster: list[Member]
    seed: int = 0
    policy: qp.PolicyConfig = field(default_factory=qp.PolicyConfig)
    weights: Any = None
    baseline: str | None = "Expert"
    sweep: Sweep | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.platform not in PLATFORMS:
            raise ScenarioError(f"unknown platform {self.platform!r}")
        if not self.duration > 0:
            raise ScenarioError("duration must be positive")
        if not self.roster:
            raise ScenarioError("roster must not be empty")
        names = [m.name for m in self.roster]
        if len(set(names)) != len(names):
            raise ScenarioError(f"duplicate roster names in {names}")
        if self.weights is None:
            self.weights = QuadCostWeights() if self.platform == "quad" else CarCostWeights()

    @property
    def dt(self) -> float:
        return self.env.dt

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def lap_steps(self) -> int:
        return rf.lap_steps(self.trajectory, self.dt)

    def member(self, name: str) -> Member:
        for m in self.roster:
            if m.name == name:
                return m
        raise KeyError(name)

    def with_seed(self, seed: int) -> "Scenario":
        s = copy.copy(self)
        s.seed = int(seed)
        s.raw = {**self.raw, "seed": int(seed)}
        return s

    def with_duration(self, duration: float) -> "Scenario":
        s = copy.copy(self)
        s.duration = float(duration)
        s.raw = {**self.raw, "duration": float(duration)}
        return s


# --- parameter resolution --------------------------------------------------------


def resolve_theta(spec, platform: str) -> np.ndarray:
    """Turn a roster ``theta0`` entry into a log-gain vector."""
    d = qp.N_PARAMS if platform == "quad" else ce.N_PARAMS
    names = qp.GAIN_NAMES if platform == "quad" else ce.GAIN_NAMES
    if isinstance(spec, str):
        table = {
            "quad": {"expert": expert.quad_expert, "detune": lambda: qp.detune(expert.quad_expert())},
            "car": {"base": expert.car_base, "detune": lambda: qp.detune(expert.car_base())},
        }[platform]
        if spec not in table:
            raise ScenarioError(f"unknown named parameter {spec!r} for {platform}; known: {sorted(table)}")
        theta = table[spec]()
    elif isinstance(spec, dict):
        spec = dict(spec)
        shift = float(spec.pop("shift", 0.0))
        if "base" in spec:
            theta = resolve_theta(spec.pop("base"), platform)
        elif "gains" in spec:
            gains = spec.pop("gains")
            missing = set(names) - set(gains)
            if missing:
                raise ScenarioError(f"gains missing {sorted(missing)}")
            theta = np.log([float(gains[n]) for n in names])
        else:
            raise ScenarioError(f"parameter mapping needs 'base' or 'gains': {spec}")
        if spec:
            raise ScenarioError(f"unexpected parameter keys {sorted(spec)}")
        theta = theta + shift
    else:
        theta = np.asarray(spec, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (d,) or not np.all(np.isfinite(theta)):
        raise ScenarioError(f"{platform} parameter must be {d} finite log-gains, got {theta}")
    return theta


# --- loading ------------------------------------------------------------------------


def _trajectory(cfg: dict):
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    if kind not in rf.KINDS:
        raise ScenarioError(f"unknown trajectory kind {kind!r}")
    for key in ("center", "direction"):
        if key in cfg:
            cfg[key] = tuple(float(v) for v in cfg[key])
    return rf.KINDS[kind](**cfg)


def _env(platform: str, cfg: dict):
    cfg = dict(cfg or {})
    if platform == "car":
        return ce.CarModelConfig(**cfg)
    wind = cfg.pop("wind", None) or {}
    if "force" in wind:
        wind = {**wind, "force": tuple(float(v) for v in wind["force"])}
    return qe.EnvConfig(wind=qe.WindModel(**wind), **cfg)


def from_dict(doc: dict) -> Scenario:
    doc = copy.deepcopy(doc)
    try:
        platform = doc["platform"]
        traj = _trajectory(doc["trajectory"])
        env = _env(platform, doc.get("env"))
        roster = []
        for entry in doc["roster"]:
            entry = dict(entry)
            for key in ("eta", "epsilon", "start_after"):
                if key in entry:
                    entry[key] = float(entry[key])
            if entry.get("clip") is not None:
                entry["clip"] = float(entry["clip"])
            if isinstance(entry.get("horizon"), (int, float)):
                entry["horizon"] = int(entry["horizon"])
            roster.append(Member(**entry))
        sweep = None
        if doc.get("sweep"):
            sw = dict(doc["sweep"])
            sweep = Sweep(
                lengths=[int(h) for h in sw["lengths"]],
                eta=float(sw["eta"]),
                theta0=sw.get("theta0", "detune"),
                clip=None if sw.get("clip") is None else float(sw["clip"]),
            )
        policy = qp.PolicyConfig(**{k: float(v) for k, v in (doc.get("policy") or {}).items()})
        wcls = QuadCostWeights if platform == "quad" else CarCostWeights
        weights = wcls(**{k: float(v) for k, v in (doc.get("cost") or {}).items()})
        return Scenario(
            name=str(doc["name"]),
            platform=platform,
            trajectory=traj,
            duration=float(doc.get("duration", 60.0)),
            env=env,
            roster=roster,
            seed=int(doc.get("seed", 0)),
            policy=policy,
            weights=weights,
            baseline=doc.get("baseline", "Expert"),
            sweep=sweep,
            raw=doc,
        )
    except KeyError as exc:
        raise ScenarioError(f"scenario is missing required key {exc}") from None
    except TypeError as exc:
        raise ScenarioError(f"bad scenario field: {exc}") from None


def load(path) -> Scenario:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario must be a mapping")
    doc.setdefault("name", path.stem)
    return from_dict(doc)


def laps(s: Scenario) -> float:
    return s.n_steps / s.lap_steps if s.lap_steps else math.nan


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def echo(s: Scenario) -> dict:
    """The scenario with every default filled in, as plain data."""
    kind = next(k for k, cls in rf.KINDS.items() if isinstance(s.trajectory, cls))
    return _plain({
        "name": s.name,
        "platform": s.platform,
        "duration": s.duration,
        "seed": s.seed,
        "trajectory": {"kind": kind, **asdict(s.trajectory)},
        "env": asdict(s.env),
        "policy": asdict(s.policy) if s.platform == "quad" else None,
        "cost": asdict(s.weights),
        "baseline": s.baseline,
        "roster": [asdict(m) for m in s.roster],
        "sweep": asdict(s.sweep) if s.sweep else None,
    })
