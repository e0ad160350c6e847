"""Reference parameters: the frozen simulation expert and the car baseline.

The quadrotor expert is produced by :func:`tune_quad_expert` (M-GAPS on the
disturbance-free figure-8 from a hand-tuned start, for a fixed lap budget)
and stored in ``data/expert.json`` so experiments never re-tune it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from mgaps import car_env as ce
from mgaps import quad_env as qe
from mgaps import quad_policy as qp
from mgaps import reference as rf
from mgaps.optimizers import Mgaps, MgapsConfig, StepDerivs

HAND_GAINS = dict(
    ki_xy=2.0, ki_z=2.0, kp_xy=16.0, kp_z=16.0, kv_xy=8.0, kv_z=8.0,
    kr_xy=400.0, kr_z=100.0, kw_xy=40.0, kw_z=20.0,
)

# hand-tuned stand-in for the car (no published values)
CAR_GAINS = dict(k1=0.5, k2=0.5, k3=2.0, k4=0.2, kp=1.0)

TUNE_LAPS = 100
TUNE_ETA = 1e4
TUNE_RAMP = 2.0


def car_base() -> np.ndarray:
    return np.log([CAR_GAINS[n] for n in ce.GAIN_NAMES])


@dataclass
class TuneResult:
    theta: np.ndarray
    lap_costs: np.ndarray
    laps: int
    eta: float

    def to_json(self) -> dict:
        gains = np.exp(self.theta)
        return {
            "theta": [float(v) for v in self.theta],
            "gains": {n: float(g) for n, g in zip(qp.GAIN_NAMES, gains)},
            "protocol": {
                "method": "mgaps",
                "trajectory": "figure8",
                "ramp": TUNE_RAMP,
                "laps": self.laps,
                "eta": self.eta,
                "start": HAND_GAINS,
                "freeze": "mean deployed theta over the final lap",
            },
            "final_lap_cost": float(self.lap_costs[-1]) if len(self.lap_costs) else None,
        }


def tune_quad_expert(laps: int = TUNE_LAPS, eta: float = TUNE_ETA, backend: str | None = None,
                     progress=None) -> TuneResult:
    """Run M-GAPS on the nominal figure-8 and freeze the final-lap mean parameter."""
    from mgaps.plant import QuadPlant

    if laps < 1:
        raise ValueError("laps must be >= 1")
    env = qe.EnvConfig()
    kind = rf.Figure8Diagonal(ramp=TUNE_RAMP)
    L = rf.lap_steps(kind, env.dt)
    plant = QuadPlant(env, rf.sample_grid(kind, laps * L, env.dt), backend=backend)
    opt = Mgaps(qp.from_gains(**HAND_GAINS), plant.n, MgapsConfig(eta=eta))
    derivs = StepDerivs.zeros(plant.n, plant.m, plant.d)
    x = plant.initial_state()
    lap_theta = np.zeros(plant.d)
    lap_costs = np.zeros(laps)
    for k in range(laps * L):
        theta = opt.current()
        lap_theta += theta
        x, _, c = plant.step(k, x, theta, derivs)
        opt.observe(c, derivs)
        lap_costs[k // L] += c
        if (k + 1) % L == 0 and (k + 1) // L < laps:
            lap_theta[:] = 0.0
            if progress is not None:
                progress((k + 1) // L, lap_costs[k // L])
    return TuneResult(lap_theta / L, lap_costs, laps, eta)


def _expert_path():
    return resources.files("mgaps") / "data" / "expert.json"


def load_expert_file(path=None) -> dict:
    src = _expert_path() if path is None else Path(path)
    return json.loads(src.read_text())


_cache: dict[str, np.ndarray] = {}


def quad_expert() -> np.ndarray:
    """The frozen simulation expert as log-gains."""
    if "quad" not in _cache:
        _cache["quad"] = np.asarray(load_expert_file()["theta"], dtype=float)
    return _cache["quad"].copy()
