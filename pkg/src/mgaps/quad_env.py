"""Discrete-time quadrotor with integral-error state.

State vector layout (n = 15)::

    [0:3]   ierr   integral of position error     m*s
    [3:6]   p      position, inertial             m
    [6:9]   v      velocity, inertial             m/s
    [9:12]  r      attitude rotation vector       rad (body -> inertial)
    [12:15] w      angular velocity, body         rad/s

Action vector (m = 4): ``[f, tau_x, tau_y, tau_z]`` with ``f`` the
mass-normalized thrust (m/s^2) and ``tau`` the body angular acceleration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mgaps import lie
from mgaps.errors import DomainError, SimulationDiverged
from mgaps.reference import GRAVITY

N_STATE = 15
N_ACTION = 4

IERR = slice(0, 3)
POS = slice(3, 6)
VEL = slice(6, 9)
ROT = slice(9, 12)
OMEGA = slice(12, 15)

STATE_NAMES = [
    *(f"ierr_{a}" for a in "xyz"),
    *(f"p_{a}" for a in "xyz"),
    *(f"v_{a}" for a in "xyz"),
    *(f"r_{a}" for a in "xyz"),
    *(f"w_{a}" for a in "xyz"),
]
STATE_UNITS = ["m*s"] * 3 + ["m"] * 3 + ["m/s"] * 3 + ["rad"] * 3 + ["rad/s"] * 3
ACTION_NAMES = ["f", "tau_x", "tau_y", "tau_z"]
ACTION_UNITS = ["m/s^2"] + ["rad/s^2"] * 3

_EZ = np.array([0.0, 0.0, 1.0])


@dataclass
class QuadState:
    ierr: np.ndarray
    p: np.ndarray
    v: np.ndarray
    r: np.ndarray
    w: np.ndarray

    @classmethod
    def from_vector(cls, x) -> "QuadState":
        x = np.asarray(x, dtype=float)
        return cls(x[IERR].copy(), x[POS].copy(), x[VEL].copy(), x[ROT].copy(), x[OMEGA].copy())

    def vector(self) -> np.ndarray:
        return np.concatenate([self.ierr, self.p, self.v, self.r, self.w])

    @classmethod
    def at_rest(cls, p) -> "QuadState":
        z = np.zeros(3)
        return cls(z.copy(), np.asarray(p, dtype=float).copy(), z.copy(), z.copy(), z.copy())


@dataclass(frozen=True)
class WindModel:
    """Square-wave wind: off for ``period_off``, on for ``period_on``, repeating."""

    force: tuple[float, float, float] = (0.0, 0.0, 0.0)
    period_on: float = 12.0
    period_off: float = 12.0
    enabled: bool = False

    def __post_init__(self):
        if self.enabled and not (self.period_on > 0 and self.period_off > 0):
            raise ValueError("wind periods must be positive")

    def active(self, t: float) -> bool:
        if not self.enabled:
            return False
        phase = math.fmod(t, self.period_on + self.period_off)
        # tolerance absorbs k*dt roundoff at the toggle instants
        return phase >= self.period_off - 1e-9


@dataclass(frozen=True)
class EnvConfig:
    dt: float = 1.0 / 500.0
    gravity: float = GRAVITY
    mass_scale: float = 1.0
    wind: WindModel = field(default_factory=WindModel)

    def __post_init__(self):
        if not (self.dt > 0 and self.gravity > 0 and self.mass_scale > 0):
            raise ValueError(f"invalid EnvConfig {self}")

    def nominal(self) -> "EnvConfig":
        return EnvConfig(dt=self.dt, gravity=self.gravity)


def _advance(x, f, tau, dt, gravity, accel, pdes):
    r = x[ROT]
    try:
        R = lie.exp_so3(r)
        r_next = lie.boxplus(r, x[OMEGA], dt)
    except DomainError as exc:
        raise SimulationDiverged(f"attitude left single-cover region: {exc}") from exc
    out = np.empty(N_STATE)
    out[IERR] = x[IERR] + dt * (x[POS] - pdes)
    out[POS] = x[POS] + dt * x[VEL]
    out[VEL] = x[VEL] + dt * (f * R[:, 2] - gravity * _EZ + accel)
    out[ROT] = r_next
    out[OMEGA] = x[OMEGA] + dt * np.asarray(tau)
    if not np.all(np.isfinite(out)):
        raise SimulationDiverged("non-finite state")
    return out


def step_true(x, u, t: float, cfg: EnvConfig, pdes) -> np.ndarray:
    """Advance the true plant one step (payload scaling, wind, thrust clamp)."""
    x = np.asarray(x, dtype=float)
    f = max(float(u[0]), 0.0) / cfg.mass_scale
    accel = np.asarray(cfg.wind.force, dtype=float) if cfg.wind.active(t) else np.zeros(3)
    return _advance(x, f, u[1:4], cfg.dt, cfg.gravity, accel, np.asarray(pdes, dtype=float))


def step_model_jacobians(x, u, t: float, cfg: EnvConfig, pdes):
    """Nominal-model next state with ``dg/dx`` (n x n) and ``dg/du`` (n x m).

    The nominal model ignores ``cfg.mass_scale`` and wind and does not clamp
    thrust.
    """
    x = np.asarray(x, dtype=float)
    dt = cfg.dt
    f = float(u[0])
    r, w = x[ROT], x[OMEGA]
    try:
        R = lie.exp_so3(r)
        r_next, dr_dr, dr_dw = lie.d_boxplus(r, w, dt)
    except DomainError as exc:
        raise SimulationDiverged(f"attitude left single-cover region: {exc}") from exc
    nxt = np.empty(N_STATE)
    nxt[IERR] = x[IERR] + dt * (x[POS] - np.asarray(pdes, dtype=float))
    nxt[POS] = x[POS] + dt * x[VEL]
    nxt[VEL] = x[VEL] + dt * (f * R[:, 2] - cfg.gravity * _EZ)
    nxt[ROT] = r_next if w.any() else r
    nxt[OMEGA] = w + dt * np.asarray(u[1:4], dtype=float)

    I3 = np.eye(3)
    A = np.zeros((N_STATE, N_STATE))
    A[IERR, IERR] = I3
    A[IERR, POS] = dt * I3
    A[POS, POS] = I3
    A[POS, VEL] = dt * I3
    A[VEL, VEL] = I3
    A[VEL, ROT] = dt * f * (-R @ lie.hat(_EZ) @ lie.right_jacobian(r))
    A[ROT, ROT] = dr_dr
    A[ROT, OMEGA] = dr_dw
    A[OMEGA, OMEGA] = I3

    B = np.zeros((N_STATE, N_ACTION))
    B[VEL, 0] = dt * R[:, 2]
    B[OMEGA, 1:4] = dt * I3
    return nxt, A, B
