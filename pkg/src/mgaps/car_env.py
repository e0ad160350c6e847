"""Planar Ackermann car: single-track lateral model, lag-filtered inputs.

State layout (n = 7)::

    [0:2] p      position, inertial        m
    [2]   r      heading                   rad, wrapped to (-pi, pi]
    [3]   v_x    forward velocity, body    m/s
    [4]   v_y    lateral velocity, body    m/s
    [5]   w      yaw rate                  rad/s
    [6]   psi    steering angle            rad

Action (m = 2): ``[throttle, steer]``; throttle is a speed command in m/s.
Parameters (d = 5): log of ``K1, K2, K3, K4, Kp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mgaps import lie
from mgaps.errors import ReferenceSingular, SimulationDiverged, SingularModel

N_STATE = 7
N_ACTION = 2
N_PARAMS = 5

POS = slice(0, 2)
HEAD = 2
VX = 3
VY = 4
OMEGA = 5
STEER = 6

STATE_NAMES = ["p_x", "p_y", "r", "v_x", "v_y", "w", "psi"]
STATE_UNITS = ["m", "m", "rad", "m/s", "m/s", "rad/s", "rad"]
ACTION_NAMES = ["throttle", "steer"]
ACTION_UNITS = ["m/s", "rad"]
GAIN_NAMES = ["k1", "k2", "k3", "k4", "kp"]


@dataclass(frozen=True)
class CarModelConfig:
    dt: float = 0.02
    c_th: float = 2.0
    c_st: float = 10.0
    c_f: float = 5.0
    c_r: float = 5.0
    l_f: float = 0.24
    l_r: float = 0.24
    i_z: float = 0.04
    v_min: float = 0.1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        for name in ("c_th", "c_st"):
            c = getattr(self, name)
            if not 0 < c < 1.0 / self.dt:
                raise ValueError(f"{name}={c} must lie in (0, 1/dt)")
        if min(self.c_f, self.c_r, self.l_f, self.l_r, self.i_z, self.v_min) <= 0:
            raise ValueError("geometric parameters must be positive")

    def lateral(self, vx: float):
        """Return ``A(vx)``, ``dA/dvx`` and ``B`` of the lateral model."""
        a1 = self.c_f + self.c_r
        a2 = self.c_f * self.l_f - self.c_r * self.l_r
        a3 = a2 / self.i_z
        a4 = (self.c_f * self.l_f**2 + self.c_r * self.l_r**2) / self.i_z
        A = np.array([[-a1 / vx, -vx - a2 / vx], [-a3 / vx, -a4 / vx]])
        inv2 = 1.0 / (vx * vx)
        dA = np.array([[a1 * inv2, -1.0 + a2 * inv2], [a3 * inv2, a4 * inv2]])
        B = np.array([self.c_f, self.c_f * self.l_f / self.i_z])
        return A, dA, B


def _check_speed(vx: float, cfg: CarModelConfig) -> None:
    if not abs(vx) >= cfg.v_min:
        raise SingularModel(f"forward speed {vx:.4g} below v_min={cfg.v_min}")


def car_step(x, u, cfg: CarModelConfig = CarModelConfig()) -> np.ndarray:
    return car_step_jacobians(x, u, cfg, jacobians=False)


def car_step_jacobians(x, u, cfg: CarModelConfig = CarModelConfig(), jacobians: bool = True):
    """Next state, plus ``(dg/dx, dg/du)`` when ``jacobians`` is true."""
    x = np.asarray(x, dtype=float)
    dt = cfg.dt
    vx, vy, w, psi = x[VX], x[VY], x[OMEGA], x[STEER]
    _check_speed(vx, cfg)
    A, dA, B = cfg.lateral(vx)
    Rm = lie.exp_so2(x[HEAD])
    v = np.array([vx, vy])
    s = np.array([vy, w])

    nxt = np.empty(N_STATE)
    nxt[POS] = x[POS] + dt * (Rm @ v)
    nxt[HEAD] = lie.boxplus_so2(x[HEAD], w, dt)
    s_next = s + dt * (A @ s) + dt * B * psi
    nxt[VX] = vx + dt * cfg.c_th * (u[0] - vx)
    nxt[VY], nxt[OMEGA] = s_next
    nxt[STEER] = psi + dt * cfg.c_st * (u[1] - psi)
    if not np.all(np.isfinite(nxt)):
        raise SimulationDiverged("non-finite car state")
    if not jacobians:
        return nxt

    G = np.zeros((N_STATE, N_STATE))
    G[POS, POS] = np.eye(2)
    dR = np.array([[-Rm[1, 0], -Rm[0, 0]], [Rm[0, 0], -Rm[1, 0]]])
    G[POS, HEAD] = dt * (dR @ v)
    G[POS, VX] = dt * Rm[:, 0]
    G[POS, VY] = dt * Rm[:, 1]
    G[HEAD, HEAD] = 1.0
    G[HEAD, OMEGA] = dt
    lat = [VY, OMEGA]
    G[np.ix_(lat, lat)] = np.eye(2) + dt * A
    G[lat, VX] = dt * (dA @ s)
    G[lat, STEER] = dt * B
    G[VX, VX] = 1.0 - dt * cfg.c_th
    G[STEER, STEER] = 1.0 - dt * cfg.c_st
    Gu = np.zeros((N_STATE, N_ACTION))
    Gu[VX, 0] = dt * cfg.c_th
    Gu[STEER, 1] = dt * cfg.c_st
    return nxt, G, Gu


def heading_reference(vdes, ades):
    """Desired heading, body-frame speed and yaw rate from the path derivatives."""
    vdes = np.asarray(vdes, dtype=float)
    ades = np.asarray(ades, dtype=float)
    speed2 = vdes @ vdes
    if not speed2 > 1e-18:
        raise ReferenceSingular("reference velocity vanishes")
    r_d = math.atan2(vdes[1], vdes[0])
    w_d = (vdes[0] * ades[1] - vdes[1] * ades[0]) / speed2
    return r_d, math.sqrt(speed2), w_d


def car_act(x, ref, theta) -> np.ndarray:
    return car_act_with_jacobians(x, ref, theta, jacobians=False)


def car_act_with_jacobians(x, ref, theta, jacobians: bool = True):
    x = np.asarray(x, dtype=float)
    k = np.exp(np.asarray(theta, dtype=float))
    r_d, speed, w_d = heading_reference(ref.vdes, ref.ades)
    e = x[POS] - np.asarray(ref.pdes, dtype=float)
    r, vx, vy, w = x[HEAD], x[VX], x[VY], x[OMEGA]
    r_e = lie.wrap_angle(r - r_d)
    cd, sd = math.cos(r_d), math.sin(r_d)
    c, s = math.cos(r), math.sin(r)
    lat_err = -sd * e[0] + cd * e[1]
    fwd_err = c * e[0] + s * e[1]
    terms = np.array([lat_err, vy + r_e * vx, r_e, w - w_d])
    steer = -(k[:4] @ terms)
    throttle = -k[4] * fwd_err + speed
    u = np.array([throttle, steer])
    if not jacobians:
        return u

    du_dx = np.zeros((N_ACTION, N_STATE))
    du_dx[0, POS] = -k[4] * np.array([c, s])
    du_dx[0, HEAD] = -k[4] * (-s * e[0] + c * e[1])
    du_dx[1, POS] = -k[0] * np.array([-sd, cd])
    du_dx[1, HEAD] = -k[1] * vx - k[2]
    du_dx[1, VX] = -k[1] * r_e
    du_dx[1, VY] = -k[1]
    du_dx[1, OMEGA] = -k[3]
    du_dth = np.zeros((N_ACTION, N_PARAMS))
    du_dth[1, :4] = -k[:4] * terms
    du_dth[0, 4] = -k[4] * fwd_err
    return u, du_dx, du_dth


def initial_state(ref) -> np.ndarray:
    """On the path, aligned with it, at the reference speed, wheels straight."""
    r_d, speed, _ = heading_reference(ref.vdes, ref.ades)
    x = np.zeros(N_STATE)
    x[POS] = ref.pdes
    x[HEAD] = r_d
    x[VX] = speed
    return x
