"""Geometric cascade controller with log-parameterized diagonal gains.

Parameter layout (d = 10), each entry the natural log of a gain::

    ki_xy, ki_z, kp_xy, kp_z, kv_xy, kv_z, kr_xy, kr_z, kw_xy, kw_z

The horizontal axes share one gain per loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mgaps import lie
from mgaps.errors import ControllerSingular, DomainError
from mgaps.quad_env import IERR, N_ACTION, N_STATE, OMEGA, POS, ROT, VEL
from mgaps.reference import GRAVITY

N_PARAMS = 10
GAIN_NAMES = [
    "ki_xy", "ki_z", "kp_xy", "kp_z", "kv_xy", "kv_z", "kr_xy", "kr_z", "kw_xy", "kw_z",
]

_EZ = np.array([0.0, 0.0, 1.0])
_XY = np.array([1.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class PolicyConfig:
    b_xy: float = 200.0
    b_z: float = 50.0
    gravity: float = GRAVITY

    def __post_init__(self):
        if not (self.b_xy > 0 and self.b_z > 0):
            raise ValueError("softclamp bounds must be positive")

    @property
    def bounds(self) -> np.ndarray:
        return np.array([self.b_xy, self.b_xy, self.b_z])


def softclamp(x, bound):
    """``bound * tanh(x / bound)`` elementwise, strictly inside ``(-bound, bound)``."""
    bound = np.asarray(bound, dtype=float)
    return _strict(bound * np.tanh(np.asarray(x, dtype=float) / bound), bound)


def _strict(y, bound):
    # tanh rounds to exactly 1 for large arguments; keep the bound open
    lim = np.nextafter(bound, 0.0)
    return np.clip(y, -lim, lim)


def gains(theta) -> dict[str, float]:
    return dict(zip(GAIN_NAMES, np.exp(np.asarray(theta, dtype=float)).tolist()))


def from_gains(**kw: float) -> np.ndarray:
    """Build ``theta`` from raw gain values keyed by :data:`GAIN_NAMES`."""
    missing = set(GAIN_NAMES) - set(kw)
    if missing:
        raise KeyError(f"missing gains: {sorted(missing)}")
    return np.log(np.array([kw[n] for n in GAIN_NAMES], dtype=float))


def detune(theta, amount: float = math.log(2.0)) -> np.ndarray:
    """Shift every log-gain down by ``amount`` (default: halve all gains)."""
    return np.asarray(theta, dtype=float) - amount


def _diag3(k, i):
    return np.array([k[i], k[i], k[i + 1]])


def _split_ref(ref):
    return (
        np.asarray(ref.pdes, dtype=float),
        np.asarray(ref.vdes, dtype=float),
        np.asarray(ref.ades, dtype=float),
        np.asarray(ref.wdes, dtype=float),
    )


def act(x, ref, theta, cfg: PolicyConfig = PolicyConfig()) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    pd, vd, ad, wd = _split_ref(ref)
    k = np.exp(np.asarray(theta, dtype=float))
    z = (
        -_diag3(k, 0) * x[IERR]
        - _diag3(k, 2) * (x[POS] - pd)
        - _diag3(k, 4) * (x[VEL] - vd)
        + ad
        + cfg.gravity * _EZ
    )
    R = lie.exp_so3(x[ROT])
    f = z @ R[:, 2]
    r_d = lie.shortest_rotation(z)
    try:
        e_r = lie.log_so3(R @ lie.exp_so3(-r_d))
    except DomainError as exc:
        raise ControllerSingular(f"attitude error at pi: {exc}") from exc
    tau_raw = -_diag3(k, 6) * e_r - _diag3(k, 8) * (x[OMEGA] - wd)
    return np.concatenate([[f], softclamp(tau_raw, cfg.bounds)])


def act_with_jacobians(x, ref, theta, cfg: PolicyConfig = PolicyConfig()):
    """Return ``(u, du/dx, du/dtheta)`` with shapes (4,), (4, 15), (4, 10)."""
    x = np.asarray(x, dtype=float)
    pd, vd, ad, wd = _split_ref(ref)
    k = np.exp(np.asarray(theta, dtype=float))
    gi, gp, gv, gr, gw = (_diag3(k, i) for i in (0, 2, 4, 6, 8))
    e_i = x[IERR]
    e_p = x[POS] - pd
    e_v = x[VEL] - vd
    e_w = x[OMEGA] - wd
    r = x[ROT]

    z = -gi * e_i - gp * e_p - gv * e_v + ad + cfg.gravity * _EZ
    R = lie.exp_so3(r)
    b3 = R[:, 2]
    f = z @ b3

    r_d, dRd_dz = lie.d_shortest_rotation(z)
    try:
        e_r = lie.log_so3(R @ lie.exp_so3(-r_d))
        Jinv = lie.right_jacobian_inv(e_r)
    except DomainError as exc:
        raise ControllerSingular(f"attitude error at pi: {exc}") from exc
    Jr_r = lie.right_jacobian(r)
    der_dr = Jinv @ lie.exp_so3(r_d) @ Jr_r
    der_drd = -Jinv @ lie.right_jacobian(-r_d)

    bounds = cfg.bounds
    tau_raw = -gr * e_r - gw * e_w
    th = np.tanh(tau_raw / bounds)
    tau = _strict(bounds * th, bounds)
    sech2 = 1.0 - th * th

    # thrust-vector Jacobians
    dz_dx = np.zeros((3, N_STATE))
    dz_dx[:, IERR] = -np.diag(gi)
    dz_dx[:, POS] = -np.diag(gp)
    dz_dx[:, VEL] = -np.diag(gv)
    dz_dth = np.zeros((3, N_PARAMS))
    for col, (g_idx, err) in enumerate(
        [(0, e_i), (0, e_i), (2, e_p), (2, e_p), (4, e_v), (4, e_v)]
    ):
        mask = _XY if col % 2 == 0 else _Z
        dz_dth[:, col] = -k[col] * mask * err

    dpi_dx = np.zeros((N_ACTION, N_STATE))
    dpi_dth = np.zeros((N_ACTION, N_PARAMS))

    dpi_dx[0] = b3 @ dz_dx
    dpi_dx[0, ROT] += z @ (-R @ lie.hat(_EZ) @ Jr_r)
    dpi_dth[0] = b3 @ dz_dth

    der_dz = der_drd @ dRd_dz
    dtau_dx = -gr[:, None] * (der_dz @ dz_dx)
    dtau_dx[:, ROT] += -gr[:, None] * der_dr
    dtau_dx[:, OMEGA] += -np.diag(gw)
    dtau_dth = -gr[:, None] * (der_dz @ dz_dth)
    dtau_dth[:, 6] += -k[6] * _XY * e_r
    dtau_dth[:, 7] += -k[7] * _Z * e_r
    dtau_dth[:, 8] += -k[8] * _XY * e_w
    dtau_dth[:, 9] += -k[9] * _Z * e_w

    dpi_dx[1:] = sech2[:, None] * dtau_dx
    dpi_dth[1:] = sech2[:, None] * dtau_dth
    u = np.concatenate([[f], tau])
    return u, dpi_dx, dpi_dth
