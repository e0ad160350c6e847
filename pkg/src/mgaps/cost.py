"""Per-step quadratic tracking costs and their exact gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mgaps import quad_env as qe


@dataclass(frozen=True)
class QuadCostWeights:
    w_p: float = 1.0
    w_v: float = 1e-4
    w_w: float = 1e-3
    w_tau: float = 1e-7
    w_f: float = 1e-8

    def __post_init__(self):
        if min(self.w_p, self.w_v, self.w_w, self.w_tau, self.w_f) < 0:
            raise ValueError("cost weights must be nonnegative")


def quad_cost(x, u, ref, weights: QuadCostWeights = QuadCostWeights(), dt: float = 1.0 / 500.0):
    """Return ``(cost, df/dx, df/du)``; every term is scaled by ``dt``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    e_p = x[qe.POS] - ref.pdes
    e_v = x[qe.VEL] - ref.vdes
    e_w = x[qe.OMEGA] - ref.wdes
    tau = u[1:4]
    f = u[0]
    w = weights
    cost = dt * (
        w.w_p * (e_p @ e_p)
        + w.w_v * (e_v @ e_v)
        + w.w_w * (e_w @ e_w)
        + w.w_tau * (tau @ tau)
        + w.w_f * f * f
    )
    dx = np.zeros(qe.N_STATE)
    dx[qe.POS] = 2 * dt * w.w_p * e_p
    dx[qe.VEL] = 2 * dt * w.w_v * e_v
    dx[qe.OMEGA] = 2 * dt * w.w_w * e_w
    du = np.empty(qe.N_ACTION)
    du[0] = 2 * dt * w.w_f * f
    du[1:4] = 2 * dt * w.w_tau * tau
    return cost, dx, du


def quad_tracking_error(x, ref) -> float:
    """Squared position error, the dominant cost term without weights or dt."""
    e = np.asarray(x, dtype=float)[qe.POS] - ref.pdes
    return float(e @ e)


@dataclass(frozen=True)
class CarCostWeights:
    w_p: float = 1.0
    w_w: float = 1.0 / 30.0
    w_steer: float = 1.0 / 15.0


def car_cost(x, u, ref, weights: CarCostWeights = CarCostWeights()):
    """Car cost ``|p - pd|^2 + (w - wd)^2 / 30 + steer^2 / 15`` (no dt factor)."""
    from mgaps import car_env as ce

    x = np.asarray(x, dtype=float)
    e_p = x[ce.POS] - ref.pdes
    e_w = x[ce.OMEGA] - float(np.asarray(ref.wdes).reshape(-1)[0])
    steer = float(u[1])
    w = weights
    cost = w.w_p * (e_p @ e_p) + w.w_w * e_w * e_w + w.w_steer * steer * steer
    dx = np.zeros(ce.N_STATE)
    dx[ce.POS] = 2 * w.w_p * e_p
    dx[ce.OMEGA] = 2 * w.w_w * e_w
    du = np.array([0.0, 2 * w.w_steer * steer])
    return cost, dx, du
