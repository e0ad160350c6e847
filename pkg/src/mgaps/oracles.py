"""Independent numerical checks: finite differences and re-simulation.

Nothing here is used by the optimizers themselves; these routines exist to
validate the analytic derivatives and the online sensitivity recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from mgaps.errors import MgapsError


@dataclass(frozen=True)
class FdSpec:
    h: float = 1e-6
    rtol: float = 1e-5
    atol: float = 1e-9

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("finite-difference step must be positive")


def fd_jacobian(fn: Callable, point, spec: FdSpec = FdSpec()) -> np.ndarray:
    """Central-difference Jacobian with per-coordinate step ``h * max(1, |x_i|)``.

    Scalar-valued ``fn`` yields a gradient vector; array-valued ``fn`` yields
    an array with one trailing axis per input coordinate.
    """
    x = np.array(point, dtype=float)
    cols = []
    for i in range(x.size):
        step = spec.h * max(1.0, abs(x.flat[i]))
        xp = x.copy()
        xm = x.copy()
        xp.flat[i] += step
        xm.flat[i] -= step
        fp = np.asarray(fn(xp), dtype=float)
        fm = np.asarray(fn(xm), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise FloatingPointError(f"non-finite evaluation at coordinate {i}")
        cols.append((fp - fm) / (xp.flat[i] - xm.flat[i]))
    return np.stack(cols, axis=-1)


def relative_error(analytic, reference, floor: float = 1e-12) -> float:
    """Max-abs deviation scaled by the reference's max-abs entry."""
    a = np.asarray(analytic, dtype=float)
    b = np.asarray(reference, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), floor))


def rollout_state(plant, theta, T: int, x0=None, k0: int = 0) -> np.ndarray:
    """State after ``T`` closed-loop steps at constant ``theta``."""
    x = plant.initial_state() if x0 is None else np.array(x0, dtype=float)
    for k in range(k0, k0 + T):
        x, _, _ = plant.step(k, x, theta)
    return x


def resim_sensitivity(plant, theta, T: int, x0=None, spec: FdSpec = FdSpec()) -> np.ndarray:
    """``d x_T / d theta`` by re-simulating the whole closed loop per entry."""
    theta = np.asarray(theta, dtype=float)
    if T == 0:
        return np.zeros((plant.n, theta.size))
    return fd_jacobian(lambda th: rollout_state(plant, th, T, x0), theta, spec)


def episode_cost(plant, theta, x_start, k_start: int, H: int) -> float:
    x = np.array(x_start, dtype=float)
    total = 0.0
    for k in range(k_start, k_start + H):
        x, _, c = plant.step(k, x, theta)
        total += c
    return total


def episode_cost_gradient_fd(plant, theta, x_start, k_start: int, H: int, spec: FdSpec = FdSpec()):
    """FD gradient of an episode's summed cost with its initial state held fixed."""
    return fd_jacobian(lambda th: episode_cost(plant, th, x_start, k_start, H), theta, spec)


@dataclass
class ContractionFit:
    C: float
    rho: float
    residual: float
    distances: np.ndarray

    @property
    def contractive(self) -> bool:
        return self.rho < 1.0


def contraction_probe(plant, theta, dx, horizon: int, x0=None, k0: int = 0) -> ContractionFit:
    """Fit ``|Phi_t(x) - Phi_t(x + dx)| ~ C rho^t |dx|`` on a log-linear scale.

    Divergence of either rollout propagates as the plant's exception.
    """
    theta = np.asarray(theta, dtype=float)
    xa = plant.initial_state() if x0 is None else np.array(x0, dtype=float)
    xb = xa + np.asarray(dx, dtype=float)
    d0 = float(np.linalg.norm(dx))
    dist = np.empty(horizon + 1)
    dist[0] = d0
    for i, k in enumerate(range(k0, k0 + horizon), start=1):
        xa, _, _ = plant.step(k, xa, theta)
        xb, _, _ = plant.step(k, xb, theta)
        dist[i] = np.linalg.norm(xa - xb)
    if d0 == 0.0:
        return ContractionFit(0.0, 0.0, 0.0, dist)
    t = np.arange(horizon + 1)
    ok = dist > 0
    logr = np.log(dist[ok] / d0)
    slope, intercept = np.polyfit(t[ok], logr, 1)
    resid = float(np.sqrt(np.mean((logr - (slope * t[ok] + intercept)) ** 2)))
    return ContractionFit(float(math.exp(intercept)), float(math.exp(slope)), resid, dist)


# --- packaged derivative checks -------------------------------------------------


@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float
    points: int

    @property
    def passed(self) -> bool:
        return self.error < self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: max rel err {self.error:.2e} (< {self.tolerance:g}, {self.points} pts)"


def _random_quad_state(rng, max_angle=1.0):
    x = np.concatenate(
        [rng.normal(size=3) * 0.1, rng.normal(size=3), rng.normal(size=3), np.zeros(3), rng.normal(size=3)]
    )
    axis = rng.normal(size=3)
    x[9:12] = axis / np.linalg.norm(axis) * rng.uniform(0.0, max_angle)
    return x


def jacobian_suite(points: int = 50, seed: int = 0, tol: float = 1e-4) -> list[CheckResult]:
    """Analytic-vs-FD comparisons for every differentiated map in the package."""
    from mgaps import car_env as ce
    from mgaps import cost, lie
    from mgaps import quad_env as qe
    from mgaps import quad_policy as qp
    from mgaps.reference import RefSample

    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}

    def record(name, a, b):
        worst[name] = max(worst.get(name, 0.0), relative_error(a, b))

    for _ in range(points):
        r = rng.normal(size=3)
        r *= rng.uniform(0.05, 3.0) / np.linalg.norm(r)
        R0 = lie.exp_so3(r)
        record("lie.right_jacobian", lie.right_jacobian(r),
               fd_jacobian(lambda q: lie.log_so3(R0.T @ lie.exp_so3(q)), r))
        record("lie.right_jacobian_inv", lie.d_log_so3(R0),
               fd_jacobian(lambda xi: lie.log_so3(R0 @ lie.exp_so3(xi)), np.zeros(3)))
        w = rng.normal(size=3)
        r_small = r * min(1.0, 2.5 / np.linalg.norm(r))
        _, Jr_, Jw_ = lie.d_boxplus(r_small, w, 0.1)
        record("lie.boxplus d/dr", Jr_, fd_jacobian(lambda q: lie.boxplus(q, w, 0.1), r_small))
        record("lie.boxplus d/dw", Jw_, fd_jacobian(lambda q: lie.boxplus(r_small, q, 0.1), w))
        z = rng.normal(size=3) + np.array([0.0, 0.0, 3.0])
        record("lie.shortest_rotation", lie.d_shortest_rotation(z)[1],
               fd_jacobian(lie.shortest_rotation, z))

        x = _random_quad_state(rng)
        u = np.array([9.81 + rng.normal(), *rng.normal(size=3)])
        cfg = qe.EnvConfig()
        pd = rng.normal(size=3)
        _, A, B = qe.step_model_jacobians(x, u, 0.0, cfg, pd)
        record("quad_env dg/dx", A, fd_jacobian(lambda q: qe.step_model_jacobians(q, u, 0.0, cfg, pd)[0], x))
        record("quad_env dg/du", B, fd_jacobian(lambda q: qe.step_model_jacobians(x, q, 0.0, cfg, pd)[0], u))

        ref = RefSample(rng.normal(size=3) * 0.3 + x[3:6], rng.normal(size=3), rng.normal(size=3), rng.normal(size=3))
        theta = np.log([2, 2, 16, 16, 8, 8, 400, 100, 40, 20]) + rng.normal(size=10) * 0.3
        _, K, P = qp.act_with_jacobians(x, ref, theta)
        record("quad_policy dpi/dx", K, fd_jacobian(lambda q: qp.act(q, ref, theta), x))
        record("quad_policy dpi/dtheta", P, fd_jacobian(lambda q: qp.act(x, ref, q), theta))

        _, fx, fu = cost.quad_cost(x, u, ref)
        record("cost.quad_cost df/dx", fx, fd_jacobian(lambda q: cost.quad_cost(q, u, ref)[0], x))
        # action weights are ~1e-8, so a tiny step drowns in roundoff; the
        # cost is quadratic in u and central differences are exact anyway
        record("cost.quad_cost df/du", fu, fd_jacobian(lambda q: cost.quad_cost(x, q, ref)[0], u, FdSpec(h=1e-2)))

        xc = np.array([*rng.normal(size=2), rng.uniform(-2.5, 2.5), rng.uniform(0.5, 3.0),
                       *rng.normal(size=2) * 0.3, rng.normal() * 0.2])
        uc = np.array([rng.uniform(0.5, 3.0), rng.normal() * 0.2])
        mcfg = ce.CarModelConfig()
        _, G, Gu = ce.car_step_jacobians(xc, uc, mcfg)
        record("car_env dg/dx", G, fd_jacobian(lambda q: ce.car_step(q, uc, mcfg), xc))
        record("car_env dg/du", Gu, fd_jacobian(lambda q: ce.car_step(xc, q, mcfg), uc))
        # keep the heading error away from the +-pi seam
        vd = rng.normal(size=2)
        rd = math.atan2(vd[1], vd[0])
        xc[ce.HEAD] = rd + rng.uniform(-1.0, 1.0)
        cref = RefSample(xc[ce.POS] + rng.normal(size=2) * 0.5, vd, rng.normal(size=2), np.zeros(1))
        th_c = rng.normal(size=5) * 0.3
        _, Kc, Pc = ce.car_act_with_jacobians(xc, cref, th_c)
        record("car_env dpi/dx", Kc, fd_jacobian(lambda q: ce.car_act(q, cref, th_c), xc))
        record("car_env dpi/dtheta", Pc, fd_jacobian(lambda q: ce.car_act(xc, cref, q), th_c))
        cref_w = RefSample(cref.pdes, cref.vdes, cref.ades, np.array([rng.normal()]))
        _, cfx, cfu = cost.car_cost(xc, uc, cref_w)
        record("cost.car_cost df/dx", cfx, fd_jacobian(lambda q: cost.car_cost(q, uc, cref_w)[0], xc))
        record("cost.car_cost df/du", cfu, fd_jacobian(lambda q: cost.car_cost(xc, q, cref_w)[0], uc))

    return [CheckResult(name, err, tol, points) for name, err in worst.items()]


def safe_run(fn, *args, **kwargs):
    """Call ``fn`` and return ``(result, None)`` or ``(None, exception)``."""
    try:
        return fn(*args, **kwargs), None
    except MgapsError as exc:
        return None, exc


class ScalarToyPlant:
    """``x' = a x + u``, ``u = -theta x``, ``f = x^2`` with a raw (not log) gain."""

    n = m = d = 1

    def __init__(self, a: float = 0.9, x0: float = 1.0):
        self.a = a
        self.x0 = x0

    def initial_state(self) -> np.ndarray:
        return np.array([self.x0])

    def step(self, k: int, x, theta, derivs=None):
        x = float(np.asarray(x).reshape(-1)[0])
        th = float(np.asarray(theta).reshape(-1)[0])
        u = -th * x
        if derivs is not None:
            derivs.dg_dx[:] = self.a
            derivs.dg_du[:] = 1.0
            derivs.dpi_dx[:] = -th
            derivs.dpi_dtheta[:] = -x
            derivs.df_dx[:] = 2.0 * x
            derivs.df_du[:] = 0.0
        return np.array([self.a * x + u]), np.array([u]), x * x
