"""Online policy optimizers operating on per-step derivative bundles.

Each optimizer is a small state machine driven by the single-trajectory
protocol: the runner asks for the parameter to deploy (:meth:`current`),
steps the plant, then hands back the incurred cost and, for model-based
methods, the :class:`StepDerivs` about the visited state and action.

The pure update rules are also exposed as functions (:func:`mgaps_step`,
:func:`difftune_episode`, :func:`oprf_episode`) for direct testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mgaps import kernels
from mgaps.errors import OptimizerDiverged

SENSITIVITY_LIMIT = 1e8


@dataclass
class StepDerivs:
    dg_dx: np.ndarray
    dg_du: np.ndarray
    dpi_dx: np.ndarray
    dpi_dtheta: np.ndarray
    df_dx: np.ndarray
    df_du: np.ndarray

    @classmethod
    def zeros(cls, n: int, m: int, d: int) -> "StepDerivs":
        return cls(
            np.zeros((n, n)), np.zeros((n, m)), np.zeros((m, n)),
            np.zeros((m, d)), np.zeros(n), np.zeros(m),
        )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.dg_dx.shape[0], self.dg_du.shape[1], self.dpi_dtheta.shape[1]

    def copy(self) -> "StepDerivs":
        return StepDerivs(*(a.copy() for a in self._arrays()))

    def _arrays(self):
        return (self.dg_dx, self.dg_du, self.dpi_dx, self.dpi_dtheta, self.df_dx, self.df_du)


def _kernel_args(derivs: StepDerivs):
    return tuple(np.ascontiguousarray(a, dtype=float) for a in derivs._arrays())


def surrogate_gradient(y, derivs: StepDerivs):
    """Return ``(G, y_next)`` for sensitivity state ``y`` (n x d)."""
    n, _, d = derivs.dims
    y = np.ascontiguousarray(y, dtype=float)
    y_next = np.empty((n, d))
    G = np.empty(d)
    kernels.sens_update(y, *_kernel_args(derivs), y_next, G)
    return G, y_next


def _check(G, y):
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(y))):
        raise OptimizerDiverged(f"non-finite gradient or sensitivity (|G|={np.linalg.norm(G):.3g})")
    ny = float(np.linalg.norm(y))
    if ny > SENSITIVITY_LIMIT:
        raise OptimizerDiverged(f"sensitivity norm {ny:.3g} exceeds watchdog {SENSITIVITY_LIMIT:g}")


def _clip(G, clip):
    return G if clip is None else np.clip(G, -clip, clip)


def mgaps_step(theta, y, derivs: StepDerivs, eta: float, clip: float | None = None):
    """One M-GAPS update; returns ``(theta_next, y_next)``.

    The parameter step uses the sensitivity *before* it is propagated.
    """
    G, y_next = surrogate_gradient(y, derivs)
    _check(G, y_next)
    return np.asarray(theta, dtype=float) - eta * _clip(G, clip), y_next


def difftune_gradient(trajectory_derivs: Sequence[StepDerivs]) -> np.ndarray:
    """Episode-cost gradient with the episode's initial state held fixed."""
    n, _, d = trajectory_derivs[0].dims
    y = np.zeros((n, d))
    total = np.zeros(d)
    for derivs in trajectory_derivs:
        G, y = surrogate_gradient(y, derivs)
        _check(G, y)
        total += G
    return total


def difftune_episode(theta_k, trajectory_derivs: Sequence[StepDerivs], eta: float, clip=None):
    return np.asarray(theta_k, dtype=float) - eta * _clip(difftune_gradient(trajectory_derivs), clip)


def oprf_episode(theta_k, J_k: float, J_prev: float, h_k, eta: float, epsilon: float):
    """Residual-feedback update ``theta_k - (eta / eps) (J_k - J_prev) h_k``."""
    if not (math.isfinite(J_k) and math.isfinite(J_prev)):
        raise OptimizerDiverged(f"non-finite episode cost J_k={J_k}, J_prev={J_prev}")
    return np.asarray(theta_k, dtype=float) - (eta / epsilon) * (J_k - J_prev) * np.asarray(h_k)


def quasi_regret(costs_alg, costs_expert) -> np.ndarray:
    """Partial sums of the per-step cost difference to the expert."""
    a = np.asarray(costs_alg, dtype=float)
    b = np.asarray(costs_expert, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"cost streams differ in length: {a.shape} vs {b.shape}")
    return np.cumsum(a - b)


# --- configs ---------------------------------------------------------------


@dataclass(frozen=True)
class MgapsConfig:
    eta: float = 1e-2
    clip: float | None = None

    def __post_init__(self):
        if not self.eta >= 0:
            raise ValueError("eta must be nonnegative")


@dataclass(frozen=True)
class EpisodicConfig:
    eta: float = 1e-2
    horizon: int = 2000
    clip: float | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("episode horizon must be >= 1")


@dataclass(frozen=True)
class OprfConfig:
    eta: float = 1e-4
    horizon: int = 2000
    epsilon: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if self.horizon < 1 or not self.epsilon > 0:
            raise ValueError("OPRF needs horizon >= 1 and epsilon > 0")


@dataclass
class EpisodeRecord:
    k: int
    theta: np.ndarray
    J: float
    query: np.ndarray | None = None


# --- streaming optimizers ------------------------------------------------------


class Fixed:
    needs_derivs = False

    def __init__(self, theta):
        self.theta = np.array(theta, dtype=float)
        self.episodes: list[EpisodeRecord] = []

    def current(self) -> np.ndarray:
        return self.theta

    def observe(self, cost: float, derivs: StepDerivs | None) -> None:
        pass

    @property
    def sensitivity_norm(self) -> float:
        return 0.0


class Mgaps:
    """Non-episodic model-based optimizer with a persistent sensitivity state."""

    needs_derivs = True

    def __init__(self, theta0, n_state: int, cfg: MgapsConfig = MgapsConfig()):
        self.theta = np.array(theta0, dtype=float)
        self.cfg = cfg
        self.y = np.zeros((n_state, self.theta.size))
        self._y_next = np.empty_like(self.y)
        self._G = np.empty(self.theta.size)
        self.episodes: list[EpisodeRecord] = []

    def current(self) -> np.ndarray:
        return self.theta

    def observe(self, cost: float, derivs: StepDerivs) -> None:
        kernels.sens_update(self.y, *derivs._arrays(), self._y_next, self._G)
        _check(self._G, self._y_next)
        self.theta = self.theta - self.cfg.eta * _clip(self._G, self.cfg.clip)
        self.y, self._y_next = self._y_next, self.y

    @property
    def last_gradient(self) -> np.ndarray:
        return self._G

    @property
    def sensitivity_norm(self) -> float:
        return float(np.linalg.norm(self.y))


class DiffTune:
    """Episodic model-based policy gradient about the visited trajectory.

    Updates fire only on complete episodes; a trailing partial episode is
    discarded.
    """

    needs_derivs = True

    def __init__(self, theta0, n_state: int, cfg: EpisodicConfig = EpisodicConfig()):
        self.theta = np.array(theta0, dtype=float)
        self.cfg = cfg
        self.y = np.zeros((n_state, self.theta.size))
        self._y_next = np.empty_like(self.y)
        self._G = np.empty(self.theta.size)
        self.G_pg = np.zeros(self.theta.size)
        self._steps = 0
        self._J = 0.0
        self.episodes: list[EpisodeRecord] = []

    def current(self) -> np.ndarray:
        return self.theta

    def observe(self, cost: float, derivs: StepDerivs) -> None:
        kernels.sens_update(self.y, *derivs._arrays(), self._y_next, self._G)
        _check(self._G, self._y_next)
        self.G_pg += self._G
        self.y, self._y_next = self._y_next, self.y
        self._J += cost
        self._steps += 1
        if self._steps == self.cfg.horizon:
            self.episodes.append(EpisodeRecord(len(self.episodes) + 1, self.theta.copy(), self._J))
            self.theta = self.theta - self.cfg.eta * _clip(self.G_pg, self.cfg.clip)
            self.y[:] = 0.0
            self.G_pg[:] = 0.0
            self._steps = 0
            self._J = 0.0

    @property
    def sensitivity_norm(self) -> float:
        return float(np.linalg.norm(self.y))


class Oprf:
    """Episodic zeroth-order optimizer with one-point residual feedback.

    Deploys the query ``theta'_k = theta_{k-1} + eps h_k`` for the whole episode
    and moves the base parameter by the residual of consecutive episode costs.
    """

    needs_derivs = False

    def __init__(self, theta0, cfg: OprfConfig = OprfConfig()):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.rng_seed)
        self.theta = np.array(theta0, dtype=float)  # theta_k
        self._prev_base = self.theta.copy()  # theta_{k-1}; theta_0 := theta_1
        self.J_prev = 0.0
        self._J = 0.0
        self._steps = 0
        self.episodes: list[EpisodeRecord] = []
        self._draw()

    def _draw(self) -> None:
        self.h = self.rng.standard_normal(self.theta.size)
        self.query = self._prev_base + self.cfg.epsilon * self.h

    def current(self) -> np.ndarray:
        return self.query

    def observe(self, cost: float, derivs: StepDerivs | None = None) -> None:
        self._J += cost
        self._steps += 1
        if self._steps < self.cfg.horizon:
            return
        k = len(self.episodes) + 1
        self.episodes.append(EpisodeRecord(k, self.theta.copy(), self._J, self.query.copy()))
        nxt = oprf_episode(self.theta, self._J, self.J_prev, self.h, self.cfg.eta, self.cfg.epsilon)
        self._prev_base, self.theta = self.theta, nxt
        self.J_prev = self._J
        self._J = 0.0
        self._steps = 0
        self._draw()

    @property
    def sensitivity_norm(self) -> float:
        return 0.0


def run_fixed(plant, theta, n_steps: int, x0=None) -> np.ndarray:
    """Closed-loop rollout at a constant parameter; returns per-step costs."""
    x = plant.initial_state() if x0 is None else np.array(x0, dtype=float)
    theta = np.asarray(theta, dtype=float)
    costs = np.empty(n_steps)
    for k in range(n_steps):
        x, _, costs[k] = plant.step(k, x, theta)
    return costs
