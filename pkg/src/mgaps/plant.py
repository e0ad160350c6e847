"""Closed-loop plants: environment + policy + cost + reference on a step grid.

A plant advances the *true* system one step for a given parameter and, on
request, fills a :class:`~mgaps.optimizers.StepDerivs` with the nominal-model
derivatives about the visited state and action.
"""

from __future__ import annotations

import numpy as np

from mgaps import car_env as ce
from mgaps import kernels
from mgaps import quad_env as qe
from mgaps.cost import CarCostWeights, QuadCostWeights, car_cost
from mgaps.optimizers import StepDerivs
from mgaps.quad_policy import N_PARAMS as QUAD_PARAMS
from mgaps.quad_policy import PolicyConfig
from mgaps.reference import RefSample, RefTable


class QuadPlant:
    n, m, d = qe.N_STATE, qe.N_ACTION, QUAD_PARAMS
    state_names, state_units = qe.STATE_NAMES, qe.STATE_UNITS
    action_names, action_units = qe.ACTION_NAMES, qe.ACTION_UNITS

    def __init__(
        self,
        env: qe.EnvConfig,
        ref: RefTable,
        policy: PolicyConfig = PolicyConfig(),
        weights: QuadCostWeights = QuadCostWeights(),
        backend: str | None = None,
    ):
        self.env = env
        self.ref = ref
        self.policy = policy
        self.weights = np.array(
            [weights.w_p, weights.w_v, weights.w_w, weights.w_tau, weights.w_f]
        )
        self._kernel = kernels.load(backend)
        self._rows = ref.packed()
        n = len(ref)
        self.wind_flags = np.array([env.wind.active(t) for t in ref.t], dtype=bool)
        self._wind = np.zeros((n, 3))
        self._wind[self.wind_flags] = np.asarray(env.wind.force, dtype=float)
        self._scratch = StepDerivs.zeros(self.n, self.m, self.d)
        self._u = np.empty(self.m)
        self.thrust_clamped = 0

    def __len__(self) -> int:
        return len(self.ref)

    def initial_state(self) -> np.ndarray:
        return qe.QuadState.at_rest(self.ref.pdes[0]).vector()

    def reference(self, k: int) -> RefSample:
        return self.ref.at(k)

    def step(self, k: int, x, theta, derivs: StepDerivs | None = None):
        """Return ``(x_next, u, cost)``; fill ``derivs`` in place if given."""
        d = derivs if derivs is not None else self._scratch
        x_next = np.empty(self.n)
        u = np.empty(self.m)
        c = self._kernel.quad_closed_loop(
            x, self._rows[k], theta, self.env.dt, self.env.gravity,
            self.policy.b_xy, self.policy.b_z, self.weights,
            self.env.mass_scale, self._wind[k], derivs is not None,
            x_next, u, d.dg_dx, d.dg_du, d.dpi_dx, d.dpi_dtheta, d.df_dx, d.df_du,
        )
        if u[0] < 0.0:
            self.thrust_clamped += 1
        return x_next, u, c

    def tracking_error(self, x, k: int) -> float:
        e = np.asarray(x)[qe.POS] - self.ref.pdes[k]
        return float(e @ e)


class CarPlant:
    n, m, d = ce.N_STATE, ce.N_ACTION, ce.N_PARAMS
    state_names, state_units = ce.STATE_NAMES, ce.STATE_UNITS
    action_names, action_units = ce.ACTION_NAMES, ce.ACTION_UNITS

    def __init__(
        self,
        model: ce.CarModelConfig,
        ref: RefTable,
        weights: CarCostWeights = CarCostWeights(),
    ):
        self.model = model
        self.ref = ref
        self.weights = weights
        self.wind_flags = np.zeros(len(ref), dtype=bool)
        self.thrust_clamped = 0

    def __len__(self) -> int:
        return len(self.ref)

    def initial_state(self) -> np.ndarray:
        return ce.initial_state(self.ref.at(0))

    def reference(self, k: int) -> RefSample:
        return self.ref.at(k)

    def step(self, k: int, x, theta, derivs: StepDerivs | None = None):
        ref = self.ref.at(k)
        if derivs is None:
            u = ce.car_act(x, ref, theta)
            c, _, _ = car_cost(x, u, ref, self.weights)
            return ce.car_step(x, u, self.model), u, c
        u, K, P = ce.car_act_with_jacobians(x, ref, theta)
        c, fx, fu = car_cost(x, u, ref, self.weights)
        x_next, A, B = ce.car_step_jacobians(x, u, self.model)
        derivs.dg_dx[:] = A
        derivs.dg_du[:] = B
        derivs.dpi_dx[:] = K
        derivs.dpi_dtheta[:] = P
        derivs.df_dx[:] = fx
        derivs.df_du[:] = fu
        return x_next, u, c

    def tracking_error(self, x, k: int) -> float:
        e = np.asarray(x)[ce.POS] - self.ref.pdes[k]
        return float(e @ e)
