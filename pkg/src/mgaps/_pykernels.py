"""Pure-Python kernels; reference behaviour for the compiled ``_ckernels``.

Both modules expose the same two functions with identical signatures and
write their results into caller-owned output arrays.
"""

from __future__ import annotations

import numpy as np

from mgaps import cost as _cost
from mgaps import quad_env as qe
from mgaps import quad_policy as qp
from mgaps.reference import RefSample


def quad_closed_loop(
    x, ref_row, theta, dt, gravity, b_xy, b_z, weights, mass_scale, wind_accel,
    want_derivs, x_next, u, dg_dx, dg_du, dpi_dx, dpi_dth, df_dx, df_du,
):
    """One closed-loop quadrotor step; returns the step cost.

    ``ref_row`` packs ``(pdes, vdes, ades, wdes)``. ``x_next`` receives the true
    plant's next state; the Jacobian outputs describe the nominal model and are
    only written when ``want_derivs`` is true.
    """
    ref = RefSample(ref_row[0:3], ref_row[3:6], ref_row[6:9], ref_row[9:12])
    pcfg = qp.PolicyConfig(b_xy=b_xy, b_z=b_z, gravity=gravity)
    if want_derivs:
        act, K, P = qp.act_with_jacobians(x, ref, theta, pcfg)
    else:
        act = qp.act(x, ref, theta, pcfg)
    w = _cost.QuadCostWeights(*weights)
    c, fx, fu = _cost.quad_cost(x, act, ref, w, dt)

    f = max(float(act[0]), 0.0) / mass_scale
    x_next[:] = qe._advance(
        np.asarray(x), f, act[1:4], dt, gravity, np.asarray(wind_accel, dtype=float), ref.pdes
    )
    u[:] = act
    if want_derivs:
        _, A, B = qe.step_model_jacobians(x, act, 0.0, qe.EnvConfig(dt=dt, gravity=gravity), ref.pdes)
        dg_dx[:] = A
        dg_du[:] = B
        dpi_dx[:] = K
        dpi_dth[:] = P
        df_dx[:] = fx
        df_du[:] = fu
    return c


def sens_update(y, dg_dx, dg_du, dpi_dx, dpi_dth, df_dx, df_du, y_out, grad):
    """Surrogate-gradient estimate and sensitivity propagation.

    ``grad = (df_dx + df_du @ dpi_dx) @ y + df_du @ dpi_dth`` and
    ``y_out = (dg_dx + dg_du @ dpi_dx) @ y + dg_du @ dpi_dth``.
    """
    grad[:] = (df_dx + df_du @ dpi_dx) @ y + df_du @ dpi_dth
    y_out[:] = (dg_dx + dg_du @ dpi_dx) @ y + dg_du @ dpi_dth
