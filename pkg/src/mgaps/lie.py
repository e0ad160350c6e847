"""SO(3) and SO(2) exponential/logarithm maps in logarithmic coordinates.

Rotations are carried as rotation vectors ``r`` (axis times angle) restricted
to the single-cover ball ``|r| < pi - ANGLE_MARGIN``. Jacobians use the
right-trivialized convention::

    exp(r + dr) ~= exp(r) @ exp(right_jacobian(r) @ dr)
    log(R @ exp(xi)) ~= log(R) + right_jacobian_inv(log(R)) @ xi
"""

from __future__ import annotations

import math

import numpy as np

from mgaps.errors import ControllerSingular, DomainError

ANGLE_MARGIN = 1e-6
MAX_ANGLE = math.pi - ANGLE_MARGIN
SMALL_ANGLE = 1e-6

_I3 = np.eye(3)


def hat(w) -> np.ndarray:
    """Skew matrix with ``hat(w) @ y == cross(w, y)``."""
    return np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )


def vee(W) -> np.ndarray:
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def _check_angle(theta: float) -> None:
    if not theta < MAX_ANGLE:
        raise DomainError(
            f"rotation angle {theta:.9g} outside single-cover region (< {MAX_ANGLE:.9g})"
        )


def _exp_coeffs(theta: float) -> tuple[float, float]:
    # sin(t)/t, (1 - cos t)/t^2
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0, 0.5 - t2 / 24.0
    return math.sin(theta) / theta, (1.0 - math.cos(theta)) / (theta * theta)


def exp_so3(r) -> np.ndarray:
    """Rodrigues formula. Raises DomainError for ``|r| >= pi - 1e-6``."""
    r = np.asarray(r, dtype=float)
    theta = math.sqrt(r @ r)
    _check_angle(theta)
    a, b = _exp_coeffs(theta)
    K = hat(r)
    return _I3 + a * K + b * (K @ K)


def log_so3(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    s = 0.5 * vee(R - R.T)
    sin_t = math.sqrt(s @ s)
    cos_t = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    theta = math.atan2(sin_t, cos_t)
    _check_angle(theta)
    if theta < SMALL_ANGLE:
        return (1.0 + theta * theta / 6.0) * s
    return (theta / sin_t) * s


def _check_no_flip(r, r_next) -> None:
    # log always lands inside the ball; if the antipodal representative of the
    # same rotation is closer to r, the path crossed angle pi
    th = math.sqrt(r_next @ r_next)
    if th > 0.5 * math.pi:
        alt = r_next * (1.0 - 2.0 * math.pi / th)
        d_alt, d_in = alt - r, r_next - r
        if d_alt @ d_alt < d_in @ d_in:
            raise DomainError("composed rotation crossed angle pi")


def boxplus(r, w, dt: float) -> np.ndarray:
    """``log(exp(r) @ exp(dt * w))``: one Lie-group integration step."""
    r = np.asarray(r, dtype=float)
    w = np.asarray(w, dtype=float)
    if not w.any():
        return r.copy()
    r_next = log_so3(exp_so3(r) @ exp_so3(dt * w))
    _check_no_flip(r, r_next)
    return r_next


def right_jacobian(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    theta = math.sqrt(r @ r)
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        a, b = 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0
    else:
        t2 = theta * theta
        a = (1.0 - math.cos(theta)) / t2
        b = (theta - math.sin(theta)) / (t2 * theta)
    K = hat(r)
    return _I3 - a * K + b * (K @ K)


def left_jacobian(r) -> np.ndarray:
    return right_jacobian(-np.asarray(r, dtype=float))


def right_jacobian_inv(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    theta = math.sqrt(r @ r)
    _check_angle(theta)
    if theta < SMALL_ANGLE:
        c = 1.0 / 12.0 + theta * theta / 720.0
    else:
        c = 1.0 / (theta * theta) - (1.0 + math.cos(theta)) / (
            2.0 * theta * math.sin(theta)
        )
    K = hat(r)
    return _I3 + 0.5 * K + c * (K @ K)


def d_exp_so3(r) -> np.ndarray:
    """Derivative of ``exp`` in the body-frame tangent space (right Jacobian)."""
    return right_jacobian(r)


def d_log_so3(R) -> np.ndarray:
    """Derivative of ``log`` w.r.t. a right perturbation ``R @ exp(xi)``."""
    return right_jacobian_inv(log_so3(R))


def d_rotate(r, v) -> np.ndarray:
    """Jacobian of ``exp(r) @ v`` with respect to ``r``."""
    return -exp_so3(r) @ hat(v) @ right_jacobian(r)


def d_boxplus(r, w, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(r_next, d r_next/d r, d r_next/d w)`` for :func:`boxplus`."""
    r = np.asarray(r, dtype=float)
    phi = dt * np.asarray(w, dtype=float)
    E = exp_so3(phi)
    r_next = log_so3(exp_so3(r) @ E)
    _check_no_flip(r, r_next)
    Jinv = right_jacobian_inv(r_next)
    d_r = Jinv @ E.T @ right_jacobian(r)
    d_w = dt * (Jinv @ right_jacobian(phi))
    return r_next, d_r, d_w


# --- SO(2) --------------------------------------------------------------------


def wrap_angle(a: float) -> float:
    """Wrap to the half-open interval (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    if w == -math.pi:
        return math.pi
    return w


def exp_so2(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def log_so2(R) -> float:
    return math.atan2(R[1, 0], R[0, 0])


def boxplus_so2(a: float, w: float, dt: float) -> float:
    return wrap_angle(a + dt * w)


# --- shortest rotation taking e_z to a vector --------------------------------

_SERIES_RATIO = 1e-3


def _tilt_coeffs(z) -> tuple[float, float, float, float]:
    """Return ``(psi, chi, s, nz2)`` for the map ``z -> psi * (-z_y, z_x, 0)``.

    ``psi = atan2(s, z_z) / s`` with ``s = |(z_x, z_y)|``; ``chi = (d psi/d s) / s``.
    Series expansions are used when ``s`` is tiny relative to ``z_z``.
    """
    zx, zy, zz = float(z[0]), float(z[1]), float(z[2])
    s2 = zx * zx + zy * zy
    s = math.sqrt(s2)
    nz2 = s2 + zz * zz
    if zz > 0.0 and s < _SERIES_RATIO * zz:
        u2 = s2 / (zz * zz)
        psi = (1.0 - u2 / 3.0 + u2 * u2 / 5.0) / zz
        chi = (-2.0 / 3.0 + 4.0 * u2 / 5.0) / (zz ** 3)
    else:
        alpha = math.atan2(s, zz)
        psi = alpha / s
        chi = (zz / nz2 - psi) / s2
    return psi, chi, s, nz2


def shortest_rotation(z, min_norm: float = 1e-9) -> np.ndarray:
    """Rotation vector of the shortest rotation taking ``e_z`` onto ``z``.

    Returns zero when ``z`` is parallel to ``+e_z``. Raises
    :class:`~mgaps.errors.ControllerSingular` when ``z`` vanishes or the
    required angle reaches the single-cover limit.
    """
    z = np.asarray(z, dtype=float)
    if not math.sqrt(z @ z) > min_norm:
        raise ControllerSingular(f"thrust vector norm {math.sqrt(z @ z):.3g} too small")
    if z[0] == 0.0 and z[1] == 0.0:
        if z[2] > 0.0:
            return np.zeros(3)
        raise ControllerSingular("thrust vector anti-parallel to e_z")
    psi, _, s, _ = _tilt_coeffs(z)
    if not math.atan2(s, z[2]) < MAX_ANGLE:
        raise ControllerSingular("desired attitude angle reaches pi")
    return psi * np.array([-z[1], z[0], 0.0])


def d_shortest_rotation(z) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(r_d, d r_d / d z)``."""
    r_d = shortest_rotation(z)
    z = np.asarray(z, dtype=float)
    psi, chi, _, nz2 = _tilt_coeffs(z)
    zx, zy = z[0], z[1]
    perp = np.array([-zy, zx, 0.0])
    D = np.empty((3, 3))
    D[:, 0] = chi * zx * perp + psi * np.array([0.0, 1.0, 0.0])
    D[:, 1] = chi * zy * perp + psi * np.array([-1.0, 0.0, 0.0])
    D[:, 2] = (-1.0 / nz2) * perp
    return r_d, D
