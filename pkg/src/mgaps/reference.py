"""Closed-form target trajectories and their time derivatives.

Every trajectory kind maps a phase ``tau`` to a curve and its first three
derivatives. An optional smooth start (``ramp`` seconds) time-warps the phase
so the target begins at rest: ``tau'`` rises from 0 to 1 along a quintic
smoothstep and ``tau = t - ramp / 2`` afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GRAVITY = 9.81


@dataclass(frozen=True)
class Figure8Diagonal:
    """Lemniscate of Gerono drawn in a plane tilted about the x axis."""

    period: float = 4.0
    amplitude: float = 0.75
    tilt: float = math.pi / 4
    center: tuple[float, float, float] = (0.0, 0.0, 1.0)
    ramp: float = 0.0

    def curve(self, tau: np.ndarray) -> np.ndarray:
        w = 2.0 * math.pi / self.period
        A = self.amplitude
        ph = w * tau
        c, s = np.cos(ph), np.sin(ph)
        c2, s2 = np.cos(2 * ph), np.sin(2 * ph)
        # in-plane (a, b) = (A cos, A/2 sin 2ph) and derivatives
        a = np.stack([A * c, -A * w * s, -A * w**2 * c, A * w**3 * s])
        b = np.stack(
            [0.5 * A * s2, A * w * c2, -2 * A * w**2 * s2, -4 * A * w**3 * c2]
        )
        out = np.zeros((4,) + np.shape(tau) + (3,))
        out[..., 0] = a
        out[..., 1] = b * math.cos(self.tilt)
        out[..., 2] = b * math.sin(self.tilt)
        out[0] += np.asarray(self.center)
        return out


@dataclass(frozen=True)
class LineBackForth:
    period: float = 4.0
    length: float = 1.5
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    center: tuple[float, float, float] = (0.0, 0.0, 1.0)
    ramp: float = 0.0

    def curve(self, tau: np.ndarray) -> np.ndarray:
        w = 2.0 * math.pi / self.period
        h = 0.5 * self.length
        ph = w * tau
        c, s = np.cos(ph), np.sin(ph)
        mag = np.stack([h * c, -h * w * s, -h * w**2 * c, h * w**3 * s])
        d = np.asarray(self.direction, dtype=float)
        d = d / np.linalg.norm(d)
        out = mag[..., None] * d
        out[0] += np.asarray(self.center)
        return out


@dataclass(frozen=True)
class CircleHorizontal:
    period: float = 4.0
    radius: float = 0.5
    height: float = 1.0
    ramp: float = 0.0

    def curve(self, tau: np.ndarray) -> np.ndarray:
        w = 2.0 * math.pi / self.period
        R = self.radius
        ph = w * tau
        c, s = np.cos(ph), np.sin(ph)
        out = np.zeros((4,) + np.shape(tau) + (3,))
        out[..., 0] = np.stack([R * c, -R * w * s, -R * w**2 * c, R * w**3 * s])
        out[..., 1] = np.stack([R * s, R * w * c, -R * w**2 * s, -R * w**3 * c])
        out[0, ..., 2] = self.height
        return out


@dataclass(frozen=True)
class CarCircle:
    """Planar counter-clockwise circle for the car."""

    period: float = 12.0
    radius: float = 4.0
    ramp: float = 0.0

    def curve(self, tau: np.ndarray) -> np.ndarray:
        w = 2.0 * math.pi / self.period
        R = self.radius
        ph = w * tau
        c, s = np.cos(ph), np.sin(ph)
        out = np.zeros((4,) + np.shape(tau) + (2,))
        out[..., 0] = np.stack([R * c, -R * w * s, -R * w**2 * c, R * w**3 * s])
        out[..., 1] = np.stack([R * s, R * w * c, -R * w**2 * s, -R * w**3 * c])
        return out


TrajKind = Figure8Diagonal | LineBackForth | CircleHorizontal | CarCircle

KINDS: dict[str, type] = {
    "figure8": Figure8Diagonal,
    "line": LineBackForth,
    "circle": CircleHorizontal,
    "car_circle": CarCircle,
}


@dataclass
class RefSample:
    pdes: np.ndarray
    vdes: np.ndarray
    ades: np.ndarray
    wdes: np.ndarray
    jdes: np.ndarray = field(repr=False, default=None)


def _phase(t: np.ndarray, ramp: float):
    """Return ``(tau, tau', tau'', tau''')`` for the smooth-start time warp."""
    t = np.asarray(t, dtype=float)
    if ramp <= 0.0:
        one = np.ones_like(t)
        zero = np.zeros_like(t)
        return t, one, zero, zero
    u = np.clip(t / ramp, 0.0, 1.0)
    inside = t < ramp
    tau = np.where(inside, ramp * (2.5 * u**4 - 3 * u**5 + u**6), t - 0.5 * ramp)
    d1 = 10 * u**3 - 15 * u**4 + 6 * u**5
    d2 = (30 * u**2 - 60 * u**3 + 30 * u**4) / ramp
    d3 = (60 * u - 180 * u**2 + 120 * u**3) / ramp**2
    return tau, d1, d2, d3


def _derivatives(kind, t):
    tau, d1, d2, d3 = _phase(t, kind.ramp)
    c0, c1, c2, c3 = kind.curve(tau)
    d1, d2, d3 = d1[..., None], d2[..., None], d3[..., None]
    p = c0
    v = c1 * d1
    a = c2 * d1**2 + c1 * d2
    j = c3 * d1**3 + 3 * c2 * d1 * d2 + c1 * d3
    return p, v, a, j


def desired_body_rate(ades: np.ndarray, jdes: np.ndarray, gravity: float = GRAVITY):
    """Body-frame angular velocity of the yaw-free attitude tracking ``a + g e_z``.

    The desired attitude is the shortest rotation taking ``e_z`` to
    ``z(t) = a(t) + g e_z``; its rotation-vector rate is pushed through the right
    Jacobian to give the body-frame rate. Vectorized over leading axes.
    """
    z = np.array(ades, dtype=float, copy=True)
    z[..., 2] += gravity
    zd = np.asarray(jdes, dtype=float)
    zx, zy, zz = z[..., 0], z[..., 1], z[..., 2]
    s2 = zx**2 + zy**2
    s = np.sqrt(s2)
    nz2 = s2 + zz**2
    small = (zz > 0) & (s < 1e-3 * zz)
    u2 = s2 / zz**2
    with np.errstate(divide="ignore", invalid="ignore"):
        psi_direct = np.arctan2(s, zz) / s
        chi_direct = (zz / nz2 - psi_direct) / s2
    psi = np.where(small, (1 - u2 / 3 + u2**2 / 5) / zz, psi_direct)
    chi = np.where(small, (-2 / 3 + 4 * u2 / 5) / zz**3, chi_direct)
    perp = np.stack([-zy, zx, np.zeros_like(zx)], axis=-1)
    perp_dot = np.stack([-zd[..., 1], zd[..., 0], np.zeros_like(zx)], axis=-1)
    psi_dot = chi * (zx * zd[..., 0] + zy * zd[..., 1]) - zd[..., 2] / nz2
    r = psi[..., None] * perp
    r_dot = psi_dot[..., None] * perp + psi[..., None] * perp_dot

    th2 = np.sum(r * r, axis=-1)
    th = np.sqrt(th2)
    tiny = th < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        ca = np.where(tiny, 0.5 - th2 / 24, (1 - np.cos(th)) / th2)
        cb = np.where(tiny, 1 / 6 - th2 / 120, (th - np.sin(th)) / (th2 * th))
    rxv = np.cross(r, r_dot)
    return r_dot - ca[..., None] * rxv + cb[..., None] * np.cross(r, rxv)


def _planar_heading_rate(v: np.ndarray, a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return (v[..., 0] * a[..., 1] - v[..., 1] * a[..., 0]) / np.sum(v * v, axis=-1)


def sample(kind, t: float, gravity: float = GRAVITY) -> RefSample:
    p, v, a, j = _derivatives(kind, np.asarray(t, dtype=float))
    if p.shape[-1] == 3:
        w = desired_body_rate(a, j, gravity)
    else:
        w = np.atleast_1d(_planar_heading_rate(v, a))
    return RefSample(pdes=p, vdes=v, ades=a, wdes=w, jdes=j)


@dataclass
class RefTable:
    """Reference precomputed on the step grid ``t_k = k * dt``."""

    t: np.ndarray
    pdes: np.ndarray
    vdes: np.ndarray
    ades: np.ndarray
    wdes: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def at(self, k: int) -> RefSample:
        return RefSample(self.pdes[k], self.vdes[k], self.ades[k], self.wdes[k])

    def packed(self) -> np.ndarray:
        """Rows of ``(pdes, vdes, ades, wdes)`` as one contiguous float array."""
        return np.ascontiguousarray(
            np.concatenate(
                [self.pdes, self.vdes, self.ades, np.atleast_2d(self.wdes.T).T], axis=1
            )
        )


def sample_grid(kind, n_steps: int, dt: float, gravity: float = GRAVITY) -> RefTable:
    t = np.arange(n_steps) * dt
    s = sample(kind, t, gravity)
    w = s.wdes if s.pdes.shape[-1] == 3 else s.wdes.reshape(-1, 1)
    return RefTable(t, s.pdes, s.vdes, s.ades, w)


def lap_steps(kind, dt: float) -> int:
    return int(round(kind.period / dt))
