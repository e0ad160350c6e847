import math

import numpy as np
import pytest

from mgaps import lie
from mgaps import reference as rf

KINDS = [rf.Figure8Diagonal(), rf.LineBackForth(), rf.CircleHorizontal(), rf.CarCircle()]


def test_circle_at_zero():
    T, R, h = 4.0, 0.5, 1.0
    s = rf.sample(rf.CircleHorizontal(T, R, h), 0.0)
    np.testing.assert_allclose(s.pdes, [R, 0, h], atol=1e-15)
    np.testing.assert_allclose(s.vdes, [0, 2 * math.pi * R / T, 0], atol=1e-15)
    np.testing.assert_allclose(s.ades, [-(2 * math.pi / T) ** 2 * R, 0, 0], atol=1e-15)


@pytest.mark.parametrize("kind", KINDS, ids=lambda k: type(k).__name__)
def test_periodic(kind):
    for t in (0.0, 0.37, 1.9, 3.3):
        a, b = rf.sample(kind, t), rf.sample(kind, t + kind.period)
        for f in ("pdes", "vdes", "ades", "wdes"):
            np.testing.assert_allclose(getattr(a, f), getattr(b, f), atol=1e-12)


@pytest.mark.parametrize("kind", KINDS + [rf.Figure8Diagonal(ramp=2.0)], ids=lambda k: f"{type(k).__name__}-{k.ramp}")
def test_derivatives_match_fd(kind):
    h = 1e-5
    for t in np.linspace(0.1, 7.9, 17):
        lo, mid, hi = rf.sample(kind, t - h), rf.sample(kind, t), rf.sample(kind, t + h)
        np.testing.assert_allclose((hi.pdes - lo.pdes) / (2 * h), mid.vdes, atol=1e-6)
        np.testing.assert_allclose((hi.vdes - lo.vdes) / (2 * h), mid.ades, atol=1e-6)


def _attitude(kind, t):
    s = rf.sample(kind, t)
    return lie.exp_so3(lie.shortest_rotation(s.ades + rf.GRAVITY * np.array([0, 0, 1.0])))


@pytest.mark.parametrize("kind", [rf.Figure8Diagonal(), rf.CircleHorizontal(), rf.LineBackForth()],
                         ids=lambda k: type(k).__name__)
def test_body_rate_matches_attitude_fd(kind):
    h = 1e-5
    for t in np.linspace(0.05, kind.period, 20):
        R0 = _attitude(kind, t)
        w_fd = (lie.log_so3(R0.T @ _attitude(kind, t + h)) - lie.log_so3(R0.T @ _attitude(kind, t - h))) / (2 * h)
        np.testing.assert_allclose(rf.sample(kind, t).wdes, w_fd, atol=1e-4)


def test_figure8_lap_is_four_seconds():
    assert rf.Figure8Diagonal().period == 4.0
    assert rf.lap_steps(rf.Figure8Diagonal(), 1 / 500) == 2000


def test_ramp_starts_at_rest_and_joins_curve():
    kind = rf.Figure8Diagonal(ramp=2.0)
    s0 = rf.sample(kind, 0.0)
    np.testing.assert_allclose(s0.vdes, 0, atol=1e-15)
    np.testing.assert_allclose(s0.ades, 0, atol=1e-15)
    np.testing.assert_allclose(s0.wdes, 0, atol=1e-15)
    plain = rf.Figure8Diagonal()
    for t in (2.0, 3.1, 10.0):
        a, b = rf.sample(kind, t), rf.sample(plain, t - 1.0)
        np.testing.assert_allclose(a.pdes, b.pdes, atol=1e-12)
        np.testing.assert_allclose(a.vdes, b.vdes, atol=1e-12)


def test_grid_matches_pointwise_samples():
    kind = rf.Figure8Diagonal(ramp=2.0)
    table = rf.sample_grid(kind, 50, 0.01)
    for k in (0, 13, 49):
        s = rf.sample(kind, k * 0.01)
        np.testing.assert_allclose(table.at(k).pdes, s.pdes, atol=1e-15)
        np.testing.assert_allclose(table.at(k).wdes, s.wdes, atol=1e-15)
    assert table.packed().shape == (50, 12)


def test_car_heading_rate_on_circle():
    kind = rf.CarCircle(period=12.0, radius=4.0)
    s = rf.sample(kind, 1.0)
    assert s.wdes.shape == (1,)
    assert s.wdes[0] == pytest.approx(2 * math.pi / 12.0)
