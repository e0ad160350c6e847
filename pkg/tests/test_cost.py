import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mgaps import cost
from mgaps.oracles import FdSpec, fd_jacobian, relative_error
from mgaps.reference import RefSample

G = 9.81


def ref3(p=(0, 0, 1)):
    return RefSample(np.array(p, float), np.zeros(3), np.zeros(3), np.zeros(3))


def quad_state(p=(0, 0, 1)):
    x = np.zeros(15)
    x[3:6] = p
    return x


def test_perfect_tracking_hover():
    c, _, _ = cost.quad_cost(quad_state(), [G, 0, 0, 0], ref3(), dt=0.002)
    assert c == pytest.approx(0.002 * 1e-8 * G**2, rel=1e-12)
    assert c == pytest.approx(1.9248e-9, rel=1e-4)


def test_all_zero_is_zero():
    c, fx, fu = cost.quad_cost(quad_state(), np.zeros(4), ref3())
    assert c == 0.0 and not fx.any() and not fu.any()


def test_integral_error_not_penalized():
    x = quad_state()
    x[0:3] = [1.0, 2.0, 3.0]
    c, fx, _ = cost.quad_cost(x, np.zeros(4), ref3())
    assert c == 0.0 and not fx[0:3].any()


def test_quad_gradient_matches_fd(rng):
    x = rng.normal(size=15)
    u = rng.normal(size=4) + [G, 0, 0, 0]
    ref = RefSample(*(rng.normal(size=3) for _ in range(4)))
    _, fx, fu = cost.quad_cost(x, u, ref)
    assert relative_error(fx, fd_jacobian(lambda q: cost.quad_cost(q, u, ref)[0], x)) < 1e-8
    # quadratic in u with tiny weights; central differences are exact at any step,
    # so a unit step keeps roundoff from the dominant position term negligible
    assert relative_error(fu, fd_jacobian(lambda q: cost.quad_cost(x, q, ref)[0], u, FdSpec(h=1.0))) < 1e-8


def test_car_examples():
    ref = RefSample(np.zeros(2), np.array([1.0, 0]), np.zeros(2), np.zeros(1))
    x = np.zeros(7)
    assert cost.car_cost(x, [1.0, 0.0], ref)[0] == 0.0
    x[0] = 1.0
    assert cost.car_cost(x, [1.0, 0.0], ref)[0] == 1.0


def test_car_gradient_matches_fd(rng):
    x = rng.normal(size=7)
    u = rng.normal(size=2)
    ref = RefSample(rng.normal(size=2), rng.normal(size=2), rng.normal(size=2), rng.normal(size=1))
    _, fx, fu = cost.car_cost(x, u, ref)
    assert relative_error(fx, fd_jacobian(lambda q: cost.car_cost(q, u, ref)[0], x, FdSpec(h=1e-4))) < 1e-8
    assert relative_error(fu, fd_jacobian(lambda q: cost.car_cost(x, q, ref)[0], u, FdSpec(h=1e-4))) < 1e-8


finite = st.floats(-1e3, 1e3)


@given(st.lists(finite, min_size=15, max_size=15), st.lists(finite, min_size=4, max_size=4),
       st.lists(finite, min_size=3, max_size=3))
def test_quad_cost_nonnegative(x, u, p):
    assert cost.quad_cost(np.array(x), np.array(u), ref3(p))[0] >= 0.0


@given(st.lists(finite, min_size=7, max_size=7), st.lists(finite, min_size=2, max_size=2))
def test_car_cost_nonnegative_and_zero_iff_terms_vanish(x, u):
    ref = RefSample(np.zeros(2), np.array([1.0, 0.0]), np.zeros(2), np.zeros(1))
    x = np.array(x)
    c = cost.car_cost(x, u, ref)[0]
    assert c >= 0.0
    vanish = not x[0:2].any() and x[5] == 0.0 and u[1] == 0.0
    assert (c == 0.0) == vanish or c < 1e-300


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        cost.QuadCostWeights(w_p=-1.0)
