import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ellipk

from srgeodesics.errors import OutOfRange
from srgeodesics.euler import (
    RegimeTag,
    ReducedState,
    classify_regime,
    euler_field,
    initial_momentum,
    integrate_momentum,
    invariants,
    reduced_field,
    t_geod,
    t_geod_ode,
    t_geod_quadrature,
)
from srgeodesics.sl2 import casimir, lie_poisson_bracket

R2 = math.sqrt(0.5)


def rk4_reference(p0, t, n):
    f = lambda p: np.array(euler_field(p))
    h = t / n
    p = np.array(p0, dtype=float)
    for _ in range(n):
        k1 = f(p)
        k2 = f(p + 0.5 * h * k1)
        k3 = f(p + 0.5 * h * k2)
        k4 = f(p + h * k3)
        p = p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def test_euler_field_examples():
    assert euler_field((1.0, 0.0, 0.0)) == (0.0, 0.0, 2.0)
    assert euler_field((0.0, 0.0, 5.0)) == (0.0, 0.0, 0.0)
    assert np.allclose(euler_field((R2, R2, 0.0)), 0.0, atol=1e-15)


@given(st.tuples(*[st.floats(-2, 2)] * 3))
def test_euler_field_is_bracket_with_half_gstar(p):
    xi, eta, _ = p
    dh = (xi, eta, 0.0)
    ref = [lie_poisson_bracket(e, dh, p) for e in np.eye(3)]
    assert np.allclose(euler_field(p), ref, atol=1e-12)


def test_reduced_field_examples():
    assert np.allclose(reduced_field((-0.25 * math.pi, 0.0)), (0.0, 0.0), atol=1e-15)
    assert reduced_field((0.0, 1.0)) == (-1.0, 2.0)
    assert np.allclose(reduced_field((0.25 * math.pi, 0.0)), (0.0, 0.0), atol=1e-15)


@pytest.mark.parametrize("theta", np.linspace(0.1, 6.0, 7))
@pytest.mark.parametrize("zeta", [-1.3, 0.0, 0.8])
def test_reduced_field_is_pushforward(theta, zeta):
    p = np.array(ReducedState(theta, zeta).lift())
    v = np.array(euler_field(p))
    h = 1e-6
    q = p + h * v
    dtheta = (math.atan2(q[1], q[0]) - theta + math.pi) % (2 * math.pi) - math.pi
    assert np.allclose((dtheta / h, v[2]), reduced_field((theta, zeta)), atol=1e-5)


@given(st.floats(0.0, 6.3), st.floats(-3.0, 3.0))
def test_reduced_state_casimir(theta, zeta):
    c = casimir(ReducedState(theta, zeta).lift())
    assert c == pytest.approx(0.5 * zeta**2 + math.sin(2 * theta), abs=1e-13)


@pytest.mark.parametrize(
    "c, tag",
    [
        (3.0, RegimeTag.PRINCIPAL_SERIES),
        (-0.5, RegimeTag.DISCRETE_SERIES),
        (0.0, RegimeTag.PARABOLIC),
        (0.5, RegimeTag.COMPLEMENTARY_SERIES),
        (1.0, RegimeTag.SEPARATRIX),
        (1.0 + 5e-13, RegimeTag.SEPARATRIX),
        (-1.0, RegimeTag.ELLIPTIC_EQUILIBRIUM),
        (-2.0, RegimeTag.BELOW_MINIMUM),
    ],
)
def test_classify_regime(c, tag):
    r = classify_regime(c)
    assert r.tag is tag
    assert r.casimir_periodic == (tag not in (RegimeTag.PARABOLIC, RegimeTag.BELOW_MINIMUM))


def test_initial_momentum():
    assert np.allclose(initial_momentum(-1.0), (R2, -R2, 0.0))
    assert np.allclose(initial_momentum(1.0), (R2, -R2, 2.0))
    assert np.allclose(initial_momentum(0.0), (R2, -R2, math.sqrt(2)))
    with pytest.raises(OutOfRange):
        initial_momentum(-1.5)


@given(st.floats(-1.0, 50.0))
def test_initial_momentum_on_leaf(c):
    cas, g = invariants(initial_momentum(c))
    assert g == pytest.approx(1.0, abs=1e-15)
    assert cas == pytest.approx(c, abs=1e-12 * max(1.0, abs(c)))


def elliptic_oracle(c):
    # same period integral written with the complete elliptic integral K(m)
    if c < 1.0:
        return 2.0 * ellipk(0.5 * (1.0 + c))
    return 2.0 * math.sqrt(2.0 / (c + 1.0)) * ellipk(2.0 / (c + 1.0))


@pytest.mark.parametrize("c", [-0.999999, -0.9, -0.3, 0.0, 0.4, 0.99, 1.01, 2.0, 40.0, 1e4])
def test_t_geod_matches_elliptic_integral(c):
    assert t_geod_quadrature(c) == pytest.approx(elliptic_oracle(c), rel=1e-11)


def test_t_geod_limits():
    assert t_geod(-1.0 + 1e-8, check=False) == pytest.approx(math.pi, rel=1e-8)
    assert t_geod(1.0) == math.inf
    assert t_geod(1e6, check=False) == pytest.approx(math.pi * math.sqrt(2) / 1e3, rel=1e-2)
    with pytest.raises(OutOfRange):
        t_geod(-1.0)


def test_t_geod_scales_like_inverse_sqrt():
    r = [t_geod(c, check=False) * math.sqrt(c) for c in (1e6, 1e7, 1e8)]
    assert abs(r[0] - r[2]) / r[2] < 1e-2


@pytest.mark.parametrize("c", [-0.99, -0.5, -1e-3, 0.3, 0.999, 1.001, 3.0, 1e3])
def test_t_geod_quadrature_vs_ode(c):
    q = t_geod_quadrature(c)
    assert t_geod_ode(c) == pytest.approx(q, rel=1e-8)


def test_integrate_momentum_equilibrium():
    p0 = (R2, R2, 0.0)
    assert np.allclose(integrate_momentum(p0, 7.5), p0, atol=1e-14)


def test_integrate_momentum_returns_after_period():
    c = -1.0 + 1e-4
    p0 = initial_momentum(c)
    p = integrate_momentum(p0, t_geod(c), tol=1e-13)
    assert np.abs(np.subtract(p, p0)).max() < 1e-8


def test_integrate_momentum_richardson_oracle():
    p0 = (1.0, 0.0, 0.0)
    a = rk4_reference(p0, 0.1, 200)
    b = rk4_reference(p0, 0.1, 400)
    ref = b + (b - a) / 15.0
    assert np.abs(np.subtract(integrate_momentum(p0, 0.1, tol=1e-13), ref)).max() < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.95, 8.0).filter(lambda c: abs(c - 1) > 1e-2))
def test_invariant_drift(c):
    p0 = initial_momentum(c)
    p = integrate_momentum(p0, 100.0)
    cas, g = invariants(p)
    assert abs(cas - c) <= 1e-9 * max(1.0, abs(c))
    assert abs(g - 1.0) <= 1e-9
