import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srgeodesics.errors import NoPeriodicOrbit, OutOfRange, UnwrapAmbiguity, ValidationError
from srgeodesics.euler import initial_momentum, integrate_momentum
from srgeodesics.phase_flow import (
    FORMULA,
    PSL2,
    FrequencyPoint,
    PhaseState,
    casimir_flow,
    casimir_return_time,
    commutator_defect,
    cos_alpha,
    geodesic_flow,
    omega_lift_scan,
    rotation_number,
    t_cas,
)
from srgeodesics.sl2 import Covector, Psl2Element, casimir, expm_traceless, gstar, psl2_distance

R2 = math.sqrt(0.5)
ID = Psl2Element.identity()


def state(c, g=ID):
    return PhaseState(g, initial_momentum(c))


def test_casimir_flow_examples():
    s = state(-0.5, Psl2Element.from_matrix(np.array([[2.0, 1.0], [1.0, 1.0]])))
    assert casimir_flow(s, 0.0) == s
    assert psl2_distance(casimir_flow(s, 2 * math.pi).g, s.g) < 1e-12
    r = casimir_flow(PhaseState(ID, Covector(0.0, 0.0, 1.0)), 1.0)
    assert np.allclose(r.g.matrix(), np.diag([math.e, 1 / math.e]), rtol=1e-15)


@given(st.floats(-0.99, 5.0), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_casimir_flow_is_a_flow(c, t, u):
    s = state(c, Psl2Element.from_matrix(np.array([[1.0, 0.5], [0.2, 1.1]])))
    a = casimir_flow(s, t + u).g
    b = casimir_flow(casimir_flow(s, t), u).g
    assert psl2_distance(a, b) <= 1e-12 * max(1.0, np.abs(a.matrix()).max()) ** 2


def test_t_cas_values():
    assert t_cas(0.5, math.e) == pytest.approx(1.0, rel=1e-15)
    assert t_cas(-0.5) == pytest.approx(2 * math.pi, rel=1e-15)
    assert t_cas(-0.5, normalization=PSL2) == pytest.approx(math.pi, rel=1e-15)
    with pytest.raises(NoPeriodicOrbit):
        t_cas(0.0, math.e)
    with pytest.raises(ValidationError):
        t_cas(0.5)


@given(st.floats(1e-3, 100.0), st.floats(1.01, 50.0))
def test_t_cas_doubles_with_lambda_squared(c, lam):
    assert t_cas(c, lam * lam) == pytest.approx(2 * t_cas(c, lam), rel=1e-15)


def test_casimir_return_times():
    r = casimir_return_time(0.5, math.e)
    assert r.measured == pytest.approx(1.0, abs=1e-8)
    assert r.normalization == "formula"
    r = casimir_return_time(-0.5)
    assert r.measured == pytest.approx(math.pi, abs=1e-8)
    assert r.normalization == "psl2_half"
    assert r.formula == pytest.approx(2 * math.pi)


def test_geodesic_flow_at_saddle():
    lam = 3.0
    p = Covector(R2, R2, 0.0)
    T = math.sqrt(2) * math.log(lam)
    s = geodesic_flow(PhaseState(ID, p), T)
    assert np.allclose(s.p, p, atol=1e-14)
    ref = expm_traceless(np.array([[0.0, 1.0], [1.0, 0.0]]), T / math.sqrt(2))
    assert np.abs(s.g.matrix() - ref).max() < 1e-9
    assert np.sort(np.linalg.eigvals(s.g.matrix()).real) == pytest.approx([1 / lam, lam], rel=1e-9)


def test_geodesic_flow_at_equilibrium():
    p = Covector(R2, -R2, 0.0)
    s = geodesic_flow(PhaseState(ID, p), math.sqrt(2) * math.pi)
    assert psl2_distance(s.g, ID) < 1e-9
    half = geodesic_flow(PhaseState(ID, p), math.pi / math.sqrt(2))
    assert psl2_distance(half.g, ID) > 0.5


def test_geodesic_flow_rejects_non_unit():
    with pytest.raises(ValidationError):
        geodesic_flow(PhaseState(ID, Covector(2.0, 0.0, 0.0)), 1.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.95, 6.0).filter(lambda c: abs(c - 1) > 1e-2), st.floats(0.1, 8.0))
def test_geodesic_flow_reversible(c, t):
    s = state(c)
    back = geodesic_flow(geodesic_flow(s, t), -t)
    assert psl2_distance(back.g, s.g) < 1e-8
    assert np.abs(np.subtract(back.p, s.p)).max() < 1e-8


@pytest.mark.parametrize("c", [-0.5, 0.5, 5.0])
def test_geodesic_flow_conservation(c):
    s = geodesic_flow(state(c), 100.0)
    assert abs(casimir(s.p) - c) <= 1e-8
    assert abs(gstar(s.p) - 1.0) <= 1e-8


def test_momentum_matches_euler_integration():
    s = geodesic_flow(state(0.3), 3.7)
    assert np.allclose(s.p, integrate_momentum(initial_momentum(0.3), 3.7), atol=1e-9)


def test_cos_alpha():
    assert cos_alpha((R2, R2, 0.0)) == pytest.approx(0.5)
    assert cos_alpha((1.0, 0.0, 3.0)) == 0.0
    assert cos_alpha((R2, -R2, 2.0)) == pytest.approx(0.5 / math.sqrt(2))


def test_commutator_defect_trivial():
    s = state(0.5)
    assert commutator_defect(s, 0.0, 3.0) < 1e-13
    assert commutator_defect(s, 3.0, 0.0) < 1e-13
    assert commutator_defect(PhaseState(ID, Covector(R2, -R2, 0.0)), 4.0, 7.0) <= 1e-10


@settings(max_examples=8, deadline=None)
@given(st.sampled_from([-0.5, 0.5, 5.0]), st.floats(-10, 10), st.floats(-10, 10))
def test_commutator_defect_small(c, t, u):
    assert commutator_defect(state(c), t, u) <= 1e-7


def test_rotation_number_holonomy_consistency():
    tol = 1e-9
    fp = rotation_number(5.0, math.e**2, tol)
    assert isinstance(fp, FrequencyPoint)
    assert fp.holonomy_residual <= tol
    assert fp.omega_mod1 == pytest.approx(fp.omega_lift % 1.0, abs=1e-12)


@pytest.mark.parametrize("c", [-0.5, 0.5, 3.0])
def test_rotation_number_independent_of_start(c):
    lam = math.e**2
    a = rotation_number(c, lam)
    p1 = integrate_momentum(initial_momentum(c), 0.37, tol=1e-13)
    b = rotation_number(c, lam, p0=p1)
    d = abs(a.omega_mod1 - b.omega_mod1)
    assert min(d, 1 - d) < 1e-7


def test_rotation_number_normalizations():
    a = rotation_number(-0.5, normalization=PSL2)
    b = rotation_number(-0.5, normalization=FORMULA)
    assert a.normalization == PSL2 and b.normalization == FORMULA
    assert a.t_cas == pytest.approx(0.5 * b.t_cas)


def test_rotation_number_rejects_non_torus():
    for c in (0.0, 1.0, -1.0):
        with pytest.raises(OutOfRange):
            rotation_number(c, math.e)


def test_large_c_lift_tends_to_zero():
    lifts = [rotation_number(c, math.e**2).omega_lift for c in (1e2, 1e3, 1e4)]
    assert abs(lifts[2]) < abs(lifts[1]) < abs(lifts[0])


def test_near_separatrix_lift_grows():
    lam = math.e**2
    for sign in (1.0, -1.0):
        far = rotation_number(1 + sign * 1e-3, lam).omega_lift
        near = rotation_number(1 + sign * 1e-6, lam).omega_lift
        assert abs(near) > abs(far)


def synthetic(value):
    def fn(c):
        return FrequencyPoint(c, value % 1.0, value, 1.0, 1.0, 0.0)
    return fn


def test_scan_constant_synthetic():
    pts = omega_lift_scan([1.5, 2.0, 3.0, 7.0], omega_fn=synthetic(0.3))
    assert [p.omega_lift for p in pts] == [0.3] * 4


def test_scan_unwraps_linear_synthetic():
    fn = lambda c: FrequencyPoint(c, (0.4 * c) % 1.0, 0.4 * c, 1.0, 1.0, 0.0)
    pts = omega_lift_scan(np.linspace(2.0, 12.0, 26), omega_fn=fn)
    assert np.allclose([p.omega_lift for p in pts], 0.4 * np.linspace(2.0, 12.0, 26), atol=1e-12)


def test_scan_ambiguity_raised():
    # a step of exactly 1/2 on an elliptic level cannot be resolved
    fn = lambda c: FrequencyPoint(c, 0.0 if c < -0.5 else 0.5, 0.0, 1.0, 1.0, 0.0)
    with pytest.raises(UnwrapAmbiguity):
        omega_lift_scan([-0.9, -0.1], omega_fn=fn, max_depth=3)


def test_scan_rejects_bad_grids():
    with pytest.raises(ValidationError):
        omega_lift_scan([2.0, 1.5], omega_fn=synthetic(0.1))
    with pytest.raises(ValidationError):
        omega_lift_scan([0.5, 1.0 + 1e-12], omega_fn=synthetic(0.1))


def test_scan_large_c_monotone_to_zero():
    grid = np.geomspace(10.0, 1e4, 12)
    lifts = np.array([p.omega_lift for p in omega_lift_scan(grid, math.e**2)])
    assert np.all(np.diff(np.abs(lifts)) < 0)
    assert abs(lifts[-1]) < 1e-2 * abs(lifts[0])


def test_scan_near_separatrix_decreasing():
    grid = 1.0 + np.geomspace(1e-6, 1.0, 10)
    lifts = np.array([p.omega_lift for p in omega_lift_scan(grid, math.e**2)])
    assert np.all(np.diff(lifts) < 0)
    assert lifts[0] > 1.0
