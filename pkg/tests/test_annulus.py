import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srgeodesics.annulus import (
    GraphDomain,
    TwistMap,
    check_twist,
    convergence_orders,
    fixed_point_residual,
    invariance_defect,
    invariant_circle_ck,
    invariant_graph_newton,
    pb_fixed_point,
    s_map_twist,
    zero_graph,
)
from srgeodesics.birkhoff import kicked_perturbation, s_map
from srgeodesics.errors import DegenerateNormalDirection, NoSignChange, ValidationError

TWO_PI = 2 * math.pi


def standard_map(eps):
    fy = lambda x, y: y + eps * np.sin(TWO_PI * x)
    fx = lambda x, y: x + fy(x, y) - 0.5
    return TwistMap(fx, fy, 0.0, 1.0)


def circle_family(mult):
    def family(eps):
        A = lambda y, f: y + eps * np.sin(y) * (1.0 + f)
        B = lambda y, f: mult * f + eps * (np.cos(y) + f * f * np.sin(2.0 * y))
        return A, B
    return family


def cylinder_family(eps):
    L = np.diag([2.0, 0.5])

    def A(y, f):
        return np.column_stack([
            y[:, 0] + eps * np.sin(y[:, 0] + y[:, 1]) * (1 + f[:, 0]),
            y[:, 1] + 0.3 * eps * (1 - y[:, 1] ** 2) * np.cos(y[:, 0]),
        ])

    def B(y, f):
        g = np.column_stack([np.cos(y[:, 0]) + y[:, 1], y[:, 1] * np.sin(y[:, 0]) + f[:, 0] * f[:, 1]])
        return f @ L.T + eps * g

    return A, B


def test_twist_examples():
    shear = TwistMap(lambda x, y: x + y - 0.5, lambda x, y: y, 0.0, 1.0)
    assert check_twist(shear).ok
    bad = TwistMap(lambda x, y: x - y, lambda x, y: y, 0.0, 1.0)
    rep = check_twist(bad)
    assert not rep.ok and "twist" in rep.worst
    assert check_twist(standard_map(0.05)).ok


def test_twist_detects_area_change():
    m = TwistMap(lambda x, y: x + y - 0.5, lambda x, y: 1.01 * y, 0.0, 1.0)
    rep = check_twist(m)
    assert not rep.ok and rep.max_area_defect > 1e-3


def test_standard_map_fixed_points():
    m = standard_map(0.05)
    pts = pb_fixed_point(m)
    assert len(pts) == 2
    for (x, y), ref in zip(pts, [(0.0, 0.5), (0.5, 0.5)]):
        assert abs(x - ref[0]) <= 1e-10 and abs(y - ref[1]) <= 1e-10
        assert fixed_point_residual(m, x, y) <= 1e-12


def test_degenerate_line_of_fixed_points():
    m = TwistMap(lambda x, y: x + y - 0.5, lambda x, y: y, 0.0, 1.0)
    pts = pb_fixed_point(m, n_grid=32)
    assert len(pts) == 32
    assert all(abs(y - 0.5) <= 1e-12 and fixed_point_residual(m, x, y) <= 1e-12 for x, y in pts)


def test_no_sign_change():
    # a twist map whose y always increases has no fixed point
    m = TwistMap(lambda x, y: x + y - 0.5, lambda x, y: y + 0.01, 0.0, 1.0)
    with pytest.raises(NoSignChange):
        pb_fixed_point(m, check=False)


@settings(max_examples=15, deadline=None)
@given(st.floats(1e-4, 0.1), st.floats(0.0, 1.0))
def test_standard_map_residuals(eps, shift):
    fy = lambda x, y: y + eps * np.sin(TWO_PI * (x - shift))
    m = TwistMap(lambda x, y: x + fy(x, y) - 0.5, fy, 0.0, 1.0)
    pts = pb_fixed_point(m, n_grid=128)
    assert pts
    assert all(fixed_point_residual(m, x, y) <= 1e-12 for x, y in pts)


@pytest.mark.parametrize("k", [5, 50])
def test_s_map_fixed_points_near_circle(k):
    t0 = 1.0
    m = s_map_twist(s_map(k, t0, kicked_perturbation(1e-6, t0)))
    pts = pb_fixed_point(m)
    assert pts
    assert all(abs(y - k * math.pi / t0) <= 1e-5 for _, y in pts)


@given(st.integers(1, 6), st.floats(0.0, 6.2))
def test_circle_interpolation_exact_for_trig(mode, x):
    dom = GraphDomain.circle(32)
    F = np.sin(mode * dom.nodes[:, :1] + 0.3)
    it = dom.interpolator(np.array([[x]]))
    assert it.value(F)[0, 0] == pytest.approx(math.sin(mode * x + 0.3), abs=1e-12)
    assert it.gradient(F)[0, 0, 0] == pytest.approx(mode * math.cos(mode * x + 0.3), abs=1e-10)


def test_interpolation_at_nodes():
    dom = GraphDomain.cylinder(8, 9)
    F = np.random.default_rng(1).normal(size=(72, 2))
    assert np.allclose(dom.interpolator(dom.nodes).value(F), F, atol=1e-13)


@given(st.floats(0.0, 6.2), st.floats(-1.0, 1.0))
def test_cylinder_interpolation_smooth(x, y):
    dom = GraphDomain.cylinder(16, 20)
    f = lambda p: np.cos(p[:, 0]) * np.exp(p[:, 1])
    it = dom.interpolator(np.array([[x, y]]))
    F = f(dom.nodes)[:, None]
    assert it.value(F)[0, 0] == pytest.approx(math.cos(x) * math.exp(y), abs=1e-11)
    g = it.gradient(F)[0, 0]
    assert g == pytest.approx([-math.sin(x) * math.exp(y), math.cos(x) * math.exp(y)], abs=1e-8)


def test_odd_grid_rejected():
    with pytest.raises(ValidationError):
        GraphDomain.circle(31)


def test_graph_newton_trivial_at_zero():
    g = invariant_graph_newton(circle_family(2.0), 0.0, zero_graph(GraphDomain.circle(64)))
    assert g.residual == 0.0 and g.sup_norm() == 0.0


def test_graph_newton_circle_quadratic():
    fam = circle_family(2.0)
    g = invariant_graph_newton(fam, 0.2, zero_graph(GraphDomain.circle(256)), tol=1e-12)
    assert g.residual <= 1e-12
    # off-grid points also carry the interpolation error of the 256-node grid
    assert invariance_defect(fam, 0.2, g) <= 1e-9
    orders = convergence_orders(g.history)
    assert max(orders[:2]) >= 1.6
    # y = 0 and pi are fixed by A and f^2 sin 2y vanishes there: f = -eps cos y / (mult - 1)
    assert g(np.array([[0.0], [math.pi]]))[:, 0] == pytest.approx([-0.2, 0.2], abs=1e-12)


def test_graph_newton_cylinder():
    g = invariant_graph_newton(cylinder_family, 0.05, zero_graph(GraphDomain.cylinder(32, 32), 2), tol=1e-10)
    assert g.residual <= 1e-10
    assert invariance_defect(cylinder_family, 0.05, g) <= 1e-8
    assert convergence_orders(g.history)[-1] >= 1.8


def test_degenerate_normal_direction():
    fam = circle_family(1.0)
    with pytest.raises(DegenerateNormalDirection):
        invariant_graph_newton(fam, 0.1, zero_graph(GraphDomain.circle(64)))


def test_s_map_circle_zero_perturbation():
    g = invariant_circle_ck(5, 1.0, lambda e: kicked_perturbation(e, 1.0), 0.0)
    assert g.sup_norm() == 0.0 and g.residual == 0.0


def test_s_map_circle_is_normally_degenerate():
    # every point of c_k^0 is fixed, so B'_0 = 1 and the graph equation is singular
    with pytest.raises(DegenerateNormalDirection):
        invariant_circle_ck(5, 1.0, lambda e: kicked_perturbation(e, 1.0), 1e-4)


def test_convergence_orders():
    assert convergence_orders([1e-1, 1e-2, 1e-4, 1e-8]) == pytest.approx([2.0, 2.0])
