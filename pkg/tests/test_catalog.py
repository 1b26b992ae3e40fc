import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from srgeodesics.catalog import (
    ClosedGeodesicRecord,
    HyperbolicClass,
    IdentityClass,
    build_record,
    catalog,
    critical_geodesics,
    default_grid,
    find_rational_omega,
    spiraling_integer,
    torus_descriptor,
)
from srgeodesics.errors import NotClosed, OutOfRange, UndersampledPath, ValidationError
from srgeodesics.euler import RegimeTag, initial_momentum, integrate_momentum, t_geod
from srgeodesics.phase_flow import rotation_number

E = HyperbolicClass(math.e)


def circle(turns, n=400, close=True):
    t = np.linspace(0.0, 2 * math.pi * turns, n)
    return np.column_stack([np.cos(t), np.sin(t), np.zeros(n)])


@pytest.mark.parametrize("turns", [-3, -1, 0, 1, 2])
def test_spiraling_integer_circles(turns):
    assert spiraling_integer(circle(turns)) == turns


def test_spiraling_integer_rejects_bad_paths():
    with pytest.raises(UndersampledPath):
        spiraling_integer(circle(1)[:1])
    with pytest.raises(UndersampledPath):
        spiraling_integer(circle(5, n=8))
    with pytest.raises(NotClosed):
        spiraling_integer(circle(1.3))


@given(st.integers(-4, 4), st.floats(0.0, 6.0))
def test_spiraling_integer_rotation_invariant(turns, phi):
    pts = circle(turns, n=200)
    c, s = math.cos(phi), math.sin(phi)
    rot = pts @ np.array([[c, s, 0], [-s, c, 0], [0, 0, 1]])
    assert spiraling_integer(rot) == turns


def test_torus_descriptor():
    t = torus_descriptor(3.0, math.e)
    assert t.regime.tag is RegimeTag.PRINCIPAL_SERIES
    assert t.cls.l_gamma == pytest.approx(1.0)
    assert isinstance(torus_descriptor(-0.5, None).cls, IdentityClass)
    with pytest.raises(OutOfRange):
        torus_descriptor(1.0, math.e)
    with pytest.raises(ValidationError):
        torus_descriptor(0.5, 0.9)


def test_default_grid_resolves_ends():
    g = default_grid(1.05, 20.0, 50)
    assert g[0] == pytest.approx(1.05) and g[-1] == pytest.approx(20.0)
    g = default_grid(0.05, 0.95, 40)
    assert np.all(np.diff(g) > 0)
    assert g[0] == pytest.approx(0.05) and g[-1] == pytest.approx(0.95)


def test_find_rational_synthetic_linear():
    roots = find_rational_omega(None, 1, 3, (0.0, 2.0), omega_fn=lambda c: c, n_grid=50)
    cs = [c for c, _ in roots]
    assert cs == pytest.approx([1 / 3, 4 / 3], abs=1e-10)
    assert [P for _, P in roots] == [1, 4]


def test_find_rational_synthetic_crosses_one():
    roots = find_rational_omega(None, 1, 2, (0.1, 10.0), omega_fn=lambda c: 1.0 / c, n_grid=200)
    expected = sorted(1.0 / (n + 0.5) for n in range(10))
    assert [c for c, _ in roots] == pytest.approx(expected, abs=1e-9)


def test_find_rational_rejects_reducible():
    with pytest.raises(ValidationError):
        find_rational_omega(E, 2, 4, (1.5, 3.0), omega_fn=lambda c: c)
    with pytest.raises(ValidationError):
        find_rational_omega(E, 1, 2, (0.5, 1.5))


def test_find_rational_principal_roots_hit_target():
    roots = find_rational_omega(E, 1, 2, (1.05, 20.0), n_grid=60)
    assert roots
    for c, P in roots:
        assert rotation_number(c, math.e).omega_lift == pytest.approx(P / 2, abs=1e-8)


def test_build_record_principal():
    (c, P), *_ = find_rational_omega(E, 1, 2, (1.05, 20.0), n_grid=60)
    rec = build_record(c, P, 2, E)
    assert rec.length == pytest.approx(2 * t_geod(c, check=False), rel=1e-12)
    assert rec.closure_residual <= 1e-6
    assert rec.spiraling == 2 and abs(rec.winding) == 2
    assert not rec.anomaly
    d = rec.as_dict()
    assert sorted(d) == sorted(["c", "regime", "lambda", "p", "q", "length", "spiraling", "closure_residual"])
    assert d["regime"] == "PrincipalSeries"


def test_record_start_point_and_antipode():
    (c, P), *_ = find_rational_omega(E, 1, 2, (1.05, 20.0), n_grid=60)
    a = build_record(c, P, 2, E)
    p1 = integrate_momentum(initial_momentum(c), 0.4, tol=1e-13)
    b = build_record(c, P, 2, E, p0=p1)
    assert b.closure_residual <= 1e-6
    m = tuple(-x for x in initial_momentum(c))
    anti = build_record(c, P, 2, E, p0=m)
    assert anti.winding == -a.winding
    assert anti.length == a.length


def test_critical_geodesics():
    sep, eq = critical_geodesics(E)
    assert sep.length == pytest.approx(math.sqrt(2), abs=1e-6)
    assert eq.length == pytest.approx(2 * math.sqrt(2) * math.pi, abs=1e-6)
    assert eq.measured_length == pytest.approx(math.sqrt(2) * math.pi, abs=1e-6)
    assert eq.normalization == "psl2_half"
    sep3, _ = critical_geodesics(HyperbolicClass(3.0))
    assert sep3.length == pytest.approx(math.sqrt(2) * math.log(3.0), rel=1e-10)


def test_catalog_small_is_sorted_and_deterministic():
    recs = catalog(math.e, 2, [[1.05, 20.0], [0.05, 0.95]], n_grid=60)
    assert recs == catalog(math.e, 2, [[1.05, 20.0], [0.05, 0.95]], n_grid=60)
    keys = [(r.q, r.p, r.torus.c) for r in recs]
    assert keys == sorted(keys)
    for r in recs:
        assert isinstance(r, ClosedGeodesicRecord)
        expected = r.q if r.torus.regime.tag is RegimeTag.PRINCIPAL_SERIES else 0
        assert r.spiraling == expected
