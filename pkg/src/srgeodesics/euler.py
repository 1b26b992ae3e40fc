"""Euler equations on sl2* and the reduced dynamics on the unit cylinder.

On gstar = 1 write xi = cos(theta), eta = sin(theta); then
Cas = zeta^2/2 + sin(2 theta) and the flow of 1/2 gstar becomes the
pendulum-like system theta' = -zeta, zeta' = 2 cos(2 theta).
"""
import enum
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import OutOfRange, QuadratureMismatch, StepSizeUnderflow
from .sl2 import Covector, casimir, gstar

CUT_TOL = 1e-12
DEFAULT_TOL = 1e-11


class RegimeTag(str, enum.Enum):
    BELOW_MINIMUM = "BelowMinimum"
    ELLIPTIC_EQUILIBRIUM = "EllipticEquilibrium"
    DISCRETE_SERIES = "DiscreteSeries"
    PARABOLIC = "Parabolic"
    COMPLEMENTARY_SERIES = "ComplementarySeries"
    SEPARATRIX = "Separatrix"
    PRINCIPAL_SERIES = "PrincipalSeries"


TORUS_REGIMES = (
    RegimeTag.DISCRETE_SERIES,
    RegimeTag.COMPLEMENTARY_SERIES,
    RegimeTag.PRINCIPAL_SERIES,
)


class Regime(NamedTuple):
    tag: RegimeTag
    c_value: float

    @property
    def casimir_periodic(self) -> bool:
        """False on the parabolic level C = 0 (no periodic Casimir orbits)."""
        return self.tag not in (RegimeTag.PARABOLIC, RegimeTag.BELOW_MINIMUM)

    @property
    def has_torus(self) -> bool:
        return self.tag in TORUS_REGIMES

    @property
    def hyperbolic(self) -> bool:
        return self.c_value > 0.0


class ReducedState(NamedTuple):
    theta: float
    zeta: float

    def lift(self) -> Covector:
        return Covector(math.cos(self.theta), math.sin(self.theta), self.zeta)


class PeriodPair(NamedTuple):
    t_cas: Optional[float]
    t_geod: Optional[float]


def euler_field(p) -> Covector:
    xi, eta, zeta = p
    return Covector(eta * zeta, -xi * zeta, 2.0 * (xi * xi - eta * eta))


def reduced_field(s) -> tuple:
    theta, zeta = s
    return (-zeta, 2.0 * math.cos(2.0 * theta))


def classify_regime(c: float) -> Regime:
    c = float(c)
    if abs(c + 1.0) <= CUT_TOL:
        tag = RegimeTag.ELLIPTIC_EQUILIBRIUM
    elif abs(c) <= CUT_TOL:
        tag = RegimeTag.PARABOLIC
    elif abs(c - 1.0) <= CUT_TOL:
        tag = RegimeTag.SEPARATRIX
    elif c < -1.0:
        tag = RegimeTag.BELOW_MINIMUM
    elif c < 0.0:
        tag = RegimeTag.DISCRETE_SERIES
    elif c < 1.0:
        tag = RegimeTag.COMPLEMENTARY_SERIES
    else:
        tag = RegimeTag.PRINCIPAL_SERIES
    return Regime(tag, c)


def initial_momentum(c: float) -> Covector:
    """Canonical point of the leaf Cas = c on gstar = 1: theta = -pi/4,
    zeta = +sqrt(2 (c + 1)), the zeta-maximum of the reduced orbit."""
    if c < -1.0:
        raise OutOfRange(f"no unit covector has Casimir {c} < -1")
    r = math.sqrt(0.5)
    return Covector(r, -r, math.sqrt(2.0 * (c + 1.0)))


def _jacobi_quarter_period(m: float, tol: float) -> float:
    """int_0^{pi/2} du / sqrt(1 - m sin^2 u) by adaptive quadrature, 0 <= m < 1.

    For m close to one the peak at u = pi/2 is resolved by the substitution
    sin(pi/2 - u) = sqrt((1-m)/m) sinh(w) on the upper half, which turns the
    near-singular integrand into a smooth one.
    """
    opts = dict(epsabs=0.0, epsrel=tol, limit=400)
    f = lambda u: 1.0 / math.sqrt(1.0 - m * math.sin(u) ** 2)
    if m < 0.9:
        return integrate.quad(f, 0.0, 0.5 * math.pi, **opts)[0]
    lower = integrate.quad(f, 0.0, 0.25 * math.pi, **opts)[0]
    kp2 = 1.0 - m
    w_max = math.asinh(math.sqrt(m / kp2) * math.sin(0.25 * math.pi))
    g = lambda w: 1.0 / math.sqrt(m - kp2 * math.sinh(w) ** 2)
    upper = integrate.quad(g, 0.0, w_max, **opts)[0]
    return lower + upper


def t_geod_quadrature(c: float, tol: float = DEFAULT_TOL) -> float:
    """Reduced period at Casimir level c from its period integral.

    With psi = 2 theta + pi/2 the period integral is
    2 int dpsi / sqrt(2 (c + cos psi)) over the allowed psi-range.  For
    |c| < 1 the turning points cos psi = -c are removed by
    sin(psi/2) = k sin(u), k^2 = (1 + c)/2; for c > 1 by u = psi/2.
    """
    if c <= -1.0:
        raise OutOfRange(f"t_geod needs c > -1, got {c}")
    if abs(c - 1.0) <= CUT_TOL:
        return math.inf
    if c < 1.0:
        return 2.0 * _jacobi_quarter_period(0.5 * (1.0 + c), tol)
    m = 2.0 / (c + 1.0)
    return 2.0 * math.sqrt(2.0) / math.sqrt(c + 1.0) * _jacobi_quarter_period(m, tol)


def t_geod_ode(c: float, tol: float = 1e-13, max_steps: int = 10_000_000) -> float:
    """Reduced period detected by integrating the Euler equations."""
    if c <= -1.0:
        raise OutOfRange(f"t_geod needs c > -1, got {c}")
    if abs(c - 1.0) <= CUT_TOL:
        return math.inf
    p0 = np.array(initial_momentum(c), dtype=float)
    winding = 1 if c > 1.0 else 0
    zmax = abs(p0[2]) + 2.0
    h_max = 0.5 / zmax
    t_max = 1e3 + 50.0 * abs(math.log(abs(c - 1.0))) + 10.0
    T, status = _kernels.reduced_period(p0, tol, tol, h_max, winding, t_max, max_steps)
    if status == _kernels.UNDERFLOW:
        raise StepSizeUnderflow(f"step underflow while detecting period at c={c}")
    if status != _kernels.OK:
        raise QuadratureMismatch(f"no return detected at c={c} (status {status})")
    return float(T)


def t_geod(c: float, tol: float = 1e-10, check: bool = True) -> float:
    """Minimal period of the reduced orbit at Casimir level c.

    Returns ``inf`` on the separatrix c = 1.  With ``check`` the quadrature
    value is compared against ODE period detection and a disagreement
    beyond ``10 tol`` (relative) raises :class:`QuadratureMismatch`.
    """
    T = t_geod_quadrature(c, min(tol, 1e-12))
    if check and math.isfinite(T):
        T_ode = t_geod_ode(c)
        if abs(T - T_ode) > 10.0 * tol * T:
            raise QuadratureMismatch(
                f"t_geod({c}): quadrature {T!r} vs ODE {T_ode!r}"
            )
    return T


def integrate_momentum(p0, t: float, tol: float = DEFAULT_TOL) -> Covector:
    y0 = np.zeros(7)
    y0[0] = y0[3] = 1.0
    y0[4:] = np.asarray(p0, dtype=float)
    y, status, _, _, _ = _kernels.integrate(
        y0, float(t), tol, tol, 0.0, False, True, False, 50_000_000
    )
    if status == _kernels.UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow integrating from {tuple(p0)}")
    if status != _kernels.OK:
        raise StepSizeUnderflow(f"integration did not finish (status {status})")
    return Covector(float(y[4]), float(y[5]), float(y[6]))


def invariants(p) -> tuple:
    return casimir(p), gstar(p)
