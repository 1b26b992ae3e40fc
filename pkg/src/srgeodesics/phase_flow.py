"""Coupled flows on PSL2(R) x sl2*.

Conventions.  The geodesic flow moves the group element by the
right-invariant field g' = (xi X + eta Y) g, with the momentum following
the Euler equations.  The Casimir flow is then (g, p) -> (exp(t A(p)) g, p):
along a geodesic, A(p(t)) = Phi(t) A(p0) Phi(t)^-1, so these two flows
commute.  (Right multiplication by exp(t A(p)) would not commute with this
geodesic flow.)

Rotation numbers are read off the group holonomy over one reduced period:
g(T) = exp(s A(p0)) g(0) and omega = s / T_cas.
"""
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize

from . import _kernels
from .errors import (
    InvariantDrift,
    NoPeriodicOrbit,
    OutOfRange,
    StepSizeUnderflow,
    UnwrapAmbiguity,
    ValidationError,
)
from .euler import (
    CUT_TOL,
    DEFAULT_TOL,
    RegimeTag,
    classify_regime,
    initial_momentum,
    t_geod,
)
from .sl2 import (
    Covector,
    Psl2Element,
    a_matrix,
    algebra_matrix,
    casimir,
    expm_traceless,
    gstar,
    log_in_subgroup,
    subgroup_residual,
)

PSL2 = "psl2"
FORMULA = "formula"


class PhaseState(NamedTuple):
    g: Psl2Element
    p: Covector


class FrequencyPoint(NamedTuple):
    c: float
    omega_mod1: float
    omega_lift: float
    t_cas: float
    t_geod: float
    holonomy_residual: float
    normalization: str = PSL2
    s: float = 0.0


class CasimirReturn(NamedTuple):
    measured: float
    formula: float
    normalization: str  # "formula" or "psl2_half" when measured = formula / 2


def _state_vector(s: PhaseState) -> np.ndarray:
    y = np.empty(7)
    y[:4] = s.g
    y[4:] = s.p
    return y


def casimir_flow(s: PhaseState, t: float) -> PhaseState:
    E = expm_traceless(algebra_matrix(a_matrix(s.p)), t)
    return PhaseState(Psl2Element.from_matrix(E @ s.g.matrix()), s.p)


def t_cas(c: float, lam: Optional[float] = None, normalization: str = FORMULA) -> float:
    """Casimir period: log(lam)/sqrt(2c) for c > 0, 2 pi/sqrt(-2c) for c < 0.

    ``normalization="psl2"`` halves the elliptic value, giving the minimal
    return time in PSL2 where -Id = Id.
    """
    if abs(c) <= CUT_TOL:
        raise NoPeriodicOrbit("the Casimir flow is parabolic at C = 0")
    if c > 0.0:
        if lam is None or not lam > 1.0:
            raise ValidationError(f"hyperbolic class needs lambda > 1, got {lam}")
        return math.log(lam) / math.sqrt(2.0 * c)
    if c < -1.0 - CUT_TOL:
        raise OutOfRange(f"no unit covector has Casimir {c}")
    period = 2.0 * math.pi / math.sqrt(-2.0 * c)
    return 0.5 * period if normalization == PSL2 else period


def casimir_return_time(c: float, lam: Optional[float] = None, tol: float = 1e-13) -> CasimirReturn:
    """Smallest t > 0 at which the Casimir orbit through the canonical
    point of level c closes: exp(t A) conjugate to diag(lam, 1/lam) for
    c > 0, exp(t A) = +-Id in PSL2 for c < 0."""
    formula = t_cas(c, lam, FORMULA)
    A = algebra_matrix(a_matrix(initial_momentum(c)))
    if c > 0.0:
        target = 0.5 * (lam + 1.0 / lam)
        f = lambda t: 0.5 * abs(np.trace(expm_traceless(A, t))) - target
        hi = 1.0
        while f(hi) < 0.0:
            hi *= 2.0
        t = optimize.brentq(f, 0.0, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
        return CasimirReturn(t, formula, "formula")
    mm = float(np.sum(A * A))

    def off_identity(t):
        E = expm_traceless(A, t)
        return float(np.sum((E - 0.5 * np.trace(E) * np.eye(2)) * A)) / mm

    # first sign change of the sine component after t = 0
    dt = formula / 64.0
    t0, f0 = dt, off_identity(dt)
    while True:
        t1 = t0 + dt
        f1 = off_identity(t1)
        if f0 * f1 <= 0.0:
            break
        t0, f0 = t1, f1
    t = optimize.brentq(off_identity, t0, t1, xtol=tol, rtol=4 * np.finfo(float).eps)
    tag = "psl2_half" if abs(2.0 * t - formula) < abs(t - formula) else "formula"
    return CasimirReturn(t, formula, tag)


def _integrate(y0, t, tol, h_max=0.0, record=False, max_steps=50_000_000):
    y, status, _, ts, ys = _kernels.integrate(
        y0, float(t), tol, tol, h_max, True, True, record, max_steps
    )
    if status == _kernels.UNDERFLOW:
        raise StepSizeUnderflow("step size underflow in the geodesic flow")
    if status != _kernels.OK:
        raise StepSizeUnderflow(f"geodesic flow did not finish (status {status})")
    return y, ts, ys


def geodesic_flow(s: PhaseState, t: float, tol: float = DEFAULT_TOL) -> PhaseState:
    n0 = gstar(s.p)
    if abs(n0 - 1.0) > 1e-9:
        raise ValidationError(f"momentum is off the unit co-sphere: gstar = {n0!r}")
    c0 = casimir(s.p)
    y, _, _ = _integrate(_state_vector(s), t, tol)
    p = Covector(float(y[4]), float(y[5]), float(y[6]))
    drift = max(abs(casimir(p) - c0), abs(gstar(p) - n0))
    if drift > 10.0 * max(tol, 1e-15) * max(1.0, abs(c0)):
        raise InvariantDrift(f"invariant drift {drift:.2e} along the geodesic flow")
    return PhaseState(Psl2Element.from_matrix(y[:4].reshape(2, 2)), p)


def geodesic_samples(p0, t: float, tol: float = DEFAULT_TOL, max_angle: float = 0.5):
    """Accepted integrator states along the geodesic from (Id, p0).

    Steps are capped so that the horizontal angle moves by at most
    ``max_angle`` per sample.  Returns ``(ts, ys)`` with ys rows
    ``[a, b, c, d, xi, eta, zeta]``.
    """
    y0 = np.zeros(7)
    y0[0] = y0[3] = 1.0
    y0[4:] = np.asarray(p0, dtype=float)
    zmax = math.sqrt(max(0.0, 2.0 * (casimir(p0) + 1.0))) + 1e-3
    _, ts, ys = _integrate(y0, t, tol, h_max=max_angle / zmax, record=True)
    return ts, ys


def cos_alpha(p) -> float:
    xi, eta, zeta = p
    return abs(xi * eta) / math.sqrt(1.0 + 0.25 * zeta * zeta)


def _relative_matrix_gap(G1: np.ndarray, G2: np.ndarray) -> float:
    scale = max(1.0, float(np.abs(G1).max()), float(np.abs(G2).max()))
    return min(float(np.abs(G1 - G2).max()), float(np.abs(G1 + G2).max())) / scale


def commutator_defect(s: PhaseState, t: float, u: float, tol: float = DEFAULT_TOL) -> float:
    """Sup-norm gap between the two orders of applying the flows.

    The group part is measured relative to the size of the matrices
    (exp(u A) grows like exp(u sqrt(2C))).
    """
    a = geodesic_flow(casimir_flow(s, u), t, tol)
    b = casimir_flow(geodesic_flow(s, t, tol), u)
    dg = _relative_matrix_gap(a.g.matrix(), b.g.matrix())
    dp = float(np.abs(np.subtract(a.p, b.p)).max())
    return max(dg, dp)


def holonomy(c: float, tol: float = DEFAULT_TOL, p0=None):
    """Group displacement over one reduced period, starting from g = Id.

    Returns ``(h, p0, p_end, T)`` with h the 2x2 SL2 matrix reached by
    continuous integration.
    """
    if p0 is None:
        p0 = initial_momentum(c)
    T = t_geod(c, check=False)
    y0 = np.zeros(7)
    y0[0] = y0[3] = 1.0
    y0[4:] = np.asarray(p0, dtype=float)
    y, _, _ = _integrate(y0, T, tol)
    return y[:4].reshape(2, 2), Covector(*p0), Covector(*map(float, y[4:])), T


def _integrator_tol(tol: float) -> float:
    return min(max(1e-2 * tol, 1e-14), 1e-11)


def rotation_number(
    c: float,
    lam: Optional[float] = None,
    tol: float = 1e-9,
    p0=None,
    normalization: str = PSL2,
) -> FrequencyPoint:
    """Rotation number of the geodesic flow on the invariant torus at level c.

    For c > 0 the returned ``omega_lift`` is the natural real lift
    s / T_cas; for c < 0 it equals ``omega_mod1`` (lifts come from
    :func:`omega_lift_scan`).
    """
    reg = classify_regime(c)
    if not reg.has_torus:
        raise OutOfRange(f"C = {c} ({reg.tag.value}) carries no invariant torus")
    if p0 is not None and abs(casimir(p0) - c) > 1e-9:
        raise ValidationError("p0 does not lie on the requested Casimir level")
    h, p0, p_end, T = holonomy(c, _integrator_tol(tol), p0)
    A0 = a_matrix(p0)
    projective = normalization == PSL2 or c > 0.0
    s = log_in_subgroup(h, A0, tol=max(tol, 1e3 * float(np.abs(np.subtract(p_end, p0)).max())),
                        projective=projective)
    res = subgroup_residual(h, A0, s)
    tc = t_cas(c, lam, normalization)
    lift = s / tc
    frac = lift - math.floor(lift)
    if frac >= 1.0:
        frac = 0.0
    return FrequencyPoint(float(c), frac, lift, tc, T, res, normalization, s)


def _nearest_lift(frac: float, ref: float) -> float:
    return frac + round(ref - frac)


def omega_lift_scan(
    c_grid: Sequence[float],
    lam: Optional[float] = None,
    tol: float = 1e-9,
    normalization: str = PSL2,
    max_depth: int = 16,
    omega_fn=None,
) -> list:
    """Continuous lift of the rotation number along a sorted grid.

    Each regime interval is unwrapped separately.  Between grid points the
    interval is bisected while the real lift s / T_cas (hyperbolic levels)
    moves by 1/2 or more, or, on elliptic levels, while the wrapped
    increment exceeds 1/4.  Principal and
    complementary series are anchored at their natural lift s / T_cas
    (tending to 0 as C -> infinity and C -> 0+); the discrete series is
    anchored so that the point nearest C = 0 lies in (-1/2, 1/2].

    ``omega_fn(c) -> FrequencyPoint`` replaces :func:`rotation_number`
    (used for synthetic inputs).
    """
    grid = [float(c) for c in c_grid]
    if not grid:
        raise ValidationError("empty C grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("C grid must be strictly increasing")
    for c in grid:
        if min(abs(c + 1.0), abs(c), abs(c - 1.0)) < 1e-9:
            raise ValidationError(f"grid point {c} is within 1e-9 of a critical level")
    if omega_fn is None:
        omega_fn = lambda c: rotation_number(c, lam, tol, normalization=normalization)

    segments = []
    for c in grid:
        tag = classify_regime(c).tag
        if segments and segments[-1][0] == tag:
            segments[-1][1].append(c)
        else:
            segments.append((tag, [c]))

    out = []
    for tag, cs in segments:
        pts = [omega_fn(c) for c in cs]
        lifts = [pts[0].omega_mod1]
        for i in range(1, len(pts)):
            lifts.append(
                _unwrap_between(omega_fn, cs[i - 1], pts[i - 1], lifts[-1], cs[i], pts[i], max_depth)
            )
        lifts = np.array(lifts)
        if tag == RegimeTag.COMPLEMENTARY_SERIES:
            anchor = 0
            natural = pts[anchor].omega_lift
        elif tag == RegimeTag.PRINCIPAL_SERIES:
            anchor = len(cs) - 1
            natural = pts[anchor].omega_lift
        else:
            anchor = len(cs) - 1 if cs[-1] < 0.0 else 0
            natural = pts[anchor].omega_mod1 - round(pts[anchor].omega_mod1)
        lifts += round(natural - lifts[anchor])
        out.extend(p._replace(omega_lift=float(v)) for p, v in zip(pts, lifts))
    return out


def _unwrap_between(omega_fn, c0, p0, lift0, c1, p1, depth):
    step = p1.omega_mod1 - p0.omega_mod1
    step -= round(step)
    if c0 > 0.0 and c1 > 0.0:
        # hyperbolic levels carry an exact real lift: refine on its increment
        jump = abs(p1.omega_lift - p0.omega_lift)
        if jump < 0.5:
            return lift0 + step
    elif abs(step) <= 0.25:
        return lift0 + step
    if depth == 0:
        raise UnwrapAmbiguity(
            f"rotation number changes by more than 1/2 between C={c0} and C={c1}"
        )
    cm = 0.5 * (c0 + c1)
    pm = omega_fn(cm)
    lm = _unwrap_between(omega_fn, c0, p0, lift0, cm, pm, depth - 1)
    return _unwrap_between(omega_fn, cm, pm, lm, c1, p1, depth - 1)
