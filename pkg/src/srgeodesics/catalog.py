"""Closed geodesics on invariant tori with rational rotation number.

A torus at Casimir level C carries closed geodesics when the lifted
rotation number is rational, omega(C) = P/q.  The orbit then closes after q
reduced periods, its length is q * t_geod(C), and its spiraling integer is
the degree of t -> (xi(t), eta(t)).
"""
import math
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import (
    ClosureFailure,
    NotClosed,
    OutOfRange,
    UndersampledPath,
    UnresolvedRoot,
    ValidationError,
)
from .euler import (
    CUT_TOL,
    Regime,
    RegimeTag,
    classify_regime,
    initial_momentum,
    t_geod,
)
from .phase_flow import (
    PSL2,
    geodesic_samples,
    omega_lift_scan,
    rotation_number,
    t_cas,
)
from .sl2 import (
    Covector,
    a_matrix,
    algebra_matrix,
    expm_traceless,
    log_in_subgroup,
)


class HyperbolicClass(NamedTuple):
    lam: float

    @property
    def l_gamma(self) -> float:
        return math.log(self.lam)

    def validate(self):
        if not self.lam > 1.0:
            raise ValidationError(f"hyperbolic class needs lambda > 1, got {self.lam}")
        return self


class IdentityClass(NamedTuple):
    @property
    def lam(self):
        return None


ConjugacyClass = Union[HyperbolicClass, IdentityClass]


class TorusDescriptor(NamedTuple):
    c: float
    regime: Regime
    cls: ConjugacyClass


class ClosedGeodesicRecord(NamedTuple):
    torus: TorusDescriptor
    p: int
    q: int
    length: float
    spiraling: int
    closure_residual: float
    winding: int = 0
    measured_length: Optional[float] = None
    normalization: str = "formula"
    anomaly: bool = False

    def as_dict(self) -> dict:
        return {
            "c": self.torus.c,
            "regime": self.torus.regime.tag.value,
            "lambda": self.torus.cls.lam,
            "p": self.p,
            "q": self.q,
            "length": self.length,
            "spiraling": self.spiraling,
            "closure_residual": self.closure_residual,
        }


def class_for(c: float, lam: Optional[float]) -> ConjugacyClass:
    if c < 0.0:
        return IdentityClass()
    return HyperbolicClass(lam).validate()


def torus_descriptor(c: float, lam: Optional[float]) -> TorusDescriptor:
    reg = classify_regime(c)
    if not reg.has_torus:
        raise OutOfRange(f"C = {c} ({reg.tag.value}) carries no invariant torus")
    return TorusDescriptor(float(c), reg, class_for(c, lam))


def spiraling_integer(momentum_samples, close_tol: float = 1e-6) -> int:
    """Signed degree of t -> (xi, eta) over a closed sample path."""
    pts = np.asarray(momentum_samples, dtype=float)[:, :2]
    if len(pts) < 2:
        raise UndersampledPath("need at least two samples")
    gap = float(np.abs(pts[-1] - pts[0]).max())
    if gap > close_tol:
        raise NotClosed(f"path endpoints differ by {gap:.2e}")
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    d = np.diff(ang)
    d = (d + math.pi) % (2.0 * math.pi) - math.pi
    if d.size and float(np.abs(d).max()) >= 0.5 * math.pi:
        raise UndersampledPath(f"angular step {float(np.abs(d).max()):.3f} >= pi/2")
    turns = float(d.sum()) / (2.0 * math.pi)
    n = round(turns)
    if abs(turns - n) >= 0.01:
        raise NotClosed(f"winding {turns:.4f} is not close to an integer")
    return int(n)


def _interval_check(c_lo: float, c_hi: float):
    if not c_lo < c_hi:
        raise ValidationError(f"empty interval [{c_lo}, {c_hi}]")
    a, b = classify_regime(c_lo), classify_regime(c_hi)
    if a.tag != b.tag or not a.has_torus:
        raise ValidationError(f"[{c_lo}, {c_hi}] is not inside one torus regime")
    for cut in (-1.0, 0.0, 1.0):
        if c_lo - 1e-9 < cut < c_hi + 1e-9:
            raise ValidationError(f"[{c_lo}, {c_hi}] touches the critical level {cut}")


def default_grid(c_lo: float, c_hi: float, n: int = 400) -> np.ndarray:
    """Grid that is uniform in log-distance to the nearest critical level
    at each end, so steep ends near C = -1, 0, 1 are resolved."""
    def dist(c):
        return min(abs(c + 1.0), abs(c), abs(c - 1.0))

    lo_d, hi_d = dist(c_lo), dist(c_hi)
    if c_lo > 1.0:
        # distance to the separatrix from above, open to +infinity
        u = np.geomspace(c_lo - 1.0, c_hi - 1.0, n)
        return 1.0 + u
    mid = 0.5 * (c_lo + c_hi)
    k = n // 2
    left = c_lo + (np.geomspace(lo_d, lo_d + (mid - c_lo), k) - lo_d)
    right = c_hi - (np.geomspace(hi_d, hi_d + (c_hi - mid), n - k) - hi_d)
    g = np.unique(np.concatenate([left, right[::-1]]))
    return g[(g >= c_lo) & (g <= c_hi)]


def find_rational_omega(
    cls: Optional[ConjugacyClass],
    p: int,
    q: int,
    c_interval: Sequence[float],
    tol: float = 1e-10,
    omega_fn: Optional[Callable[[float], float]] = None,
    n_grid: int = 400,
    normalization: str = PSL2,
) -> list:
    """Roots of omega_lift(C) = p/q + n inside ``c_interval``.

    ``omega_fn`` maps C to a continuous lift and replaces the computed
    rotation number (the regime check is skipped in that case).
    Returns sorted pairs ``(C*, P)`` with P = p + n q.
    """
    if q < 1 or math.gcd(p, q) != 1:
        raise ValidationError(f"need q >= 1 and gcd(p, q) = 1, got {p}/{q}")
    c_lo, c_hi = map(float, c_interval)
    if omega_fn is None:
        _interval_check(c_lo, c_hi)
        lam = None if isinstance(cls, IdentityClass) or cls is None else cls.lam
        grid = default_grid(c_lo, c_hi, n_grid)
        pts = omega_lift_scan(grid, lam, tol=tol, normalization=normalization)
        lifts = np.array([fp.omega_lift for fp in pts])

        def lift_at(c, ref):
            fp = rotation_number(c, lam, tol, normalization=normalization)
            if fp.c > 0.0:
                return fp.omega_lift
            return fp.omega_mod1 + round(ref - fp.omega_mod1)
    else:
        if not c_lo < c_hi:
            raise ValidationError(f"empty interval [{c_lo}, {c_hi}]")
        grid = np.linspace(c_lo, c_hi, n_grid)
        lifts = np.array([float(omega_fn(c)) for c in grid])
        lift_at = lambda c, ref: float(omega_fn(c))

    lo, hi = float(lifts.min()), float(lifts.max())
    n_min = math.ceil((lo * q - p) / q) - 1
    n_max = math.floor((hi * q - p) / q) + 1
    roots = []
    for n in range(n_min, n_max + 1):
        P = p + n * q
        target = P / q
        f = lifts - target
        for i in range(len(grid) - 1):
            if f[i] == 0.0:
                roots.append((float(grid[i]), P))
                continue
            if f[i] * f[i + 1] < 0.0:
                c = _bisect(lift_at, grid[i], grid[i + 1], lifts[i], lifts[i + 1], target, tol)
                roots.append((c, P))
        if f[-1] == 0.0:
            roots.append((float(grid[-1]), P))
    roots.sort()
    return roots


def _bisect(lift_at, a, b, la, lb, target, tol, max_iter=200):
    fa = la - target
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        ref = la + (lb - la) * (m - a) / (b - a)
        lm = lift_at(m, ref)
        fm = lm - target
        if fm == 0.0:
            return m
        if fa * fm < 0.0:
            b, lb = m, lm
        else:
            a, la, fa = m, lm, fm
        if b - a <= tol * max(1.0, abs(m)) and abs(fm) <= tol:
            break
        if b - a <= 1e-15 * max(1.0, abs(m)):
            if abs(fm) > 1e3 * tol:
                raise UnresolvedRoot(f"bracket collapsed at C = {m!r} with residual {fm:.2e}")
            break
    return 0.5 * (a + b)


def build_record(
    c_star: float,
    p: int,
    q: int,
    cls: ConjugacyClass,
    tol: float = 1e-10,
    p0=None,
    normalization: str = PSL2,
) -> ClosedGeodesicRecord:
    """Integrate q reduced periods from (Id, p0) and check closure.

    ``p`` is the lifted numerator: omega_lift(c_star) = p/q.  Closure is
    tested against exp(p T_cas A(p0)) (relative matrix distance, PSL2
    sign) together with the momentum return.
    """
    lam = cls.lam
    torus = torus_descriptor(c_star, lam)
    if p0 is None:
        p0 = initial_momentum(c_star)
    p0 = Covector(*map(float, p0))
    T = t_geod(c_star, check=False)
    L = q * T
    ts, ys = geodesic_samples(p0, L, tol=min(tol * 1e-2, 1e-12))
    G = ys[-1, :4].reshape(2, 2)
    A0 = algebra_matrix(a_matrix(p0))
    tc = t_cas(c_star, lam, normalization)
    E = expm_traceless(A0, p * tc)
    scale = max(1.0, float(np.abs(G).max()))
    res_g = min(float(np.abs(G - E).max()), float(np.abs(G + E).max())) / scale
    res_p = float(np.abs(ys[-1, 4:] - np.asarray(p0)).max())
    residual = max(res_g, res_p)
    if residual > 100.0 * tol and residual > 1e-8:
        raise ClosureFailure(f"orbit at C = {c_star!r} misses closure by {residual:.2e}")
    winding = spiraling_integer(ys[:, 4:], close_tol=max(1e-6, 10 * res_p))
    spiral = abs(winding)
    expected = q if torus.regime.tag == RegimeTag.PRINCIPAL_SERIES else 0
    return ClosedGeodesicRecord(
        torus, int(p), int(q), L, spiral, residual, winding,
        anomaly=spiral != expected,
    )


def critical_geodesics(cls: HyperbolicClass, tol: float = 1e-12) -> tuple:
    """Closed geodesics on the critical levels C = 1 and C = -1.

    Both have frozen momentum, so the group moves along a one-parameter
    subgroup.  At C = 1 the length is the first time exp(t U) has
    eigenvalue lambda.  At C = -1 the record carries the length 2 sqrt(2) pi
    and the measured minimal PSL2 return time in ``measured_length``.
    """
    from scipy import optimize

    cls = HyperbolicClass(cls.lam).validate()
    r = math.sqrt(0.5)
    p_sep = Covector(r, r, 0.0)
    U = algebra_matrix((p_sep.xi, p_sep.eta, 0.0))
    target = math.cosh(math.log(cls.lam))
    f = lambda t: 0.5 * np.trace(expm_traceless(U, t)) - target
    hi = 1.0
    while f(hi) < 0.0:
        hi *= 2.0
    L1 = optimize.brentq(f, 0.0, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
    res1 = abs(f(L1)) / target
    sep = ClosedGeodesicRecord(
        TorusDescriptor(1.0, classify_regime(1.0), cls), 0, 1, L1, 0, res1, 0, L1,
    )

    p_eq = Covector(r, -r, 0.0)
    V = algebra_matrix((p_eq.xi, p_eq.eta, 0.0))
    # the off-diagonal entry of exp(t V) is sin(t / sqrt 2) / sqrt 2
    g = lambda t: expm_traceless(V, t)[0, 1]
    t_half = optimize.brentq(g, 0.5 * math.pi, 1.5 * math.pi * math.sqrt(2.0), xtol=tol)
    E = expm_traceless(V, t_half)
    res2 = min(np.abs(E - np.eye(2)).max(), np.abs(E + np.eye(2)).max())
    L2 = 2.0 * math.sqrt(2.0) * math.pi
    tag = "psl2_half" if abs(2.0 * t_half - L2) < abs(t_half - L2) else "formula"
    eq = ClosedGeodesicRecord(
        TorusDescriptor(-1.0, classify_regime(-1.0), IdentityClass()),
        0, 1, L2, 0, float(res2), 0, t_half, tag,
    )
    return sep, eq


def catalog(
    lam: float,
    q_max: int,
    windows: Sequence[Sequence[float]],
    tol: float = 1e-10,
    n_grid: int = 400,
    mapper=map,
) -> list:
    """All records with q <= q_max on the given C windows, sorted by (q, p, c).

    ``mapper`` may be a parallel ``map``; its result order is not relied on.
    """
    cls = HyperbolicClass(lam).validate()
    tasks = []
    for q in range(1, q_max + 1):
        for p in range(q):
            if math.gcd(p, q) == 1:
                for w in windows:
                    tasks.append((lam, p, q, float(w[0]), float(w[1]), tol, n_grid))
    recs = [r for batch in mapper(_catalog_task, tasks) for r in batch]
    recs.sort(key=lambda r: (r.q, r.p, r.torus.c))
    return recs


def _catalog_task(args):
    lam, p, q, lo, hi, tol, n_grid = args
    cls = HyperbolicClass(lam)
    klass = IdentityClass() if hi < 0.0 else cls
    out = []
    for c, P in find_rational_omega(klass, p, q, (lo, hi), tol, n_grid=n_grid):
        out.append(build_record(c, P, q, HyperbolicClass(lam) if c > 0 else IdentityClass(), tol))
    return out
