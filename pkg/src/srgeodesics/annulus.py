"""Twist maps of the annulus and invariant graphs of near-identity maps.

Two tools:

* a constructive fixed-point finder for area-preserving twist maps of
  (R/Z) x [a, b]: solve the angular equation X(x, y(x)) = x along a grid
  of x and look for sign changes of Y(x, y(x)) - y(x);
* Newton continuation of invariant graphs {f = f(y)} of a family
  F_eps(y, f) = (A_eps(y, f), B_eps(y, f)) for which the zero graph is
  pointwise fixed at eps = 0.  The graph equation B(y, f(y)) = f(A(y, f(y)))
  is discretized on a circle (trigonometric interpolation) or on a
  cylinder (trigonometric x Chebyshev) and solved by Newton-Krylov,
  preconditioned by the pointwise inverse of B'_0 - Id.
"""
import math
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import optimize
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import (
    DegenerateNormalDirection,
    NewtonDivergence,
    NoSignChange,
    NotAreaPreserving,
    ValidationError,
)


class TwistMap(NamedTuple):
    """F(x, y) = (fx(x, y), fy(x, y)) with fx returning the lifted angle."""

    fx: Callable
    fy: Callable
    a: float
    b: float
    lift_offset: int = 0
    jac: Optional[Callable] = None  # (x, y) -> 2x2 Jacobian, optional

    def __call__(self, x, y):
        return self.fx(x, y), self.fy(x, y)

    def jacobian(self, x, y, h: float = 1e-6) -> np.ndarray:
        if self.jac is not None:
            return np.asarray(self.jac(x, y), dtype=float)
        J = np.empty((2, 2))
        J[0, 0] = (self.fx(x + h, y) - self.fx(x - h, y)) / (2 * h)
        J[1, 0] = (self.fy(x + h, y) - self.fy(x - h, y)) / (2 * h)
        J[0, 1] = (self.fx(x, y + h) - self.fx(x, y - h)) / (2 * h)
        J[1, 1] = (self.fy(x, y + h) - self.fy(x, y - h)) / (2 * h)
        return J


class TwistReport(NamedTuple):
    ok: bool
    min_twist: float
    max_area_defect: float
    max_drift_low: float  # max over x of X(x, a) - x - offset, must be < 0
    min_drift_high: float  # min over x of X(x, b) - x - offset, must be > 0
    worst: str


def check_twist(m: TwistMap, n_grid: int = 64, area_tol: float = 1e-8) -> TwistReport:
    xs = np.linspace(0.0, 1.0, n_grid, endpoint=False)
    ys = np.linspace(m.a, m.b, n_grid)
    min_twist, max_area = math.inf, 0.0
    worst_twist = worst_area = None
    for x in xs:
        for y in ys:
            J = m.jacobian(x, y)
            if J[0, 1] < min_twist:
                min_twist, worst_twist = J[0, 1], (x, y)
            d = abs(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0] - 1.0)
            if d > max_area:
                max_area, worst_area = d, (x, y)
    low = max(m.fx(x, m.a) - x - m.lift_offset for x in xs)
    high = min(m.fx(x, m.b) - x - m.lift_offset for x in xs)
    problems = []
    if not min_twist > 0.0:
        problems.append(f"twist dX/dy = {min_twist:.3g} at {worst_twist}")
    if max_area > area_tol:
        problems.append(f"area defect {max_area:.3g} at {worst_area}")
    if not low < 0.0:
        problems.append(f"lower boundary drift {low:.3g} >= 0")
    if not high > 0.0:
        problems.append(f"upper boundary drift {high:.3g} <= 0")
    return TwistReport(not problems, float(min_twist), float(max_area), float(low),
                       float(high), "; ".join(problems))


def _angle_solution(m: TwistMap, x: float, tol: float) -> float:
    h = lambda y: m.fx(x, y) - x - m.lift_offset
    return optimize.brentq(h, m.a, m.b, xtol=tol, rtol=4 * np.finfo(float).eps)


def _polish(m: TwistMap, x: float, y: float, tol: float, max_iter: int = 20):
    """Newton on F(x, y) - (x + offset, y) = 0."""
    for _ in range(max_iter):
        r = np.array([m.fx(x, y) - x - m.lift_offset, m.fy(x, y) - y])
        if float(np.abs(r).max()) <= tol:
            break
        J = m.jacobian(x, y) - np.eye(2)
        try:
            dx, dy = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        x, y = x + dx, y + dy
    return x, y


def fixed_point_residual(m: TwistMap, x: float, y: float) -> float:
    return max(abs(m.fx(x, y) - x - m.lift_offset), abs(m.fy(x, y) - y))


def pb_fixed_point(m: TwistMap, tol: float = 1e-12, n_grid: int = 512, check: bool = True) -> list:
    """All fixed points detected on an x-grid, as (x mod 1, y) pairs."""
    if check:
        rep = check_twist(m)
        if not rep.ok:
            if rep.max_area_defect > 1e-8:
                raise NotAreaPreserving(rep.worst)
            raise ValidationError(f"not a twist map: {rep.worst}")
    xs = (np.arange(n_grid) + 0.5) / n_grid
    ys = np.array([_angle_solution(m, x, 1e-15) for x in xs])
    g = np.array([m.fy(x, y) - y for x, y in zip(xs, ys)])

    def g_of(x):
        y = _angle_solution(m, x, 1e-15)
        return m.fy(x, y) - y

    found = []
    zero_nodes = np.abs(g) <= tol
    for i in np.nonzero(zero_nodes)[0]:
        found.append((float(xs[i]), float(ys[i])))
    for i in range(n_grid):
        j = (i + 1) % n_grid
        if zero_nodes[i] or zero_nodes[j] or g[i] * g[j] > 0.0:
            continue
        lo, hi = xs[i], xs[j] + (1.0 if j == 0 else 0.0)
        x = optimize.brentq(g_of, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        y = _angle_solution(m, x, 1e-15)
        x, y = _polish(m, x, y, tol)
        found.append((float(x), float(y)))
    if not found:
        raise NoSignChange(
            f"Y(x, y(x)) - y(x) keeps one sign on the grid, range [{g.min():.3g}, {g.max():.3g}]"
        )
    out = []
    for x, y in found:
        xm = x % 1.0
        if xm > 1.0 - 1e-14:
            xm = 0.0
        out.append((xm, y))
    out.sort()
    return out


def s_map_twist(smap, lift_offset: int = 0) -> TwistMap:
    """Rescale an S-map (theta, J) to x = theta / 2 pi."""
    two_pi = 2.0 * math.pi

    def fx(x, y):
        return smap.apply(two_pi * x, y)[0] / two_pi

    def fy(x, y):
        return smap.apply(two_pi * x, y)[1]

    return TwistMap(fx, fy, smap.j_lo, smap.j_hi, lift_offset)


# ----------------------------------------------------------------------------
# interpolation on circles and cylinders


def _trig_weights(nodes: np.ndarray, period: float, pts: np.ndarray):
    """Value and derivative weights of even-n trigonometric interpolation."""
    n = len(nodes)
    s = 2.0 * math.pi / period
    d = s * (pts[:, None] - nodes[None, :])
    half = 0.5 * d
    sh, ch = np.sin(half), np.cos(half)
    delta = 2.0 * sh * ch  # signed distance to the nearest node image, to leading order
    near = np.abs(sh) < 0.5e-3 / n
    sh_safe = np.where(near, 1.0, sh)
    sn, cn = np.sin(0.5 * n * d), np.cos(0.5 * n * d)
    # sum'_{|k| <= n/2} e^{ik d} = sin(n d/2) cot(d/2); Taylor expansion near d = 0
    c2 = (n * n + 2.0) / 12.0
    val = np.where(near, 1.0 - 0.5 * c2 * delta**2, sn * ch / (n * sh_safe))
    der = np.where(near, -c2 * delta, (0.5 * n * cn * ch / sh_safe - 0.5 * sn / sh_safe**2) / n)
    return val, der * s


def _cheb_nodes(n: int, lo: float, hi: float):
    x = np.cos(np.pi * np.arange(n) / (n - 1))
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x, w


def _cheb_weights(nodes: np.ndarray, bw: np.ndarray, pts: np.ndarray):
    diff = pts[:, None] - nodes[None, :]
    hit = np.abs(diff) < 1e-14
    diff_safe = np.where(hit, 1.0, diff)
    t = bw[None, :] / diff_safe
    S = t.sum(axis=1)
    S2 = (t / diff_safe).sum(axis=1)
    val = t / S[:, None]
    der = val * (S2 / S)[:, None] - val / diff_safe
    rows = np.nonzero(hit.any(axis=1))[0]
    if rows.size:
        D = _cheb_diff_matrix(nodes, bw)
        for r in rows:
            j = int(np.argmax(hit[r]))
            val[r] = 0.0
            val[r, j] = 1.0
            der[r] = D[j]
    return val, der


def _cheb_diff_matrix(nodes, bw):
    n = len(nodes)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (bw[j] / bw[i]) / (nodes[i] - nodes[j])
        D[i, i] = -D[i].sum()
    return D


class GraphDomain(NamedTuple):
    """Uniform circle grid, or a trigonometric x Chebyshev cylinder grid."""

    kind: str
    nodes: np.ndarray  # (N, m)
    shape: tuple
    period: float
    lo: float = 0.0
    hi: float = 0.0

    @classmethod
    def circle(cls, n: int = 256, period: float = 2.0 * math.pi) -> "GraphDomain":
        if n % 2:
            raise ValidationError("circle grids need an even number of nodes")
        y = period * np.arange(n) / n
        return cls("circle", y[:, None], (n,), period)

    @classmethod
    def cylinder(cls, n1: int = 64, n2: int = 64, period: float = 2.0 * math.pi,
                 lo: float = -1.0, hi: float = 1.0) -> "GraphDomain":
        if n1 % 2:
            raise ValidationError("the periodic direction needs an even number of nodes")
        y1 = period * np.arange(n1) / n1
        y2, _ = _cheb_nodes(n2, lo, hi)
        Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
        return cls("cylinder", np.column_stack([Y1.ravel(), Y2.ravel()]), (n1, n2), period, lo, hi)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def interpolator(self, pts: np.ndarray) -> "_Interp":
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "circle":
            v, d = _trig_weights(self.nodes[:, 0], self.period, pts[:, 0])
            return _Interp(self, (v,), (d,))
        n1, n2 = self.shape
        y1 = self.period * np.arange(n1) / n1
        y2, bw = _cheb_nodes(n2, self.lo, self.hi)
        v1, d1 = _trig_weights(y1, self.period, pts[:, 0])
        v2, d2 = _cheb_weights(y2, bw, pts[:, 1])
        return _Interp(self, (v1, v2), (d1, d2))


class _Interp:
    def __init__(self, domain, vals, ders):
        self.domain, self.vals, self.ders = domain, vals, ders

    def value(self, F: np.ndarray) -> np.ndarray:
        """F: (N, d) nodal values -> (P, d) at the points."""
        if self.domain.kind == "circle":
            return self.vals[0] @ F
        return self._tensor(self.vals[0], self.vals[1], F)

    def gradient(self, F: np.ndarray) -> np.ndarray:
        """(P, d, m) derivatives of the interpolant."""
        if self.domain.kind == "circle":
            return (self.ders[0] @ F)[:, :, None]
        g1 = self._tensor(self.ders[0], self.vals[1], F)
        g2 = self._tensor(self.vals[0], self.ders[1], F)
        return np.stack([g1, g2], axis=2)

    def _tensor(self, W1, W2, F):
        n1, n2 = self.domain.shape
        d = F.shape[1]
        T = (W1 @ F.reshape(n1, n2 * d)).reshape(-1, n2, d)
        return np.einsum("pbd,pb->pd", T, W2)


class InvariantGraph(NamedTuple):
    domain: GraphDomain
    values: np.ndarray  # (N, d)
    residual: float
    history: tuple = ()

    def __call__(self, pts) -> np.ndarray:
        return self.domain.interpolator(pts).value(self.values)

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0


def zero_graph(domain: GraphDomain, d: int = 1) -> InvariantGraph:
    return InvariantGraph(domain, np.zeros((len(domain.nodes), d)), math.inf)


def graph_residual(A, B, domain: GraphDomain, F: np.ndarray):
    y = domain.nodes
    pts = A(y, F)
    interp = domain.interpolator(pts)
    return B(y, F) - interp.value(F), pts, interp


def _f_partials(fun, y, F, h=1e-6):
    """Central differences of fun(y, f) in f: (N, k, d)."""
    d = F.shape[1]
    cols = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        cols.append((fun(y, F + e) - fun(y, F - e)) / (2 * h))
    return np.stack(cols, axis=2)


def normal_linearization(family, domain: GraphDomain, d: int) -> np.ndarray:
    """B'_0(y): (N, d, d) derivative of B_0 in the normal coordinate on f = 0."""
    _, B0 = family(0.0)
    return _f_partials(B0, domain.nodes, np.zeros((len(domain.nodes), d)))


def invariant_graph_newton(
    family,
    eps: float,
    graph0: InvariantGraph,
    tol: float = 1e-10,
    max_iter: int = 30,
    gap: float = 1e-8,
) -> InvariantGraph:
    """Invariant graph of F_eps = (A_eps, B_eps) continued from graph0.

    ``family(eps)`` returns vectorized ``A(y, f)`` and ``B(y, f)`` taking
    arrays of shape (N, m) and (N, d).
    """
    domain = graph0.domain
    F = np.array(graph0.values, dtype=float)
    N, d = F.shape
    A, B = family(eps)
    G, pts, interp = graph_residual(A, B, domain, F)
    r = float(np.abs(G).max())
    history = [r]
    if r <= tol:
        return InvariantGraph(domain, F, r, tuple(history))

    L0 = normal_linearization(family, domain, d)
    eig = np.linalg.eigvals(L0)
    dist = float(np.abs(eig - 1.0).min())
    if dist < gap:
        raise DegenerateNormalDirection(
            f"B'_0 has an eigenvalue within {dist:.1e} of 1; the linearized graph equation is singular"
        )
    P = np.linalg.inv(L0 - np.eye(d)[None, :, :])

    for _ in range(max_iter):
        Bf = _f_partials(B, domain.nodes, F)
        Af = _f_partials(A, domain.nodes, F)
        grad = interp.gradient(F)  # (N, d, m)
        chain = np.einsum("ndm,nmk->ndk", grad, Af)
        Jloc = Bf - chain

        def matvec(v, Jloc=Jloc, interp=interp):
            V = v.reshape(N, d)
            out = np.einsum("ndk,nk->nd", Jloc, V) - interp.value(V)
            return out.ravel()

        def precond(v):
            return np.einsum("ndk,nk->nd", P, v.reshape(N, d)).ravel()

        op = LinearOperator((N * d, N * d), matvec=matvec, dtype=float)
        M = LinearOperator((N * d, N * d), matvec=precond, dtype=float)
        forcing = max(1e-13, min(1e-3, r))
        step, info = gmres(op, -G.ravel(), M=M, rtol=forcing, atol=0.0, restart=60, maxiter=20)
        if info < 0:
            raise NewtonDivergence(f"GMRES breakdown (info {info})")
        F = F + step.reshape(N, d)
        G, pts, interp = graph_residual(A, B, domain, F)
        r_new = float(np.abs(G).max())
        history.append(r_new)
        if not np.isfinite(r_new) or r_new > 1e3 * max(history[0], 1e-300):
            raise NewtonDivergence(f"Newton residual blew up to {r_new:.2e}")
        r = r_new
        if r <= tol:
            return InvariantGraph(domain, F, r, tuple(history))
    raise NewtonDivergence(f"no convergence after {max_iter} Newton steps (residual {r:.2e})")


def convergence_orders(history) -> list:
    """Estimated orders log(r_{k+1}/r_k) / log(r_k/r_{k-1})."""
    h = [float(v) for v in history]
    out = []
    for a, b, c in zip(h, h[1:], h[2:]):
        if a > 0 and b > 0 and c > 0 and a != b:
            out.append(math.log(c / b) / math.log(b / a))
    return out


def invariance_defect(family, eps: float, graph: InvariantGraph, n_samples: int = 64, seed: int = 0) -> float:
    """max |B - f(A)| over random off-grid points of the graph."""
    A, B = family(eps)
    dom = graph.domain
    rng = np.random.default_rng(seed)
    y = np.empty((n_samples, dom.dim))
    y[:, 0] = rng.uniform(0.0, dom.period, n_samples)
    if dom.kind == "cylinder":
        y[:, 1] = rng.uniform(dom.lo, dom.hi, n_samples)
    f = graph(y)
    return float(np.abs(B(y, f) - graph(A(y, f))).max())


def s_map_family(k: int, t0: float, perturbation_for_eps: Callable):
    """The S-map in the chart (theta, f = J - k pi / T0) as a graph family.

    ``perturbation_for_eps(eps)`` returns a pair (dtheta, dJ) of functions
    of (theta, J).
    """
    jc = k * math.pi / t0

    def family(eps):
        dth, dJ = perturbation_for_eps(eps)

        def A(y, f):
            th, J = y[:, 0], jc + f[:, 0]
            return (th + 2.0 * t0 * f[:, 0] + dth(th, J))[:, None]

        def B(y, f):
            th, J = y[:, 0], jc + f[:, 0]
            return (f[:, 0] + dJ(th, J))[:, None]

        return A, B

    return family


def invariant_circle_ck(k: int, t0: float, perturbation_for_eps: Callable, eps: float,
                        tol: float = 1e-10, n: int = 256) -> InvariantGraph:
    """Continue the circle {J = k pi / T0} of fixed points of the S-map."""
    family = s_map_family(k, t0, perturbation_for_eps)
    return invariant_graph_newton(family, eps, zero_graph(GraphDomain.circle(n)), tol)
