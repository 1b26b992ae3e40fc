"""Comparing a flow with a perturbed one through a conjugating path.

If V = V0 + R and phi0_t is the flow of V0, then phi_t(x) = phi0_t(w(t, x))
where w solves

    dw/dt = (D phi0_t(w))^-1 R(phi0_t(w)),    w(0) = x.

The model flow of a geodesic winding around a closed Reeb orbit, in
coordinates (phase, v1, v2, theta, I), is

    G0_t = (phase + I t/2, exp(I t K / 2) v, theta + t / I, I)

with K the generator of the linear transverse Reeb dynamics.
"""
import math
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import SingularDifferential, ValidationError

DEFAULT_K = np.array([[0.0, -1.0], [1.0, 0.0]])


class FlowPair(NamedTuple):
    base_flow: Callable  # (x, t) -> phi0_t(x)
    base_field: Callable  # x -> V0(x)
    perturbation: Callable  # x -> R(x)
    base_diff_inv: Optional[Callable] = None  # (x, t) -> (D phi0_t(x))^-1


class ConjugatorResult(NamedTuple):
    t: np.ndarray
    w: np.ndarray  # (len(t), n)
    min_singular: float
    conjugation_error: float  # |phi_t(x0) - phi0_t(w(t))| at the end
    max_rate: float  # sup |dw/dt| along the samples


def _field_jacobian(f, x, h=1e-7):
    n = len(x)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h * max(1.0, abs(x[j]))
        J[:, j] = (f(x + e) - f(x - e)) / (2 * e[j])
    return J


def variational_diff(field, x, t, tol=1e-12):
    """D phi0_t(x) by integrating the variational equations."""
    n = len(x)

    def rhs(_, z):
        y = z[:n]
        M = z[n:].reshape(n, n)
        return np.concatenate([field(y), (_field_jacobian(field, y) @ M).ravel()])

    z0 = np.concatenate([x, np.eye(n).ravel()])
    sol = solve_ivp(rhs, (0.0, t), z0, method="DOP853", rtol=tol, atol=tol)
    return sol.y[n:, -1].reshape(n, n)


def direct_flow(fp: FlowPair, x0, t: float, tol: float = 1e-12, t_eval=None):
    f = lambda _, x: fp.base_field(x) + fp.perturbation(x)
    return solve_ivp(f, (0.0, t), np.asarray(x0, float), method="DOP853",
                     rtol=tol, atol=tol, t_eval=t_eval, dense_output=t_eval is None)


def conjugator_ode(fp: FlowPair, x0, t: float, tol: float = 1e-12, n_samples: int = 200) -> ConjugatorResult:
    x0 = np.asarray(x0, dtype=float)
    if fp.base_diff_inv is not None:
        dinv = fp.base_diff_inv
    else:
        dinv = lambda x, s: np.linalg.inv(variational_diff(fp.base_field, x, s, tol))
    smin = [math.inf]

    def rhs(s, w):
        Di = dinv(w, s)
        # smallest singular value of D phi0 is 1 / largest of its inverse
        sv = 1.0 / np.linalg.norm(Di, 2)
        smin[0] = min(smin[0], sv)
        if sv < 1e-12:
            raise SingularDifferential(f"D phi0 nearly singular (sigma_min = {sv:.2e}) at t = {s}")
        return Di @ fp.perturbation(fp.base_flow(w, s))

    ts = np.linspace(0.0, t, n_samples + 1)
    if t == 0.0:
        return ConjugatorResult(ts[:1], x0[None, :], math.inf, 0.0, 0.0)
    sol = solve_ivp(rhs, (0.0, t), x0, method="DOP853", rtol=tol, atol=tol, t_eval=ts)
    W = sol.y.T
    W[0] = x0
    rate = max(float(np.linalg.norm(rhs(s, w))) for s, w in zip(ts, W))
    direct = direct_flow(fp, x0, t, tol).y[:, -1]
    err = float(np.abs(direct - fp.base_flow(W[-1], t)).max())
    return ConjugatorResult(ts, W, smin[0], err, rate)


class ModelFlow(NamedTuple):
    state: np.ndarray
    diff: np.ndarray
    diff_inv: np.ndarray


def model_flow_g0(sigma_phase: float, theta: float, i: float, t: float, v=(0.0, 0.0), K=None) -> ModelFlow:
    """Exact model flow and its differential in (phase, v1, v2, theta, I).

    Row 3 (theta) of the differential carries d theta'/dI = -t / I^2;
    rows 0-2 carry the phase/transverse dependence on I through the Reeb
    time I t / 2.
    """
    if not i > 0.0:
        raise ValidationError(f"I must be positive, got {i}")
    K = DEFAULT_K if K is None else np.asarray(K, dtype=float)
    v = np.asarray(v, dtype=float)
    tau = 0.5 * i * t
    E = expm(tau * K)
    Ev = E @ v
    state = np.array([sigma_phase + tau, Ev[0], Ev[1], theta + t / i, i])
    c = np.array([0.5 * t, *(0.5 * t * (K @ Ev)), -t / (i * i)])
    D = np.eye(5)
    D[1:3, 1:3] = E
    D[:4, 4] = c
    Einv = expm(-tau * K)
    Pinv = np.eye(4)
    Pinv[1:3, 1:3] = Einv
    Dinv = np.eye(5)
    Dinv[:4, :4] = Pinv
    Dinv[:4, 4] = -Pinv @ c
    return ModelFlow(state, D, Dinv)


def model_flow_pair(m: int, K=None, amplitude: float = 1.0) -> FlowPair:
    """G0 with a perturbation of size I^m, mostly along the action."""
    K = DEFAULT_K if K is None else np.asarray(K, dtype=float)

    def base_flow(x, t):
        return model_flow_g0(x[0], x[3], x[4], t, x[1:3], K).state

    def base_field(x):
        i = x[4]
        kv = 0.5 * i * (K @ x[1:3])
        return np.array([0.5 * i, kv[0], kv[1], 1.0 / i, 0.0])

    def perturbation(x):
        th, i = x[3], x[4]
        s = amplitude * abs(i) ** m
        return s * np.array([0.3, 0.2, -0.1, 0.5 * math.sin(th), 1.0 + 0.5 * math.cos(th)])

    def diff_inv(x, t):
        return model_flow_g0(x[0], x[3], x[4], t, x[1:3], K).diff_inv

    return FlowPair(base_flow, base_field, perturbation, diff_inv)


class ClosenessRow(NamedTuple):
    i0: float
    horizon: float
    sup_distance: float
    sup_rate: float
    conjugation_error: float


class ClosenessReport(NamedTuple):
    rows: list
    distance_exponent: float
    rate_exponent: float
    expected_exponent: int


def _slope(x, y):
    lx, ly = np.log(np.asarray(x)), np.log(np.asarray(y))
    return float(np.polyfit(lx, ly, 1)[0])


def closeness_report(
    fp_for_i0: Callable,
    i0_grid,
    m: int,
    tol: float = 1e-12,
    thetas=(0.0, 1.5, 3.0, 4.5),
    v0=(0.1, -0.05),
) -> ClosenessReport:
    """Perturbed vs model flow up to t = 1 / I0 for each I0.

    ``sup_distance`` is sup over t and the start points of the gap between
    the flows; ``sup_rate`` is sup |dw/dt| for the conjugating path, the
    quantity bounded by |R| * |(DG0)^-1| ~ I^m * I^-3.  Both are fitted by
    power laws in I0; ``rate_exponent`` is the one to compare with m - 3.
    """
    rows = []
    for i0 in i0_grid:
        fp = fp_for_i0(i0) if callable(fp_for_i0) and not isinstance(fp_for_i0, FlowPair) else fp_for_i0
        T = 1.0 / i0
        dist = rate = cerr = 0.0
        for th in thetas:
            x0 = np.array([0.0, v0[0], v0[1], th, i0])
            ts = np.linspace(0.0, T, 201)
            sol = direct_flow(fp, x0, T, tol, t_eval=ts)
            base = np.array([fp.base_flow(x0, s) for s in ts])
            dist = max(dist, float(np.abs(sol.y.T - base).max()))
            res = conjugator_ode(fp, x0, T, tol)
            rate = max(rate, res.max_rate)
            cerr = max(cerr, res.conjugation_error)
        rows.append(ClosenessRow(float(i0), T, dist, rate, cerr))
    i0s = [r.i0 for r in rows]
    d_exp = _slope(i0s, [max(r.sup_distance, 1e-300) for r in rows]) if len(rows) > 1 else math.nan
    r_exp = _slope(i0s, [max(r.sup_rate, 1e-300) for r in rows]) if len(rows) > 1 else math.nan
    return ClosenessReport(rows, d_exp, r_exp, m - 3)
