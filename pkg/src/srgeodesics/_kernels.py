"""Hot loops: adaptive Dormand-Prince 5(4) for the coupled flow on
PSL2 x sl2*, with projection onto the invariant level sets.

State layout (length 7): ``[a, b, c, d, xi, eta, zeta]`` where
``[[a, b], [c, d]]`` is the group element.  The momentum follows the Euler
equations of 1/2 (xi^2 + eta^2); the group follows g' = (xi X + eta Y) g.

Status codes returned by the integrators: 0 ok, 1 step underflow,
2 step budget exhausted, 3 event not found.
"""
import math

import numpy as np

from ._accel import njit

OK = 0
UNDERFLOW = 1
MAX_STEPS = 2
NO_EVENT = 3

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@njit
def euler_rhs(y, out, with_group):
    xi = y[4]
    eta = y[5]
    zeta = y[6]
    out[4] = eta * zeta
    out[5] = -xi * zeta
    out[6] = 2.0 * (xi * xi - eta * eta)
    if with_group:
        out[0] = xi * y[2]
        out[1] = xi * y[3]
        out[2] = eta * y[0]
        out[3] = eta * y[1]
    else:
        out[0] = 0.0
        out[1] = 0.0
        out[2] = 0.0
        out[3] = 0.0


@njit
def dp_step(y, h, with_group, k1, k2, k3, k4, k5, k6, k7, tmp, ynew):
    """One Dormand-Prince step from y (k1 = f(y) must be filled).

    Writes the 5th-order solution to ``ynew`` and f(ynew) to ``k7``;
    returns nothing, error estimate is formed by the caller from k1..k7.
    """
    n = y.shape[0]
    for i in range(n):
        tmp[i] = y[i] + h * _A21 * k1[i]
    euler_rhs(tmp, k2, with_group)
    for i in range(n):
        tmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
    euler_rhs(tmp, k3, with_group)
    for i in range(n):
        tmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
    euler_rhs(tmp, k4, with_group)
    for i in range(n):
        tmp[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
    euler_rhs(tmp, k5, with_group)
    for i in range(n):
        tmp[i] = y[i] + h * (
            _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
        )
    euler_rhs(tmp, k6, with_group)
    for i in range(n):
        ynew[i] = y[i] + h * (
            _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
        )
    euler_rhs(ynew, k7, with_group)


@njit
def _error_norm(y, ynew, h, k1, k3, k4, k5, k6, k7, rtol, atol):
    acc = 0.0
    n = y.shape[0]
    for i in range(n):
        e = h * (
            _E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i]
        )
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        acc += (e / sc) ** 2
    return math.sqrt(acc / n)


@njit
def project(y, n0, c0, with_group):
    """Pull the momentum back to {gstar = n0, Cas = c0}; renormalize det g."""
    for _ in range(2):
        xi = y[4]
        eta = y[5]
        zeta = y[6]
        r1 = xi * xi + eta * eta - n0
        r2 = 0.5 * zeta * zeta + 2.0 * xi * eta - c0
        s = xi * xi + eta * eta
        m11 = 4.0 * s
        m12 = 8.0 * xi * eta
        m22 = 4.0 * s + zeta * zeta
        det = m11 * m22 - m12 * m12
        done = False
        if det > 1e-8:
            l1 = (m22 * r1 - m12 * r2) / det
            l2 = (-m12 * r1 + m11 * r2) / det
            d0 = -(2.0 * xi * l1 + 2.0 * eta * l2)
            d1 = -(2.0 * eta * l1 + 2.0 * xi * l2)
            d2 = -(zeta * l2)
            if abs(d0) + abs(d1) + abs(d2) < 1e-6:
                y[4] = xi + d0
                y[5] = eta + d1
                y[6] = zeta + d2
                done = True
        if not done and s > 0.0 and n0 > 0.0:
            f = math.sqrt(n0 / s)
            y[4] = xi * f
            y[5] = eta * f
    if with_group:
        det = y[0] * y[3] - y[1] * y[2]
        big = max(max(abs(y[0]), abs(y[1])), max(abs(y[2]), abs(y[3])))
        # skip once the determinant is swamped by cancellation
        if det > 0.0 and big < 1e4:
            f = 1.0 / math.sqrt(det)
            for i in range(4):
                y[i] *= f


@njit
def _initial_step(y, f0, t_span, rtol, atol):
    d0 = 0.0
    d1 = 0.0
    n = y.shape[0]
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = math.sqrt(d0 / n)
    d1 = math.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    return min(h, abs(t_span))


@njit
def integrate(y0, t_end, rtol, atol, h_max, with_group, do_project, record, max_steps):
    """Integrate from t = 0 to ``t_end`` (either sign).

    Returns ``(y, status, n_steps, ts, ys)``; when ``record`` is set, ``ts``
    and ``ys`` hold every accepted state (including the initial one),
    otherwise they have length one.
    """
    n = y0.shape[0]
    y = y0.copy()
    n0 = y[4] * y[4] + y[5] * y[5]
    c0 = 0.5 * y[6] * y[6] + 2.0 * y[4] * y[5]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    tmp = np.empty(n)
    ynew = np.empty(n)
    cap = 1024 if record else 1
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    ts[0] = 0.0
    for i in range(n):
        ys[0, i] = y[i]
    nrec = 1
    if t_end == 0.0:
        return y, OK, 0, ts[:nrec], ys[:nrec]
    direction = 1.0 if t_end > 0.0 else -1.0
    span = abs(t_end)
    euler_rhs(y, k1, with_group)
    h = _initial_step(y, k1, span, rtol, atol)
    if h_max > 0.0:
        h = min(h, h_max)
    t = 0.0
    steps = 0
    while t < span:
        if steps >= max_steps:
            return y, MAX_STEPS, steps, ts[:nrec], ys[:nrec]
        last = False
        if t + h >= span:
            h = span - t
            last = True
        # a short final sliver is fine; a collapsing step before the end is not
        if not last and h < 1e-14 * max(1.0, t):
            return y, UNDERFLOW, steps, ts[:nrec], ys[:nrec]
        dp_step(y, direction * h, with_group, k1, k2, k3, k4, k5, k6, k7, tmp, ynew)
        err = _error_norm(y, ynew, h, k1, k3, k4, k5, k6, k7, rtol, atol)
        if err <= 1.0:
            t = span if last else t + h
            for i in range(n):
                y[i] = ynew[i]
            if do_project:
                project(y, n0, c0, with_group)
                euler_rhs(y, k1, with_group)
            else:
                for i in range(n):
                    k1[i] = k7[i]
            steps += 1
            if record:
                if nrec >= cap:
                    cap2 = 2 * cap
                    ts2 = np.empty(cap2)
                    ys2 = np.empty((cap2, n))
                    ts2[:cap] = ts
                    ys2[:cap, :] = ys
                    ts = ts2
                    ys = ys2
                    cap = cap2
                ts[nrec] = direction * t
                for i in range(n):
                    ys[nrec, i] = y[i]
                nrec += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
        h = h * fac
        if h_max > 0.0:
            h = min(h, h_max)
    return y, OK, steps, ts[:nrec], ys[:nrec]


@njit
def _wrap(a):
    while a > math.pi:
        a -= 2.0 * math.pi
    while a <= -math.pi:
        a += 2.0 * math.pi
    return a


@njit
def reduced_period(p0, rtol, atol, h_max, winding, t_max, max_steps):
    """First return time of the momentum orbit through p0.

    The polar angle of (xi, eta) is tracked continuously; the period is the
    first time it decreases through ``theta0 - 2 pi winding`` (winding 0 for
    librations, 1 for rotations with zeta > 0).  Returns ``(T, status)``.
    """
    n = 7
    y = np.zeros(n)
    y[0] = 1.0
    y[3] = 1.0
    y[4] = p0[0]
    y[5] = p0[1]
    y[6] = p0[2]
    n0 = y[4] * y[4] + y[5] * y[5]
    c0 = 0.5 * y[6] * y[6] + 2.0 * y[4] * y[5]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    tmp = np.empty(n)
    ynew = np.empty(n)
    yprev = np.empty(n)
    theta0 = math.atan2(y[5], y[4])
    target = theta0 - 2.0 * math.pi * winding
    theta = theta0
    euler_rhs(y, k1, False)
    h = _initial_step(y, k1, t_max, rtol, atol)
    if h_max > 0.0:
        h = min(h, h_max)
    t = 0.0
    steps = 0
    while t < t_max and steps < max_steps:
        dp_step(y, h, False, k1, k2, k3, k4, k5, k6, k7, tmp, ynew)
        err = _error_norm(y, ynew, h, k1, k3, k4, k5, k6, k7, rtol, atol)
        if err <= 1.0:
            for i in range(n):
                yprev[i] = y[i]
                y[i] = ynew[i]
            project(y, n0, c0, False)
            theta_new = theta + _wrap(math.atan2(y[5], y[4]) - math.atan2(yprev[5], yprev[4]))
            if theta > target and theta_new <= target:
                # Illinois iteration on the step length from yprev
                lo = 0.0
                hi = h
                flo = theta - target
                fhi = theta_new - target
                side = 0
                tau = h
                for _ in range(100):
                    tau = (lo * fhi - hi * flo) / (fhi - flo)
                    euler_rhs(yprev, k1, False)
                    dp_step(yprev, tau, False, k1, k2, k3, k4, k5, k6, k7, tmp, ynew)
                    ft = theta + _wrap(
                        math.atan2(ynew[5], ynew[4]) - math.atan2(yprev[5], yprev[4])
                    ) - target
                    if ft == 0.0 or hi - lo < 1e-15 * max(1.0, t):
                        break
                    if (ft > 0.0) == (flo > 0.0):
                        lo = tau
                        flo = ft
                        if side == -1:
                            fhi *= 0.5
                        side = -1
                    else:
                        hi = tau
                        fhi = ft
                        if side == 1:
                            flo *= 0.5
                        side = 1
                    if abs(ft) < 1e-16:
                        break
                return t + tau, OK
            theta = theta_new
            t += h
            euler_rhs(y, k1, False)
            steps += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
        h = h * fac
        if h_max > 0.0:
            h = min(h, h_max)
        if h < 1e-14 * max(1.0, t):
            return t, UNDERFLOW
    return t, NO_EVENT
