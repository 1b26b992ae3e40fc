"""Linear algebra of sl2(R), its dual, and PSL2(R).

Basis of the Lie algebra (trace-free 2x2 matrices)::

    X = [[0, 1], [0, 0]],  Y = [[0, 0], [1, 0]],  Z = [[1, 0], [0, -1]]

so that ``x X + y Y + z Z`` is the matrix ``[[z, x], [y, -z]]``.  The
bracket used throughout is the right-invariant one, i.e. minus the matrix
commutator: [X, Y] = -Z, [X, Z] = 2X, [Y, Z] = -2Y.

Covectors ``(xi, eta, zeta)`` are coordinates on the dual, paired with
``(x, y, z)``.  The induced Lie-Poisson structure is

    {xi, eta} = zeta,  {xi, zeta} = -2 xi,  {eta, zeta} = 2 eta.
"""
import math
from typing import NamedTuple

import numpy as np

from .errors import NotInSubgroup, ParabolicGenerator

DET_TOL = 1e-12
PARABOLIC_EPS = 1e-14


class AlgebraElement(NamedTuple):
    x: float
    y: float
    z: float

    def matrix(self) -> np.ndarray:
        return algebra_matrix(self)

    @classmethod
    def from_matrix(cls, m) -> "AlgebraElement":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 1]), float(m[1, 0]), float(0.5 * (m[0, 0] - m[1, 1])))


class Covector(NamedTuple):
    xi: float
    eta: float
    zeta: float

    def __neg__(self):
        return Covector(-self.xi, -self.eta, -self.zeta)


class Psl2Element(NamedTuple):
    """A 2x2 matrix of determinant one, modulo sign.

    Build instances with :meth:`from_matrix`, which renormalizes the
    determinant and picks the canonical sign (first nonzero of a, b, c, d
    positive).  The plain constructor stores the entries verbatim.
    """

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_matrix(cls, m) -> "Psl2Element":
        m = np.asarray(m, dtype=float)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        # for large entries det is lost to cancellation; trust the input then
        noise = 8.0 * np.finfo(float).eps * float(np.abs(m).max()) ** 2
        if det > noise:
            m = m / math.sqrt(det)
        elif noise < 1e-3:
            raise ValueError(f"matrix has non-positive determinant {det!r}")
        flat = m.reshape(4)
        for v in flat:
            if v != 0.0:
                if v < 0.0:
                    flat = -flat
                break
        return cls(*(float(v) for v in flat))

    @classmethod
    def identity(cls) -> "Psl2Element":
        return cls(1.0, 0.0, 0.0, 1.0)

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "Psl2Element") -> "Psl2Element":
        return Psl2Element.from_matrix(self.matrix() @ other.matrix())

    def inverse(self) -> "Psl2Element":
        return Psl2Element.from_matrix(np.array([[self.d, -self.b], [-self.c, self.a]]))


X = AlgebraElement(1.0, 0.0, 0.0)
Y = AlgebraElement(0.0, 1.0, 0.0)
Z = AlgebraElement(0.0, 0.0, 1.0)


def algebra_matrix(u) -> np.ndarray:
    x, y, z = u
    return np.array([[z, x], [y, -z]], dtype=float)


def algebra_bracket(u, v) -> AlgebraElement:
    """Right-invariant bracket: minus the matrix commutator."""
    U, V = algebra_matrix(u), algebra_matrix(v)
    return AlgebraElement.from_matrix(-(U @ V - V @ U))


def poisson_tensor(p) -> np.ndarray:
    """Matrix P(p) with {f, g}(p) = grad f . P(p) grad g."""
    xi, eta, zeta = p
    return np.array(
        [
            [0.0, zeta, -2.0 * xi],
            [-zeta, 0.0, 2.0 * eta],
            [2.0 * xi, -2.0 * eta, 0.0],
        ]
    )


def lie_poisson_bracket(grad_f, grad_g, p) -> float:
    return float(np.asarray(grad_f, float) @ poisson_tensor(p) @ np.asarray(grad_g, float))


def casimir(p) -> float:
    xi, eta, zeta = p
    return 0.5 * zeta * zeta + 2.0 * xi * eta


def casimir_gradient(p) -> np.ndarray:
    xi, eta, zeta = p
    return np.array([2.0 * eta, 2.0 * xi, zeta])


def gstar(p) -> float:
    xi, eta, _ = p
    return xi * xi + eta * eta


def gstar_gradient(p) -> np.ndarray:
    xi, eta, _ = p
    return np.array([2.0 * xi, 2.0 * eta, 0.0])


def a_matrix(p) -> AlgebraElement:
    """Generator of the Casimir flow at ``p``: zeta Z + 2 xi Y + 2 eta X."""
    xi, eta, zeta = p
    u = AlgebraElement(2.0 * eta, 2.0 * xi, zeta)
    m = algebra_matrix(u)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    c = casimir(p)
    assert abs(c + 0.5 * det) <= 1e-12 * max(1.0, abs(c)), "Cas != -det(A)/2"
    return u


def expm_traceless(m: np.ndarray, t: float) -> np.ndarray:
    """exp(t m) for a trace-free 2x2 matrix, closed form, no normalization."""
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) < PARABOLIC_EPS:
        # U^2 = -det I, so the series truncates after the quadratic term
        return (1.0 - 0.5 * t * t * det) * np.eye(2) + t * m
    if det < 0.0:
        mu = math.sqrt(-det)
        return math.cosh(t * mu) * np.eye(2) + (math.sinh(t * mu) / mu) * m
    mu = math.sqrt(det)
    return math.cos(t * mu) * np.eye(2) + (math.sin(t * mu) / mu) * m


def exp_traceless(u, t: float) -> Psl2Element:
    return Psl2Element.from_matrix(expm_traceless(algebra_matrix(u), t))


def log_in_subgroup(h, u, tol: float = 1e-9, projective: bool = True) -> float:
    """Parameter s with exp(s u) = h (up to sign when ``projective``).

    Hyperbolic generators give a unique real s.  Elliptic ones give s in
    [0, pi/mu) when ``projective`` (the PSL2 period), else in [0, 2 pi/mu)
    with the sign of ``h`` taken literally.  The residual is measured
    relative to ``max(1, |h|)``.
    """
    H = h.matrix() if isinstance(h, Psl2Element) else np.asarray(h, dtype=float)
    M = algebra_matrix(u)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det) < PARABOLIC_EPS:
        raise ParabolicGenerator("generator has zero determinant")
    mm = float(np.sum(M * M))
    tr = H[0, 0] + H[1, 1]
    if det < 0.0:
        mu = math.sqrt(-det)
        if tr < 0.0 and not projective:
            raise NotInSubgroup("negative trace is not on a hyperbolic subgroup in SL2")
        Ht = -H if tr < 0.0 else H
        c = 0.5 * (Ht[0, 0] + Ht[1, 1])
        k = float(np.sum((Ht - c * np.eye(2)) * M)) / mm
        s = math.asinh(mu * k) / mu
    else:
        mu = math.sqrt(det)
        c = 0.5 * tr
        k = float(np.sum((H - c * np.eye(2)) * M)) / mm
        phi = math.atan2(mu * k, c)
        period = math.pi if projective else 2.0 * math.pi
        phi = math.fmod(phi, period)
        if phi < 0.0:
            phi += period
        if phi >= period:
            phi -= period
        s = phi / mu
    E = expm_traceless(M, s)
    scale = max(1.0, float(np.linalg.norm(H)))
    res = float(np.linalg.norm(E - H)) / scale
    if projective:
        res = min(res, float(np.linalg.norm(E + H)) / scale)
    if not res <= tol:
        raise NotInSubgroup(f"holonomy residual {res:.3e} exceeds {tol:.1e}")
    return s


def subgroup_residual(h, u, s: float) -> float:
    """Relative distance from h to +-exp(s u)."""
    H = h.matrix() if isinstance(h, Psl2Element) else np.asarray(h, dtype=float)
    E = expm_traceless(algebra_matrix(u), s)
    scale = max(1.0, float(np.linalg.norm(H)))
    return min(float(np.linalg.norm(E - H)), float(np.linalg.norm(E + H))) / scale


def psl2_distance(g, h) -> float:
    G = g.matrix() if isinstance(g, Psl2Element) else np.asarray(g, dtype=float)
    H = h.matrix() if isinstance(h, Psl2Element) else np.asarray(h, dtype=float)
    return min(float(np.abs(G - H).max()), float(np.abs(G + H).max()))
