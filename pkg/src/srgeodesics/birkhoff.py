"""Normal-form model near a closed Reeb orbit.

Near a nondegenerate closed Reeb orbit of period T0 the co-metric reads
F(rho, I) = rho I + sum_j kappa_j I^j rho^(2 - j), with I = u^2 + v^2 the
transverse action.  On F = 1 a geodesic turns by
Delta theta(I) = T(I) dF/dI during one return, where T(I) = 2 T0 / dF/drho;
Delta theta = 2 k pi picks the closed geodesics, whose lengths are T(I_k).
"""
import math
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    IllConditionedFit,
    InvalidModel,
    NewtonDivergence,
    NotAreaPreserving,
    ValidationError,
)


def check_nondegenerate(L) -> bool:
    L = np.asarray(L, dtype=float)
    return abs(float(np.linalg.det(L - np.eye(2)))) > 1e-10


class ModelHamiltonian(NamedTuple):
    t0: float
    kappa: tuple = ()  # kappa[0] multiplies I^2, kappa[1] multiplies I^3 rho^-1, ...

    def F(self, rho, i):
        out = rho * i
        for j, k in enumerate(self.kappa, start=2):
            out = out + k * i**j * rho ** (2 - j)
        return out

    def derivatives(self, rho, i):
        """(F, F_rho, F_I, F_rhorho, F_rhoI, F_II)."""
        F = rho * i
        Fr, Fi = i, rho
        Frr, Fri, Fii = 0.0, 1.0, 0.0
        for j, k in enumerate(self.kappa, start=2):
            if k == 0.0:
                continue
            F += k * i**j * rho ** (2 - j)
            Fr += k * (2 - j) * i**j * rho ** (1 - j)
            Fi += k * j * i ** (j - 1) * rho ** (2 - j)
            Frr += k * (2 - j) * (1 - j) * i**j * rho ** (-j)
            Fri += k * (2 - j) * j * i ** (j - 1) * rho ** (1 - j)
            Fii += k * j * (j - 1) * i ** (j - 2) * rho ** (2 - j)
        return F, Fr, Fi, Frr, Fri, Fii


class ReebSectionModel(NamedTuple):
    pmap: Callable
    lin: np.ndarray
    rtime: Callable

    def check(self, h: float = 1e-6, tol: float = 1e-6):
        q0 = np.asarray(self.pmap(np.zeros(2)), dtype=float)
        if float(np.abs(q0).max()) > 1e-12:
            raise ValidationError("the section map must fix q = 0")
        J = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            J[:, j] = (np.asarray(self.pmap(e)) - np.asarray(self.pmap(-e))) / (2 * h)
        if float(np.abs(J - np.asarray(self.lin)).max()) > tol:
            raise ValidationError("lin does not match the Jacobian of pmap at 0")
        return self


def linear_section_model(L, t0: float, rtime: Optional[Callable] = None) -> ReebSectionModel:
    L = np.asarray(L, dtype=float)
    if rtime is None:
        rtime = lambda q: t0
    return ReebSectionModel(lambda q: L @ np.asarray(q, dtype=float), L, rtime)


class ModelState(NamedTuple):
    q: np.ndarray
    theta: float
    i: float


def poincare_map_p0(s: ModelState, model: ReebSectionModel) -> ModelState:
    if not s.i > 0.0:
        raise ValidationError(f"action must be positive, got {s.i}")
    q = np.asarray(s.q, dtype=float)
    theta = math.fmod(s.theta + 2.0 * model.rtime(q) / (s.i * s.i), 2.0 * math.pi)
    if theta < 0.0:
        theta += 2.0 * math.pi
    return ModelState(np.asarray(model.pmap(q), dtype=float), theta, s.i)


def solve_rho(H: ModelHamiltonian, i: float, tol: float = 1e-15, max_iter: int = 60) -> float:
    """rho with F(rho, i) = 1, Newton from the integrable value 1/i."""
    rho = 1.0 / i
    if not H.kappa:
        return rho
    for _ in range(max_iter):
        F, Fr = H.derivatives(rho, i)[:2]
        if not Fr > 0.0:
            raise InvalidModel(f"dF/drho = {Fr:.3e} <= 0 at I = {i}")
        step = (F - 1.0) / Fr
        rho -= step
        if abs(step) <= tol * abs(rho):
            return rho
    raise NewtonDivergence(f"rho(I) did not converge at I = {i}")


def turning(H: ModelHamiltonian, i: float):
    """(Delta theta, d Delta theta / dI, T) at action i on F = 1."""
    rho = solve_rho(H, i)
    _, Fr, Fi, Frr, Fri, Fii = H.derivatives(rho, i)
    if not Fr > 0.0:
        raise InvalidModel(f"dF/drho = {Fr:.3e} <= 0 at I = {i}")
    T = 2.0 * H.t0 / Fr
    drho = -Fi / Fr
    dFi = Fii + Fri * drho
    dFr = Fri + Frr * drho
    dtheta = T * Fi
    ddtheta = 2.0 * H.t0 * (dFi * Fr - Fi * dFr) / (Fr * Fr)
    return dtheta, ddtheta, T


def closure_solve(k: int, H: ModelHamiltonian, tol: float = 1e-9, max_iter: int = 60) -> float:
    """Action I_k with Delta theta(I_k) = 2 k pi (Newton from sqrt(T0 / k pi))."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    target = 2.0 * k * math.pi
    i = math.sqrt(H.t0 / (k * math.pi))
    for _ in range(max_iter):
        dth, ddth, _ = turning(H, i)
        r = dth - target
        if abs(r) <= tol:
            # one more step costs nothing and tightens I to roundoff
            i_new = i - r / ddth
            if i_new > 0.0 and abs(turning(H, i_new)[0] - target) <= abs(r):
                i = i_new
            return i
        if ddth == 0.0:
            raise NewtonDivergence(f"flat closure equation at k = {k}")
        step = r / ddth
        while i - step <= 0.0:
            step *= 0.5
        i -= step
    raise NewtonDivergence(f"closure Newton did not converge for k = {k}")


def length_of(k: int, H: ModelHamiltonian, tol: float = 1e-9) -> float:
    return turning(H, closure_solve(k, H, tol))[2]


def select_k0(H: ModelHamiltonian, radius: float = 1.0) -> int:
    """Smallest k whose initial action sqrt(T0 / k pi) is below radius / 2."""
    return max(1, math.floor(H.t0 / (math.pi * (0.5 * radius) ** 2)) + 1)


class LengthExpansion(NamedTuple):
    k_range: np.ndarray
    i_values: np.ndarray
    lengths: np.ndarray
    coefficients: np.ndarray
    max_residual: float


def fit_expansion(ks, deltas, n_terms: int):
    """Least squares of deltas on {k^(-j/2)}, j < n_terms.  Returns
    (coefficients, residuals)."""
    ks = np.asarray(ks, dtype=float)
    A = ks[:, None] ** (-0.5 * np.arange(n_terms))[None, :]
    if np.linalg.cond(A.T @ A) > 1e12:
        raise IllConditionedFit("normal equations are too ill-conditioned")
    coef = np.linalg.lstsq(A, deltas, rcond=None)[0]
    return coef, deltas - A @ coef


def expansion_fit(H: ModelHamiltonian, k_min: int, k_max: int, n_terms: int, tol: float = 1e-9) -> LengthExpansion:
    if k_max - k_min < 4 * n_terms:
        raise ValidationError("k range too short for the requested number of terms")
    ks = np.arange(k_min, k_max + 1)
    iv = np.array([closure_solve(int(k), H, tol) for k in ks])
    ls = np.array([turning(H, i)[2] for i in iv])
    deltas = ls - 2.0 * np.sqrt(math.pi * ks * H.t0)
    coef, res = fit_expansion(ks, deltas, n_terms)
    return LengthExpansion(ks, iv, ls, coef, float(np.abs(res).max()))


def birkhoff_table(H: ModelHamiltonian, k_min: int, k_max: int, tol: float = 1e-9):
    """Rows (k, I_k, l_k, l_k - 2 sqrt(pi k T0), Delta theta residual)."""
    rows = []
    for k in range(k_min, k_max + 1):
        i = closure_solve(k, H, tol)
        dth, _, T = turning(H, i)
        rows.append((k, i, T, T - 2.0 * math.sqrt(math.pi * k * H.t0), dth - 2.0 * k * math.pi))
    return rows


class AnnulusMap(NamedTuple):
    """Map (theta, J) -> (theta', J') on R/2piZ x [j_lo, j_hi], theta' lifted."""

    apply: Callable
    j_lo: float
    j_hi: float
    jac: Optional[Callable] = None


def kicked_perturbation(eps: float, t0: float, mode: int = 1, phase: float = 0.0):
    """delta J = eps sin(mode theta + phase) followed by the twist: delta theta
    = 2 T0 delta J.  The composite map is exactly area preserving."""
    def dJ(theta, J):
        return eps * np.sin(mode * theta + phase)

    def dtheta(theta, J):
        return 2.0 * t0 * dJ(theta, J)

    return dtheta, dJ


def _area_defect(perturbation, t0, j_lo, j_hi, n=24, h=1e-5):
    dth, dJ = perturbation
    worst = 0.0
    for th in np.linspace(0.0, 2.0 * math.pi, n, endpoint=False):
        for J in np.linspace(j_lo, j_hi, n):
            a_t = (dth(th + h, J) - dth(th - h, J)) / (2 * h)
            a_j = (dth(th, J + h) - dth(th, J - h)) / (2 * h)
            b_t = (dJ(th + h, J) - dJ(th - h, J)) / (2 * h)
            b_j = (dJ(th, J + h) - dJ(th, J - h)) / (2 * h)
            det = (1.0 + a_t) * (1.0 + b_j) - (2.0 * t0 + a_j) * b_t
            worst = max(worst, abs(det - 1.0))
    return worst


def s_map(k: int, t0: float, perturbation=None, width: Optional[float] = None, area_tol: float = 1e-10) -> AnnulusMap:
    """(theta, J) -> (theta + 2 T0 J - 2 k pi + dtheta, J + dJ) near J = k pi / T0.

    The default annulus is J in k pi / T0 -+ pi / (2 T0), where the
    unperturbed angular shift runs from -pi to +pi.
    """
    if width is None:
        width = 0.5 * math.pi / t0
    jc = k * math.pi / t0
    j_lo, j_hi = jc - width, jc + width
    if perturbation is None:
        zero = lambda th, J: 0.0 * th
        perturbation = (zero, zero)
    defect = _area_defect(perturbation, t0, j_lo, j_hi)
    if defect > area_tol:
        raise NotAreaPreserving(f"Jacobian determinant off by {defect:.2e}")
    dth, dJ = perturbation
    shift = 2.0 * k * math.pi

    def apply(theta, J):
        return theta + 2.0 * t0 * J - shift + dth(theta, J), J + dJ(theta, J)

    return AnnulusMap(apply, j_lo, j_hi)
