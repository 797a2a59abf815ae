"""Hermite/Laguerre zeros and the stationary configurations they induce.

Zeros are computed as eigenvalues of the symmetric three-term-recurrence
(Jacobi) matrix and then polished with a few vectorised Newton steps on the
recurrence-evaluated polynomial; this is stable up to degree 200 without
tables.  The stationary ("frozen") configuration of each system is the
maximiser of a strictly concave-along-the-path objective and is found by
damped Newton started from the polynomial-zero formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .chamber import (
    BoundaryPoint,
    ChamberPoint,
    MissingNu,
    RootSystemSpec,
    _recip_sum_cross,
    _recip_sum_diff,
    as_point,
)
from .errors import BesselFreezeError

MAX_DEGREE = 200


class SizeOutOfRange(BesselFreezeError):
    """Polynomial degree outside [1, 200]."""


class AlphaOutOfRange(BesselFreezeError):
    """Laguerre parameter below -1."""


class NoConvergence(BesselFreezeError):
    """Newton iteration failed; carries the iterate history."""

    def __init__(self, message, iterates=None):
        super().__init__(message)
        self.iterates = iterates or []


@dataclass(frozen=True)
class FixedPointResult:
    """Stationary configuration with its defect and iteration count."""

    y: ChamberPoint
    residual: float
    iterations: int


def _check_degree(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_DEGREE:
        raise SizeOutOfRange(f"degree must be an integer in [1, {MAX_DEGREE}], got {n}")


def _rescale(p_prev, p, dp_prev, dp):
    big = np.abs(p) > 1e100
    if big.any():
        scale = np.where(big, 1e-100, 1.0)
        p_prev = p_prev * scale
        p = p * scale
        dp_prev = dp_prev * scale
        dp = dp * scale
    return p_prev, p, dp_prev, dp


def _hermite_newton_ratio(n: int, x: np.ndarray) -> np.ndarray:
    """p_n(x)/p_n'(x) via the orthonormal recurrence (weight e^{-x^2})."""
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    dp_prev = np.zeros_like(x)
    dp = np.zeros_like(x)
    for m in range(n):
        b = math.sqrt(m / 2.0)
        b_next = math.sqrt((m + 1) / 2.0)
        p_next = (x * p - b * p_prev) / b_next
        dp_next = (p + x * dp - b * dp_prev) / b_next
        p_prev, p, dp_prev, dp = p, p_next, dp, dp_next
        p_prev, p, dp_prev, dp = _rescale(p_prev, p, dp_prev, dp)
    return p / dp


def _laguerre_newton_ratio(n: int, alpha: float, x: np.ndarray) -> np.ndarray:
    """p_n(x)/p_n'(x) via the orthonormal recurrence (weight x^alpha e^{-x})."""
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    dp_prev = np.zeros_like(x)
    dp = np.zeros_like(x)
    for m in range(n):
        a = 2.0 * m + alpha + 1.0
        b = math.sqrt(m * (m + alpha))
        b_next = math.sqrt((m + 1) * (m + 1 + alpha))
        p_next = ((x - a) * p - b * p_prev) / b_next
        dp_next = (p + (x - a) * dp - b * dp_prev) / b_next
        p_prev, p, dp_prev, dp = p, p_next, dp, dp_next
        p_prev, p, dp_prev, dp = _rescale(p_prev, p, dp_prev, dp)
    return p / dp


def hermite_zeros(n: int) -> np.ndarray:
    """The n real zeros of the degree-n Hermite polynomial, descending.

    Convention: orthogonal with respect to e^{-x^2}, so H_2 has zeros
    +-1/sqrt(2).  The output is exactly antisymmetric.
    """
    _check_degree(n)
    if n == 1:
        return np.zeros(1)
    off = np.sqrt(np.arange(1, n) / 2.0)
    z = eigh_tridiagonal(np.zeros(n), off, eigvals_only=True)
    for _ in range(3):
        z = z - _hermite_newton_ratio(n, z)
    z = np.sort(z)[::-1]
    return 0.5 * (z - z[::-1])


def laguerre_zeros(n: int, alpha: float) -> np.ndarray:
    """The n real zeros of the degree-n generalised Laguerre polynomial, descending.

    Requires alpha > -1, or exactly alpha = -1, in which case the zeros are
    {0} together with the zeros of the degree-(n-1) polynomial at alpha = 1.
    """
    _check_degree(n)
    alpha = float(alpha)
    if alpha < -1.0:
        raise AlphaOutOfRange(f"alpha must be > -1 or exactly -1, got {alpha}")
    if alpha == -1.0:
        inner = laguerre_zeros(n - 1, 1.0) if n > 1 else np.empty(0)
        return np.concatenate([inner, [0.0]])
    diag = 2.0 * np.arange(n) + alpha + 1.0
    m = np.arange(1, n)
    off = np.sqrt(m * (m + alpha))
    z = eigh_tridiagonal(diag, off, eigvals_only=True)
    for _ in range(3):
        z = z - _laguerre_newton_ratio(n, alpha, z)
    return np.sort(z)[::-1]


# ---------------------------------------------------------------------------
# stationary configurations
# ---------------------------------------------------------------------------

def fixed_point_from_zeros(spec: RootSystemSpec, nu: float | None = None) -> np.ndarray:
    """The closed-form stationary configuration built from polynomial zeros.

    A: sqrt(2) * Hermite zeros.  B (nu > 0): componentwise
    sqrt(2 * Laguerre zeros at alpha = nu - 1).  B (nu = 0) and D: last
    coordinate 0, the rest sqrt(2 * Laguerre zeros at alpha = 1) of one
    degree less.
    """
    n = spec.n
    if spec.kind == "A":
        return math.sqrt(2.0) * hermite_zeros(n)
    if spec.kind == "B":
        if nu is None:
            raise MissingNu("type B needs nu >= 0")
        if nu < 0:
            raise ValueError(f"nu must be >= 0, got {nu}")
        if nu > 0:
            return np.sqrt(2.0 * laguerre_zeros(n, nu - 1.0))
    # D, or B at nu = 0 (same equations with the last coordinate pinned to 0)
    if n == 1:
        return np.zeros(1)
    return np.concatenate([np.sqrt(2.0 * laguerre_zeros(n - 1, 1.0)), [0.0]])


def frozen_objective(spec: RootSystemSpec, x, nu: float | None = None) -> float:
    """The concentration objective whose unique maximiser is the frozen configuration.

    A: 2 sum_{i<j} ln(x_i-x_j) - |x|^2/2; B adds the squared-difference pair
    terms and 2 nu sum ln x_i; D uses squared differences only.
    """
    pt = as_point(spec, x)
    v = pt.coords
    if not pt.interior():
        raise BoundaryPoint(f"{v} is not strictly interior")
    iu, ju = np.triu_indices(spec.n, k=1)
    if spec.kind == "A":
        return float(2.0 * np.log(v[iu] - v[ju]).sum() - 0.5 * v @ v)
    if spec.kind == "B":
        if nu is None:
            raise MissingNu("type B needs nu")
        axis = 2.0 * nu * np.log(v).sum() if nu > 0 else 0.0
        return float(2.0 * np.log(v[iu] ** 2 - v[ju] ** 2).sum() + axis - 0.5 * v @ v)
    return float(2.0 * np.log(v[iu] ** 2 - v[ju] ** 2).sum() - 0.5 * v @ v)


def _objective_a(y):
    n = len(y)
    iu, ju = np.triu_indices(n, k=1)
    d = y[iu] - y[ju]
    if d.size and d.min() <= 0:
        return -np.inf
    return 2.0 * np.log(d).sum() - 0.5 * y @ y


def _grad_a(y):
    return 2.0 * _recip_sum_diff(y) - y


def _hess_a(y):
    d = y[:, None] - y[None, :]
    np.fill_diagonal(d, 1.0)
    off = 2.0 / d**2
    np.fill_diagonal(off, 0.0)
    h = off.copy()
    np.fill_diagonal(h, -1.0 - off.sum(axis=1))
    return h


def _defect_a(y):
    return float(np.abs(0.5 * y - _recip_sum_diff(y)).max()) if len(y) > 1 else abs(0.5 * y[0])


def _objective_b(y, nu):
    n = len(y)
    if y.min() <= 0:
        return -np.inf
    iu, ju = np.triu_indices(n, k=1)
    d = y[iu] ** 2 - y[ju] ** 2
    if d.size and d.min() <= 0:
        return -np.inf
    return 2.0 * np.log(d).sum() + 2.0 * nu * np.log(y).sum() - 0.5 * y @ y


def _grad_b(y, nu):
    return 2.0 * (_recip_sum_diff(y) + _recip_sum_cross(y)) + 2.0 * nu / y - y


def _hess_b(y, nu):
    d = y[:, None] - y[None, :]
    s = y[:, None] + y[None, :]
    np.fill_diagonal(d, 1.0)
    np.fill_diagonal(s, 1.0)
    inv_d2 = 1.0 / d**2
    inv_s2 = 1.0 / s**2
    np.fill_diagonal(inv_d2, 0.0)
    np.fill_diagonal(inv_s2, 0.0)
    h = 2.0 * (inv_d2 - inv_s2)
    np.fill_diagonal(h, -2.0 * (inv_d2 + inv_s2).sum(axis=1) - 2.0 * nu / y**2 - 1.0)
    return h


def _defect_b(y, nu):
    rhs = _recip_sum_diff(y) + _recip_sum_cross(y) + nu / y
    return float(np.abs(0.5 * y - rhs).max())


def _defect_axis_pinned(y):
    """Defect of the pinned-axis stationary system 4 sum_j 1/(y_i^2-y_j^2) = 1.

    y is the full configuration with y[-1] == 0; the equations run over the
    free coordinates.
    """
    u = y[:-1]
    if u.size == 0:
        return 0.0
    sq = y**2
    d = sq[:-1, None] - sq[None, :]
    np.fill_diagonal(d[:, :-1], 1.0)
    inv = 1.0 / d
    np.fill_diagonal(inv[:, :-1], 0.0)
    return float(np.abs(4.0 * inv.sum(axis=1) - 1.0).max())


def _newton_maximize(obj, grad, hess, defect, y0, tol, max_iter):
    y = np.array(y0, dtype=float)
    iterates = [y.copy()]
    for it in range(max_iter):
        res = defect(y)
        if res <= tol:
            return y, res, it
        step = np.linalg.solve(hess(y), -grad(y))
        w0 = obj(y)
        alpha = 1.0
        moved = False
        while alpha >= 2.0**-20:
            cand = y + alpha * step
            if obj(cand) > w0:
                y = cand
                moved = True
                break
            alpha *= 0.5
        if not moved:
            # at a (numerical) stationary point the objective cannot increase;
            # accept the full step only if it still shrinks the defect
            cand = y + step
            if np.isfinite(obj(cand)) and defect(cand) < res:
                y = cand
            else:
                raise NoConvergence(
                    f"damped Newton stalled at defect {res:.3e} after {it} iterations",
                    iterates,
                )
        iterates.append(y.copy())
    raise NoConvergence(
        f"stationary defect {defect(y):.3e} > {tol:.1e} after {max_iter} iterations",
        iterates,
    )


def frozen_fixed_point(spec: RootSystemSpec, nu: float | None = None,
                       tol: float = 1e-12, max_iter: int = 100) -> FixedPointResult:
    """The unique maximiser of :func:`frozen_objective` in the chamber.

    Damped Newton on the stationary system, initialised from
    :func:`fixed_point_from_zeros`.  For type B, ``nu = 0`` is routed through
    the pinned-axis equations shared with type D.
    """
    n = spec.n
    if spec.kind == "A":
        y0 = fixed_point_from_zeros(spec)
        y, res, it = _newton_maximize(_objective_a, _grad_a, _hess_a, _defect_a,
                                      y0, tol, max_iter)
        return FixedPointResult(ChamberPoint(spec, y), res, it)
    if spec.kind == "B":
        if nu is None:
            raise MissingNu("type B needs nu >= 0")
        if nu < 0:
            raise ValueError(f"nu must be >= 0, got {nu}")
        if nu > 0:
            y0 = fixed_point_from_zeros(spec, nu)
            y, res, it = _newton_maximize(
                lambda u: _objective_b(u, nu), lambda u: _grad_b(u, nu),
                lambda u: _hess_b(u, nu), lambda u: _defect_b(u, nu),
                y0, tol, max_iter)
            return FixedPointResult(ChamberPoint(spec, y), res, it)
    # D, or B at nu = 0: pin the last coordinate at 0 and solve the reduced
    # system, which coincides with the type-B system at nu = 2 in one fewer
    # coordinate.
    if n == 1:
        return FixedPointResult(ChamberPoint(spec, np.zeros(1)), 0.0, 0)
    u0 = np.sqrt(2.0 * laguerre_zeros(n - 1, 1.0))
    u, _, it = _newton_maximize(
        lambda u: _objective_b(u, 2.0), lambda u: _grad_b(u, 2.0),
        lambda u: _hess_b(u, 2.0), lambda u: _defect_b(u, 2.0),
        u0, tol, max_iter)
    y = np.concatenate([u, [0.0]])
    return FixedPointResult(ChamberPoint(spec, y), _defect_axis_pinned(y), it)


def stationary_defect(spec: RootSystemSpec, y, nu: float | None = None) -> float:
    """Max-norm defect of the stationary system at y (for cross-checks)."""
    coords = np.asarray(y, dtype=float)
    if spec.kind == "A":
        return _defect_a(coords)
    if spec.kind == "B":
        if nu is None:
            raise MissingNu("type B needs nu >= 0")
        if nu > 0:
            return _defect_b(coords, nu)
        return _defect_axis_pinned(coords)
    return _defect_axis_pinned(coords)
