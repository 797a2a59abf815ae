"""Deterministic high-coupling limit dynamics dx/dt = H(x).

Each freezing regime selects the limit field H and the scale parameter
kappa that is sent to infinity:

    A_k     kappa = k      H_i = sum_{j!=i} 1/(x_i-x_j)
    B_beta  kappa = beta   H_i = sum_{j!=i} [1/(x_i-x_j)+1/(x_i+x_j)] + nu/x_i
    B_k1    kappa = k1     H_i = 1/x_i
    D_k     kappa = k      H_i = sum_{j!=i} [1/(x_i-x_j)+1/(x_i+x_j)]

The fields repel from the chamber walls, so an explicit embedded
Runge-Kutta 4(5) integrator with dense output at the requested grid is
sufficient (scipy's RK45; default tolerances 1e-11/1e-11 keep the
accumulated error on [0, 10] near 1e-9).
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np
from scipy.integrate import solve_ivp

from .chamber import (
    BoundaryPoint,
    ChamberPoint,
    Multiplicity,
    RootSystemSpec,
    _recip_sum_cross,
    _recip_sum_diff,
    as_point,
    fixed_ratio_gap_coords,
    in_chamber_mask,
    interior_mask,
)
from .errors import BesselFreezeError
from .polyroots import frozen_fixed_point, hermite_zeros

REGIME_VARIANTS = ("A_k", "B_beta", "B_k1", "D_k")
_REGIME_KIND = {"A_k": "A", "B_beta": "B", "B_k1": "B", "D_k": "D"}


class UnsupportedRegime(BesselFreezeError):
    """The requested operation is not defined for this regime."""


class StepFailure(BesselFreezeError):
    """The adaptive integrator failed (should be unreachable for valid input)."""


@dataclass(frozen=True)
class FreezingRegime:
    """Which multiplicity scale grows, plus the frozen parameters it leaves behind."""

    variant: str
    nu: float | None = None   # B_beta: fixed ratio k1/k2
    k2: float | None = None   # B_k1: fixed pair coupling

    def __post_init__(self):
        if self.variant not in REGIME_VARIANTS:
            raise ValueError(f"variant must be one of {REGIME_VARIANTS}, got {self.variant!r}")
        if self.variant == "B_beta":
            if self.nu is None or not self.nu > 0:
                raise ValueError("B_beta needs nu > 0")
        elif self.nu is not None:
            raise ValueError(f"{self.variant} does not take nu")
        if self.variant == "B_k1":
            if self.k2 is None or not self.k2 > 0:
                raise ValueError("B_k1 needs k2 > 0")
        elif self.k2 is not None:
            raise ValueError(f"{self.variant} does not take k2")

    @classmethod
    def a_k(cls) -> "FreezingRegime":
        return cls("A_k")

    @classmethod
    def b_beta(cls, nu: float) -> "FreezingRegime":
        return cls("B_beta", nu=float(nu))

    @classmethod
    def b_k1(cls, k2: float) -> "FreezingRegime":
        return cls("B_k1", k2=float(k2))

    @classmethod
    def d_k(cls) -> "FreezingRegime":
        return cls("D_k")

    @property
    def kind(self) -> str:
        return _REGIME_KIND[self.variant]

    def multiplicity(self, kappa: float) -> Multiplicity:
        """The coupling constants at scale kappa."""
        if not kappa > 0:
            raise ValueError(f"kappa must be > 0, got {kappa}")
        if self.variant == "A_k" or self.variant == "D_k":
            return Multiplicity.single(kappa)
        if self.variant == "B_beta":
            return Multiplicity.pair(self.nu * kappa, kappa)
        return Multiplicity.pair(kappa, self.k2)


@dataclass(frozen=True)
class Trajectory:
    """A time grid with one configuration per time."""

    spec: RootSystemSpec
    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float, copy=True)
        p = np.array(self.points, dtype=float, copy=True)
        if t.ndim != 1 or p.shape != (t.size, self.spec.n):
            raise ValueError(f"inconsistent trajectory shapes {t.shape} / {p.shape}")
        if t.size == 0 or t[0] < 0 or (t.size > 1 and not np.all(np.diff(t) > 0)):
            raise ValueError("times must be nonnegative and strictly increasing")
        if not in_chamber_mask(self.spec.kind, p).all():
            raise ValueError("trajectory leaves the closed chamber")
        t.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    def final(self) -> np.ndarray:
        return self.points[-1]


def _check_regime_spec(regime: FreezingRegime, spec: RootSystemSpec) -> None:
    if regime.kind != spec.kind:
        raise UnsupportedRegime(
            f"regime {regime.variant} lives on type {regime.kind}, got type {spec.kind}")


def frozen_field_coords(regime: FreezingRegime, x: np.ndarray) -> np.ndarray:
    """Limit field H at x (no validation; broadcasts over leading axes)."""
    v = regime.variant
    if v == "A_k":
        return _recip_sum_diff(x)
    if v == "B_beta":
        return _recip_sum_diff(x) + _recip_sum_cross(x) + regime.nu / x
    if v == "B_k1":
        return 1.0 / x
    return _recip_sum_diff(x) + _recip_sum_cross(x)


def frozen_field(regime: FreezingRegime, spec: RootSystemSpec, x) -> np.ndarray:
    """Limit field H at a strictly interior configuration."""
    _check_regime_spec(regime, spec)
    pt = as_point(spec, x)
    if not pt.interior():
        raise BoundaryPoint(f"{pt.coords} is not strictly interior")
    return frozen_field_coords(regime, pt.coords)


def ode_solve(regime: FreezingRegime, spec: RootSystemSpec, x0, t_grid,
              rtol: float = 1e-11, atol: float = 1e-11) -> Trajectory:
    """Integrate dx/dt = H(x) from x0 and sample on the given grid.

    The grid must start at 0 and be strictly increasing; output points are
    obtained from the integrator's dense interpolant.
    """
    _check_regime_spec(regime, spec)
    pt = as_point(spec, x0)
    if not pt.interior():
        raise BoundaryPoint(f"starting point {pt.coords} is not strictly interior")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0:
        raise ValueError("t_grid must be a 1-d grid starting at 0")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValueError("t_grid must be strictly increasing")
    if t.size == 1:
        return Trajectory(spec, t, pt.coords[None, :])
    sol = solve_ivp(lambda s, y: frozen_field_coords(regime, y), (0.0, t[-1]),
                    pt.coords, method="RK45", t_eval=t, rtol=rtol, atol=atol)
    if not sol.success:
        raise StepFailure(f"adaptive integrator failed: {sol.message}")
    points = sol.y.T
    if not interior_mask(spec.kind, points).all():
        raise StepFailure("integrated trajectory left the open chamber")
    return Trajectory(spec, t, points)


def self_similar_profile(regime: FreezingRegime, spec: RootSystemSpec) -> np.ndarray:
    """The configuration whose scalar multiples evolve self-similarly.

    A_k: the Hermite zeros z (H(z) = z, so c*z flows to sqrt(2t+c^2)*z).
    B_beta / D_k: the frozen fixed point y (H(y) = y/2, so c*y flows to
    sqrt(t+c^2)*y).  B_k1 has a universal closed form instead and is not
    supported here.
    """
    _check_regime_spec(regime, spec)
    if regime.variant == "A_k":
        return hermite_zeros(spec.n)
    if regime.variant == "B_beta":
        return np.asarray(frozen_fixed_point(spec, nu=regime.nu).y.coords)
    if regime.variant == "D_k":
        return np.asarray(frozen_fixed_point(spec).y.coords)
    raise UnsupportedRegime("B_k1 admits the closed form sqrt(2t + x0_i^2) for every start")


def explicit_solution(regime: FreezingRegime, spec: RootSystemSpec,
                      c: float, t: float) -> ChamberPoint:
    """The self-similar solution started from c times the regime profile."""
    if not c > 0:
        raise ValueError(f"c must be > 0, got {c}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    profile = self_similar_profile(regime, spec)
    if regime.variant == "A_k":
        scale = math.sqrt(2.0 * t + c * c)
    else:
        scale = math.sqrt(t + c * c)
    return ChamberPoint(spec, scale * profile)


def min_gap_profile(trajectory: Trajectory, regime: FreezingRegime) -> np.ndarray:
    """The regime's boundary-gap statistic evaluated along the trajectory.

    A_k: minimal consecutive difference; D_k: additionally the plus-wall
    margin x_{N-1} + x_N (required: with a negative last coordinate the
    consecutive differences alone are not monotone); B_beta: consecutive
    differences and the (N-1) x_N / nu wall term; B_k1: minimal coordinate.
    Along exact limit trajectories this statistic is nondecreasing.
    """
    _check_regime_spec(regime, trajectory.spec)
    x = trajectory.points
    n = trajectory.spec.n
    if regime.variant == "B_k1":
        return x.min(axis=1)
    if regime.variant == "B_beta":
        return fixed_ratio_gap_coords(x, regime.nu)
    if n == 1:
        return np.full(x.shape[0], np.inf)
    gaps = (x[:, :-1] - x[:, 1:]).min(axis=1)
    if regime.variant == "D_k":
        return np.minimum(gaps, x[:, -2] + x[:, -1])
    return gaps
