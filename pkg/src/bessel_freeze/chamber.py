"""Weyl-chamber geometry for interacting particle systems of types A, B, D.

Configurations live in the closed chambers

    A:  x1 >= x2 >= ... >= xN
    B:  x1 >= x2 >= ... >= xN >= 0
    D:  x1 >= x2 >= ... >= x_{N-1} >= |xN|

and the diffusions are driven by half the gradient of the log-weight
implemented in :func:`log_weight`.  Everything in this module is a pure
function of its arguments; the array kernels (``*_coords``) broadcast over
leading batch axes and are shared with the SDE engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BesselFreezeError

KINDS = ("A", "B", "D")

_SQRT2 = math.sqrt(2.0)
_LOG_FLOOR = 1e-300  # log arguments at or below this count as boundary contact


class BoundaryPoint(BesselFreezeError):
    """Operation needs a strictly interior configuration."""


class MissingNu(BesselFreezeError):
    """The fixed-ratio B gap notion was requested without nu."""


@dataclass(frozen=True)
class RootSystemSpec:
    """Which particle system: interaction pattern tag plus particle count."""

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.kind == "D" and self.n < 2:
            raise ValueError("type D needs n >= 2")


@dataclass(frozen=True)
class Multiplicity:
    """Coupling constants: k for types A and D, (k1, k2) for type B.

    All components must be nonnegative; the SDE simulator additionally
    requires them >= 1/2 (checked there, not here).
    """

    k: float | None = None
    k1: float | None = None
    k2: float | None = None

    def __post_init__(self):
        for name in ("k", "k1", "k2"):
            v = getattr(self, name)
            if v is not None:
                if not math.isfinite(v) or v < 0:
                    raise ValueError(f"{name} must be finite and >= 0, got {v}")
                object.__setattr__(self, name, float(v))

    @classmethod
    def single(cls, k: float) -> "Multiplicity":
        return cls(k=k)

    @classmethod
    def pair(cls, k1: float, k2: float) -> "Multiplicity":
        return cls(k1=k1, k2=k2)

    def components(self, kind: str) -> tuple[float, ...]:
        """Coupling components relevant for the given system kind."""
        if kind in ("A", "D"):
            if self.k is None:
                raise ValueError(f"type {kind} needs the single multiplicity k")
            return (self.k,)
        if self.k1 is None or self.k2 is None:
            raise ValueError("type B needs the pair (k1, k2)")
        return (self.k1, self.k2)

    def gamma(self, spec: RootSystemSpec) -> float:
        """Homogeneity degree of the weight function (w is homogeneous of degree 2*gamma)."""
        n = spec.n
        if spec.kind == "A":
            (k,) = self.components("A")
            return k * n * (n - 1) / 2.0
        if spec.kind == "B":
            k1, k2 = self.components("B")
            return k2 * n * (n - 1) + k1 * n
        (k,) = self.components("D")
        return k * n * (n - 1)


@dataclass(frozen=True)
class ChamberPoint:
    """A configuration in the closed Weyl chamber of its system."""

    spec: RootSystemSpec
    coords: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float, copy=True)
        if arr.shape != (self.spec.n,):
            raise ValueError(f"expected {self.spec.n} coordinates, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coordinates must be finite")
        if not in_chamber_mask(self.spec.kind, arr):
            raise ValueError(f"{arr} is not in the closed type-{self.spec.kind} chamber")
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    def interior(self) -> bool:
        return bool(interior_mask(self.spec.kind, self.coords))


def as_point(spec: RootSystemSpec, x) -> ChamberPoint:
    """Coerce an array-like (or pass through a ChamberPoint) with validation."""
    if isinstance(x, ChamberPoint):
        if x.spec != spec:
            raise ValueError(f"point belongs to {x.spec}, expected {spec}")
        return x
    return ChamberPoint(spec, np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# array kernels (broadcast over leading axes; no validation)
# ---------------------------------------------------------------------------

def _recip_sum_diff(x: np.ndarray) -> np.ndarray:
    """sum_{j != i} 1/(x_i - x_j) along the last axis."""
    d = x[..., :, None] - x[..., None, :]
    dd = np.einsum("...ii->...i", d)
    dd[...] = 1.0
    r = 1.0 / d
    rr = np.einsum("...ii->...i", r)
    rr[...] = 0.0
    return r.sum(axis=-1)


def _recip_sum_cross(x: np.ndarray) -> np.ndarray:
    """sum_{j != i} 1/(x_i + x_j) along the last axis."""
    s = x[..., :, None] + x[..., None, :]
    ss = np.einsum("...ii->...i", s)
    ss[...] = 1.0
    r = 1.0 / s
    rr = np.einsum("...ii->...i", r)
    rr[...] = 0.0
    return r.sum(axis=-1)


def in_chamber_mask(kind: str, x: np.ndarray) -> np.ndarray:
    """Closed-chamber membership, broadcast over leading axes."""
    n = x.shape[-1]
    d = x[..., :-1] - x[..., 1:]
    if kind == "A":
        if n == 1:
            return np.ones(x.shape[:-1], dtype=bool)
        return (d >= 0).all(axis=-1)
    if kind == "B":
        ok = x[..., -1] >= 0
        if n > 1:
            ok = ok & (d >= 0).all(axis=-1)
        return ok
    ok = x[..., -2] >= np.abs(x[..., -1])
    if n > 2:
        ok = ok & (d[..., :-1] >= 0).all(axis=-1)
    return ok


def interior_mask(kind: str, x: np.ndarray) -> np.ndarray:
    """Strict-interior membership, broadcast over leading axes."""
    n = x.shape[-1]
    d = x[..., :-1] - x[..., 1:]
    if kind == "A":
        if n == 1:
            return np.ones(x.shape[:-1], dtype=bool)
        return (d > 0).all(axis=-1)
    if kind == "B":
        ok = x[..., -1] > 0
        if n > 1:
            ok = ok & (d > 0).all(axis=-1)
        return ok
    ok = x[..., -2] > np.abs(x[..., -1])
    if n > 2:
        ok = ok & (d[..., :-1] > 0).all(axis=-1)
    return ok


def euclidean_gap_coords(kind: str, x: np.ndarray) -> np.ndarray:
    """Euclidean distance to the chamber boundary (min over wall hyperplanes).

    Negative for points outside the chamber in the sense of the deepest
    violated wall.
    """
    n = x.shape[-1]
    d = x[..., :-1] - x[..., 1:]
    if kind == "A":
        if n == 1:
            return np.full(x.shape[:-1], np.inf)
        return d.min(axis=-1) / _SQRT2
    if kind == "B":
        axis = x[..., -1]
        if n == 1:
            return axis + 0.0
        return np.minimum(d.min(axis=-1) / _SQRT2, axis)
    plus = (x[..., -2] + x[..., -1]) / _SQRT2
    return np.minimum(d.min(axis=-1) / _SQRT2, plus)


def gap_if_inside(kind: str, x: np.ndarray) -> np.ndarray:
    """Euclidean boundary gap; nonpositive exactly when x is not strictly interior.

    The gap is the minimum signed wall margin, so its sign already encodes
    strict-interior membership; no separate ordering check is needed.
    """
    return euclidean_gap_coords(kind, x)


def fixed_ratio_gap_coords(x: np.ndarray, nu: float) -> np.ndarray:
    """Largest eps whose fixed-ratio B neighbourhood still contains x.

    The neighbourhood requires consecutive gaps > eps and x_N > eps*nu/(N-1).
    For N = 1 the (N-1) factor degenerates; we use x_1/nu so that positivity
    of the gap still characterises the interior.
    """
    n = x.shape[-1]
    axis = x[..., -1] * (max(n - 1, 1) / nu)
    if n == 1:
        return axis + 0.0
    d = x[..., :-1] - x[..., 1:]
    return np.minimum(d.min(axis=-1), axis)


def drift_coords(kind: str, mult: Multiplicity, x: np.ndarray) -> np.ndarray:
    """Half-gradient of the log-weight; assumes strictly interior input."""
    if kind == "A":
        (k,) = mult.components("A")
        return k * _recip_sum_diff(x)
    if kind == "B":
        k1, k2 = mult.components("B")
        return k2 * (_recip_sum_diff(x) + _recip_sum_cross(x)) + k1 / x
    (k,) = mult.components("D")
    return k * (_recip_sum_diff(x) + _recip_sum_cross(x))


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def log_weight(spec: RootSystemSpec, mult: Multiplicity, x) -> float:
    """ln w(x) for the system's weight function.

    A: 2k sum_{i<j} ln(x_i-x_j); B: 2k2 sum_{i<j} ln(x_i^2-x_j^2)
    + 2k1 sum_i ln x_i; D: 2k sum_{i<j} ln(x_i^2-x_j^2).
    """
    pt = as_point(spec, x)
    v = pt.coords
    iu, ju = np.triu_indices(spec.n, k=1)
    if spec.kind == "A":
        (k,) = mult.components("A")
        args = v[iu] - v[ju]
        _require_positive(args)
        return float(2.0 * k * np.log(args).sum())
    if spec.kind == "B":
        k1, k2 = mult.components("B")
        args = v[iu] ** 2 - v[ju] ** 2
        _require_positive(args)
        _require_positive(v)
        return float(2.0 * k2 * np.log(args).sum() + 2.0 * k1 * np.log(v).sum())
    (k,) = mult.components("D")
    args = v[iu] ** 2 - v[ju] ** 2
    _require_positive(args)
    return float(2.0 * k * np.log(args).sum())


def _require_positive(args: np.ndarray) -> None:
    if args.size and args.min(initial=np.inf) <= _LOG_FLOOR:
        raise BoundaryPoint("configuration touches the chamber boundary (log argument <= 0)")


def drift(spec: RootSystemSpec, mult: Multiplicity, x) -> np.ndarray:
    """Drift field of the diffusion, i.e. (1/2) grad ln w at x."""
    pt = as_point(spec, x)
    if not pt.interior():
        raise BoundaryPoint(f"{pt.coords} is not strictly interior")
    mult.components(spec.kind)
    return drift_coords(spec.kind, mult, pt.coords)


def boundary_gap(spec: RootSystemSpec, x, nu: float | None = None,
                 fixed_ratio: bool | None = None) -> float:
    """Largest eps such that x lies in the eps-neighbourhood of the interior.

    Default notion is the Euclidean distance to the boundary (types A, D,
    and B in the growing-axis regime).  Passing ``nu`` (or forcing
    ``fixed_ratio=True``) selects the fixed-ratio B notion:
    min over consecutive gaps and (N-1)*x_N/nu.
    """
    pt = as_point(spec, x)
    if fixed_ratio is None:
        fixed_ratio = nu is not None
    if fixed_ratio:
        if spec.kind != "B":
            raise ValueError("the fixed-ratio gap notion only applies to type B")
        if nu is None:
            raise MissingNu("fixed-ratio gap requested without nu")
        if not nu > 0:
            raise ValueError(f"nu must be > 0, got {nu}")
        return max(float(fixed_ratio_gap_coords(pt.coords, nu)), 0.0)
    return max(float(euclidean_gap_coords(spec.kind, pt.coords)), 0.0)
