"""Euler-Maruyama simulation of the interacting-particle SDEs.

Two lanes share one stepping rule:

* :func:`simulate_path` / :func:`simulate_normalized` integrate a single
  path on the base grid with reject-and-halve substeps near the chamber
  boundary, recording the full trajectory.
* :func:`simulate_terminal` advances all paths of a configuration at once
  (vectorised over paths) and returns the terminal states; rows that need
  substep refinement fall back to the per-path rule for that interval, so
  both lanes produce bit-identical states for the same (seed, path index).

Brownian increments come from a counter-based generator keyed by
(path seed, dyadic node), so the underlying Brownian path is a pure
function of the seed: halving a step refines the same path via midpoint
bridging instead of drawing fresh noise, and rejection history can never
change the realised trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .chamber import (
    Multiplicity,
    RootSystemSpec,
    as_point,
    drift_coords,
    euclidean_gap_coords,
    gap_if_inside,
)
from .errors import BesselFreezeError
from .freeze_ode import FreezingRegime, Trajectory, ode_solve

_BASE_CHUNK = 512        # base-grid increments are pre-generated in blocks
_MAX_HALVINGS = 20       # dt floor is dt * 2**-20
_NODE_LEVEL_BITS = 5
_NODE_POS_BITS = 21
_MASK64 = (1 << 64) - 1


class ConfigInvalid(BesselFreezeError):
    """Simulation configuration violates its invariants."""


class GridMismatch(BesselFreezeError):
    """Reference trajectory grid does not match the path grid."""


def splitmix64(z: int) -> int:
    """One step of the splitmix64 bit mixer."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def path_seed(master_seed: int, path_index: int) -> int:
    """Per-path seed: master seed xor splitmix of the path index."""
    return (master_seed ^ splitmix64(path_index)) & _MASK64


class _DyadicNoise:
    """Brownian increments on a base grid with dyadic midpoint refinement.

    ``base_increment(i)`` is the increment over the i-th base interval;
    ``sub_increment(i, level, pos)`` is the increment over the pos-th dyadic
    sub-interval of width h/2**level.  Every value is a deterministic
    function of (seed, node), independent of query order: base blocks come
    from one counter-keyed stream per block, refinement normals from one
    stream per bridge node.
    """

    def __init__(self, seed: int, dim: int, h: float):
        self.seed = int(seed)
        self.dim = int(dim)
        self.h = float(h)
        self._sqrt_h = math.sqrt(h)
        self._chunks: dict[int, np.ndarray] = {}
        self._memo: dict[tuple[int, int, int], np.ndarray] = {}

    def base_increment(self, interval: int) -> np.ndarray:
        c, r = divmod(interval, _BASE_CHUNK)
        block = self._chunks.get(c)
        if block is None:
            gen = np.random.Generator(np.random.Philox(key=self.seed, counter=c << 64))
            block = gen.standard_normal((_BASE_CHUNK, self.dim)) * self._sqrt_h
            self._chunks[c] = block
        return block[r]

    def _node_normal(self, interval: int, level: int, parent_pos: int) -> np.ndarray:
        code = ((interval + 1) << (_NODE_LEVEL_BITS + _NODE_POS_BITS)) \
            | (level << _NODE_POS_BITS) | parent_pos
        gen = np.random.Generator(np.random.Philox(key=self.seed + (code << 64)))
        return gen.standard_normal(self.dim)

    def sub_increment(self, interval: int, level: int, pos: int) -> np.ndarray:
        if level == 0:
            return self.base_increment(interval)
        key = (interval, level, pos)
        got = self._memo.get(key)
        if got is not None:
            return got
        parent = self.sub_increment(interval, level - 1, pos >> 1)
        z = self._node_normal(interval, level, pos >> 1)
        left = 0.5 * parent + math.sqrt(self.h / (1 << (level + 1))) * z
        right = parent - left
        even = (pos >> 1) << 1
        self._memo[(interval, level, even)] = left
        self._memo[(interval, level, even | 1)] = right
        return left if (pos & 1) == 0 else right


@dataclass(frozen=True)
class SimConfig:
    """Inputs of one simulation run.

    ``start`` is the raw starting configuration for :func:`simulate_path`
    and the normalised one for :func:`simulate_normalized` (callers build
    sqrt(kappa)*x + y starts themselves).  ``guard_eps`` is the minimum
    Euclidean boundary gap tolerated along a path; it defaults to a tenth
    of the start's gap.  ``zero_noise`` is a test hook that suppresses the
    Brownian increments entirely.
    """

    spec: RootSystemSpec
    mult: Multiplicity
    start: object
    horizon: float
    dt: float
    seed: int
    n_paths: int = 1
    guard_eps: float | None = None
    regime: FreezingRegime | None = None
    zero_noise: bool = False


@dataclass(frozen=True)
class PathResult:
    """One simulated path plus its boundary bookkeeping."""

    trajectory: Trajectory
    exited: bool
    exit_time: float | None
    seed_used: int


@dataclass(frozen=True)
class TerminalSample:
    """Terminal states of all paths of one configuration."""

    spec: RootSystemSpec
    states: np.ndarray
    start: np.ndarray
    exited: np.ndarray
    exit_times: np.ndarray
    seeds: tuple[int, ...]
    horizon: float
    n_steps: int

    def alive(self) -> np.ndarray:
        """Terminal states of the paths that never tripped the guard."""
        return self.states[~self.exited]


class _Resolved(NamedTuple):
    kind: str
    start: np.ndarray
    guard: float
    h: float
    n_steps: int
    drift_fn: Callable[[np.ndarray], np.ndarray]
    drift_scale: float
    noise_scale: float


def _resolve(cfg: SimConfig, normalized: bool, kappa: float | None) -> _Resolved:
    spec = cfg.spec
    comps = cfg.mult.components(spec.kind)
    if min(comps) < 0.5:
        raise ConfigInvalid(
            f"multiplicity components must be >= 1/2 for the SDE to stay interior, got {comps}")
    try:
        pt = as_point(spec, cfg.start)
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from exc
    if not pt.interior():
        raise ConfigInvalid(f"start {pt.coords} must be strictly interior")
    if not (cfg.horizon > 0 and math.isfinite(cfg.horizon)):
        raise ConfigInvalid(f"horizon must be positive, got {cfg.horizon}")
    if not (cfg.dt > 0 and math.isfinite(cfg.dt)):
        raise ConfigInvalid(f"dt must be positive, got {cfg.dt}")
    if cfg.n_paths < 1:
        raise ConfigInvalid(f"n_paths must be >= 1, got {cfg.n_paths}")
    if not isinstance(cfg.seed, (int, np.integer)) or not 0 <= int(cfg.seed) < (1 << 64):
        raise ConfigInvalid(f"seed must be a 64-bit unsigned integer, got {cfg.seed!r}")
    gap0 = float(euclidean_gap_coords(spec.kind, pt.coords))
    if cfg.guard_eps is not None:
        guard = float(cfg.guard_eps)
        if not guard > 0:
            raise ConfigInvalid(f"guard_eps must be positive, got {guard}")
    else:
        guard = gap0 / 10.0 if math.isfinite(gap0) else 1e-6
    if not gap0 > guard:
        raise ConfigInvalid(f"start gap {gap0:.3e} must exceed guard_eps {guard:.3e}")
    if normalized:
        if cfg.regime is None:
            raise ConfigInvalid("normalized simulation needs cfg.regime")
        if cfg.regime.kind != spec.kind:
            raise ConfigInvalid(
                f"regime {cfg.regime.variant} does not match system type {spec.kind}")
        if kappa is None or not kappa > 0:
            raise ConfigInvalid(f"kappa must be positive, got {kappa}")
        expected = cfg.regime.multiplicity(kappa).components(spec.kind)
        if not np.allclose(comps, expected, rtol=1e-12, atol=0.0):
            raise ConfigInvalid(
                f"multiplicity {comps} does not match regime scale kappa={kappa} "
                f"(expected {expected})")
        drift_scale = 1.0 / kappa
        noise_scale = 1.0 / math.sqrt(kappa)
    else:
        drift_scale = 1.0
        noise_scale = 1.0
    n_steps = max(1, math.ceil(cfg.horizon / cfg.dt - 1e-9))
    h = cfg.horizon / n_steps
    mult = cfg.mult
    kind = spec.kind

    def drift_fn(arr: np.ndarray) -> np.ndarray:
        return drift_coords(kind, mult, arr)

    return _Resolved(kind, pt.coords.copy(), guard, h, n_steps,
                     drift_fn, drift_scale, noise_scale)


def _advance_interval(x, t0, h, interval, noise, rc: _Resolved, zero_noise: bool):
    """Advance one base interval with reject-and-halve substeps.

    Returns (state, exited, exit_time).  A proposal is rejected when it
    leaves the open chamber or drops the boundary gap below guard/2; the
    substep is then halved, down to h * 2**-20, below which the path is
    flagged as exited.  An accepted state with gap below the full guard also
    exits (this is the empirical first-exit bookkeeping).
    """
    level = 0
    pos = 0
    while pos < (1 << level):
        sub_h = h / (1 << level)
        prop = x + rc.drift_fn(x) * (rc.drift_scale * sub_h)
        if not zero_noise:
            prop = prop + rc.noise_scale * noise.sub_increment(interval, level, pos)
        g = float(gap_if_inside(rc.kind, prop))
        if not g >= 0.5 * rc.guard:
            if level >= _MAX_HALVINGS:
                return x, True, t0 + pos * sub_h
            level += 1
            pos <<= 1
            continue
        x = prop
        pos += 1
        if g < rc.guard:
            return x, True, t0 + pos * sub_h
        while level > 0 and (pos & 1) == 0:
            level -= 1
            pos >>= 1
    return x, False, 0.0


def _simulate_one(cfg: SimConfig, path_index: int, normalized: bool,
                  kappa: float | None) -> PathResult:
    rc = _resolve(cfg, normalized, kappa)
    seed = path_seed(int(cfg.seed), path_index)
    noise = None if cfg.zero_noise else _DyadicNoise(seed, cfg.spec.n, rc.h)
    x = rc.start
    times = [0.0]
    points = [x.copy()]
    exited = False
    exit_time: float | None = None
    for i in range(rc.n_steps):
        x, ex, etime = _advance_interval(x, i * rc.h, rc.h, i, noise, rc, cfg.zero_noise)
        if ex:
            exited = True
            exit_time = etime
            if etime > times[-1]:
                times.append(etime)
                points.append(x.copy())
            break
        times.append((i + 1) * rc.h)
        points.append(x.copy())
    traj = Trajectory(cfg.spec, np.array(times), np.array(points))
    return PathResult(traj, exited, exit_time, seed)


def simulate_path(cfg: SimConfig, path_index: int = 0) -> PathResult:
    """One Euler-Maruyama path of the raw SDE dX = dB + (1/2) grad ln w dt."""
    return _simulate_one(cfg, path_index, normalized=False, kappa=None)


def simulate_normalized(cfg: SimConfig, kappa: float, path_index: int = 0) -> PathResult:
    """One path of the kappa-normalised SDE (state X/sqrt(kappa), noise 1/sqrt(kappa)).

    With the same (seed, path index), a raw path from sqrt(kappa)*x0 and a
    normalised path from x0 agree after rescaling to floating-point error,
    because they consume the same Brownian increments.
    """
    return _simulate_one(cfg, path_index, normalized=True, kappa=kappa)


def _ensemble_chunk(seeds, chunk_index, dim, h):
    sqrt_h = math.sqrt(h)
    out = np.empty((len(seeds), _BASE_CHUNK, dim))
    for p, s in enumerate(seeds):
        gen = np.random.Generator(np.random.Philox(key=s, counter=chunk_index << 64))
        out[p] = gen.standard_normal((_BASE_CHUNK, dim)) * sqrt_h
    return out


def simulate_terminal(cfg: SimConfig, normalized: bool = False,
                      kappa: float | None = None) -> TerminalSample:
    """Terminal states of all cfg.n_paths paths, vectorised over paths.

    Bit-identical to running :func:`simulate_path` per index; rows whose
    proposal trips the guard are re-run through the per-path substep rule
    for that base interval only.
    """
    rc = _resolve(cfg, normalized, kappa)
    n_paths = cfg.n_paths
    dim = cfg.spec.n
    seeds = tuple(path_seed(int(cfg.seed), p) for p in range(n_paths))
    states = np.tile(rc.start, (n_paths, 1))
    calc = states.copy()        # exited rows are parked at the start to keep drift finite
    exited = np.zeros(n_paths, dtype=bool)
    exit_times = np.full(n_paths, np.nan)
    fallback_noise: dict[int, _DyadicNoise] = {}
    coef = rc.drift_scale * rc.h
    block = None
    block_index = -1
    for i in range(rc.n_steps):
        drift = rc.drift_fn(calc)
        prop = calc + drift * coef
        if not cfg.zero_noise:
            c, r = divmod(i, _BASE_CHUNK)
            if c != block_index:
                block = _ensemble_chunk(seeds, c, dim, rc.h)
                block_index = c
            prop = prop + rc.noise_scale * block[:, r, :]
        g = gap_if_inside(rc.kind, prop)
        ok = g >= 0.5 * rc.guard
        live = ~exited
        easy = live & ok
        hard = live & ~ok
        if hard.any():
            t0 = i * rc.h
            for p in np.flatnonzero(hard):
                noise_p = fallback_noise.get(p)
                if noise_p is None and not cfg.zero_noise:
                    noise_p = _DyadicNoise(seeds[p], dim, rc.h)
                    fallback_noise[p] = noise_p
                xnew, ex, etime = _advance_interval(
                    states[p], t0, rc.h, i, noise_p, rc, cfg.zero_noise)
                states[p] = xnew
                if ex:
                    exited[p] = True
                    exit_times[p] = etime
                    calc[p] = rc.start
                else:
                    calc[p] = xnew
        if easy.any():
            states[easy] = prop[easy]
            newly = easy & (g < rc.guard)
            if newly.any():
                exited |= newly
                exit_times[newly] = (i + 1) * rc.h
                calc[newly] = rc.start
                easy &= ~newly
            calc[easy] = prop[easy]
    return TerminalSample(cfg.spec, states, rc.start, exited, exit_times,
                          seeds, cfg.horizon, rc.n_steps)


def lln_error(path: PathResult, regime: FreezingRegime, spec: RootSystemSpec,
              x, kappa: float, reference: Trajectory | None = None) -> float:
    """Sup over the path grid of |X_s / sqrt(kappa) - phi(s, x)|.

    ``x`` is the limit starting point (the path itself starts at
    sqrt(kappa)*x + y); ``reference`` may carry a precomputed limit
    trajectory on exactly the path's grid.
    """
    times = path.trajectory.times
    if reference is not None:
        if reference.times.shape != times.shape or not np.array_equal(reference.times, times):
            raise GridMismatch("reference trajectory grid differs from the path grid")
        ref = reference
    else:
        ref = ode_solve(regime, spec, x, times)
    dev = path.trajectory.points / math.sqrt(kappa) - ref.points
    return float(np.sqrt((dev * dev).sum(axis=1)).max())
