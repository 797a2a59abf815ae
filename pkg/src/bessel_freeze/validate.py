"""Statistical verification: normal predictions, independent oracles, KS tests.

The closed-form predictions are plug-in formulas for the high-coupling
normal fluctuations of the type-B growing-axis regime (per coordinate, for
the squared coordinates, and for the Euclidean norm in all regimes).  Two
independent oracles provide exact-in-distribution samples for comparison
with the Euler scheme: sums of squared shifted Brownian motions (the
one-dimensional squared process at half-integer coupling) and sorted
square-rooted eigenvalues of Wishart matrices (type B at matrix-shaped
multiplicities).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel_sde import SimConfig, lln_error, simulate_path, simulate_terminal, splitmix64
from .chamber import (
    BoundaryPoint,
    ChamberPoint,
    Multiplicity,
    RootSystemSpec,
    as_point,
)
from .errors import BesselFreezeError
from .freeze_ode import FreezingRegime, ode_solve

KS_C_1PCT = 1.628  # asymptotic 1% Kolmogorov-Smirnov coefficient

_HIST_EDGES = np.linspace(-6.0, 6.0, 49)  # fixed width 0.25 about 0


class ShapeError(BesselFreezeError):
    """Matrix shape parameter is incompatible with the particle count."""


@dataclass(frozen=True)
class NormalPrediction:
    """Diagonal normal law predicted for a centered statistic."""

    mean: np.ndarray
    variance_diag: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=float))
        v = np.atleast_1d(np.asarray(self.variance_diag, dtype=float))
        if m.shape != v.shape:
            raise ValueError(f"mean shape {m.shape} != variance shape {v.shape}")
        if not np.all(v > 0):
            raise ValueError("variances must be positive")
        m.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "variance_diag", v)


@dataclass(frozen=True)
class SampleSet:
    """I.i.d. draws of a configuration or statistic, with provenance."""

    draws: np.ndarray
    label: str
    seed: int

    def __post_init__(self):
        d = np.array(self.draws, dtype=float, copy=True)
        if d.ndim == 1:
            d = d[:, None]
        if d.ndim != 2 or d.shape[0] < 2:
            raise ValueError(f"need an (n >= 2, dim) draw matrix, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("draws must be finite")
        d.flags.writeable = False
        object.__setattr__(self, "draws", d)


# ---------------------------------------------------------------------------
# closed-form predictions
# ---------------------------------------------------------------------------

def _interior_b(x) -> ChamberPoint:
    pt = x if isinstance(x, ChamberPoint) else None
    if pt is None:
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        pt = ChamberPoint(RootSystemSpec("B", arr.size), arr)
    if pt.spec.kind != "B" or not pt.interior():
        raise BoundaryPoint(f"{pt.coords} must be strictly interior of the type-B chamber")
    return pt


def clt_b2_prediction(x, t: float) -> NormalPrediction:
    """Limit law of X_t^i - sqrt(k1) sqrt(2t + x_i^2) as k1 grows: N(0, (t^2+t x_i^2)/(2t+x_i^2))."""
    pt = _interior_b(x)
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    v = pt.coords
    var = (t * t + t * v**2) / (2.0 * t + v**2)
    return NormalPrediction(np.zeros_like(v), var)


def clt_b2_centering(x, t: float, k1: float) -> np.ndarray:
    """The centering vector sqrt(k1) * sqrt(2t + x_i^2)."""
    pt = _interior_b(x)
    return math.sqrt(k1) * np.sqrt(2.0 * t + pt.coords**2)


def clt_squared_prediction(x, t: float) -> NormalPrediction:
    """Limit law of the centered, sqrt(k1)-scaled squared coordinates: N(0, 4t^2 + 4t x_i^2)."""
    pt = _interior_b(x)
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    v = pt.coords
    return NormalPrediction(np.zeros_like(v), 4.0 * t * t + 4.0 * t * v**2)


def norm_clt_prediction(x, t: float, gamma: float) -> NormalPrediction:
    """Limit law of the centered Euclidean norm: N(0, (t^2+t|x|^2)/(2t+|x|^2))."""
    arr = x.coords if isinstance(x, ChamberPoint) else np.atleast_1d(np.asarray(x, dtype=float))
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    sq = float(arr @ arr)
    var = (t * t + t * sq) / (2.0 * t + sq)
    return NormalPrediction(np.zeros(1), np.array([var]))


def norm_clt_centering(x, t: float, gamma: float, n: int) -> float:
    """The norm centering sqrt(gamma + (n-1)/2) * sqrt(2t + |x|^2)."""
    arr = x.coords if isinstance(x, ChamberPoint) else np.atleast_1d(np.asarray(x, dtype=float))
    sq = float(arr @ arr)
    return math.sqrt(gamma + (n - 1) / 2.0) * math.sqrt(2.0 * t + sq)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def oracle_chi_square_1d(d: int, x_tilde: float, t: float, n_samples: int,
                         seed: int) -> SampleSet:
    """Draws of S = sum_{l<=d} (B_t^l + x_tilde)^2 with B_t^l ~ N(0, t).

    S is the squared one-dimensional process of type B_1 at coupling
    (d-1)/2, started at sqrt(d)*x_tilde; per summand the mean is t+x^2 and
    the variance 2t^2 + 4t x^2.
    """
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise ValueError(f"d must be a positive integer, got {d}")
    if x_tilde < 0 or not t > 0 or n_samples < 2:
        raise ValueError("need x_tilde >= 0, t > 0, n_samples >= 2")
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((n_samples, int(d))) * math.sqrt(t)
    s = ((b + x_tilde) ** 2).sum(axis=1)
    return SampleSet(s, f"chi_square_1d(d={d}, x={x_tilde}, t={t})", seed)


def wishart_multiplicity(p: int, n: int, d_field: int) -> Multiplicity:
    """Coupling constants of the square-rooted eigenvalue process.

    (k1, k2) = ((d*(p-n+1) - 1)/2, d/2).  At n = 1 this reduces to the
    radial process of a (d*p)-dimensional Brownian motion, whose axis
    coupling is (d*p - 1)/2; the pair coupling is half the real dimension
    of the field.  (Derivable from the eigenvalue SDE of the matrix square;
    confirmed here by the two-sample KS equivalence tests.)
    """
    return Multiplicity.pair((d_field * (p - n + 1) - 1) / 2.0, d_field / 2.0)


def oracle_wishart(p: int, spec: RootSystemSpec, d_field: int, x0, t: float,
                   n_samples: int, seed: int) -> SampleSet:
    """Sorted square-rooted spectra of (A0+B_t)*(A0+B_t) Wishart matrices.

    A0 is the p x n rectangular diagonal embedding of x0; B_t has i.i.d.
    entries over the real (d_field=1), complex (2) or quaternion (4) field,
    each real dimension N(0, t).  The resulting draws are distributed as the
    type-B process at multiplicity ((p-n+1) d/2, d/2) at time t, started
    at x0.
    """
    if spec.kind != "B":
        raise ValueError(f"the Wishart oracle targets type B, got {spec.kind}")
    n = spec.n
    if p < n:
        raise ShapeError(f"shape parameter p={p} must be >= n={n}")
    if d_field not in (1, 2, 4):
        raise ValueError(f"d_field must be 1, 2 or 4, got {d_field}")
    if not t > 0 or n_samples < 2:
        raise ValueError("need t > 0 and n_samples >= 2")
    x = as_point(spec, x0).coords
    rng = np.random.default_rng(seed)
    sqrt_t = math.sqrt(t)
    a0 = np.zeros((p, n))
    a0[np.arange(n), np.arange(n)] = x
    if d_field == 1:
        m = a0 + rng.standard_normal((n_samples, p, n)) * sqrt_t
        gram = np.einsum("spi,spj->sij", m, m)
        ev = np.linalg.eigvalsh(gram)
    elif d_field == 2:
        re = rng.standard_normal((n_samples, p, n)) * sqrt_t
        im = rng.standard_normal((n_samples, p, n)) * sqrt_t
        m = a0 + re + 1j * im
        gram = np.einsum("spi,spj->sij", m.conj(), m)
        ev = np.linalg.eigvalsh(gram)
    else:
        # quaternion entries q = a + b j embedded as [[a, b], [-conj b, conj a]]
        blocks = [rng.standard_normal((n_samples, p, n)) * sqrt_t for _ in range(4)]
        a = a0 + blocks[0] + 1j * blocks[1]
        b = blocks[2] + 1j * blocks[3]
        m = np.empty((n_samples, 2 * p, 2 * n), dtype=complex)
        m[:, :p, :n] = a
        m[:, :p, n:] = b
        m[:, p:, :n] = -b.conj()
        m[:, p:, n:] = a.conj()
        gram = np.einsum("spi,spj->sij", m.conj(), m)
        ev = np.linalg.eigvalsh(gram)[:, ::2]  # quaternionic spectrum is doubled
    draws = np.sqrt(np.clip(ev, 0.0, None))[:, ::-1]
    return SampleSet(draws, f"wishart(p={p}, n={n}, d={d_field}, t={t})", seed)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov statistics
# ---------------------------------------------------------------------------

def ks_two_sample(a: SampleSet, b: SampleSet, coordinate: int = 0) -> tuple[float, float]:
    """Two-sample KS statistic and its asymptotic 1% critical value."""
    xs = np.sort(a.draws[:, coordinate])
    ys = np.sort(b.draws[:, coordinate])
    pooled = np.concatenate([xs, ys])
    fa = np.searchsorted(xs, pooled, side="right") / xs.size
    fb = np.searchsorted(ys, pooled, side="right") / ys.size
    stat = float(np.abs(fa - fb).max())
    crit = KS_C_1PCT * math.sqrt((xs.size + ys.size) / (xs.size * ys.size))
    return stat, crit


def _normal_cdf(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))


def ks_one_sample_normal(a: SampleSet, pred: NormalPrediction,
                         coordinate: int = 0) -> tuple[float, float]:
    """One-sample KS statistic against the predicted normal coordinate law."""
    z = np.sort(a.draws[:, coordinate])
    n = z.size
    mu = float(pred.mean[coordinate])
    sd = math.sqrt(float(pred.variance_diag[coordinate]))
    f = _normal_cdf((z - mu) / sd)
    grid = np.arange(1, n + 1) / n
    stat = float(max((grid - f).max(), (f - (grid - 1.0 / n)).max()))
    return stat, KS_C_1PCT / math.sqrt(n)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _histogram(values: np.ndarray) -> dict:
    counts, _ = np.histogram(values, bins=_HIST_EDGES)
    return {
        "counts": counts.tolist(),
        "underflow": int((values < _HIST_EDGES[0]).sum()),
        "overflow": int((values > _HIST_EDGES[-1]).sum()),
    }


def _normal_pdf(z: np.ndarray, var: float) -> np.ndarray:
    return np.exp(-0.5 * z**2 / var) / math.sqrt(2.0 * math.pi * var)


def clt_b2_experiment(x, t: float, k1: float, k2: float, n_paths: int,
                      dt: float, seed: int, guard_eps: float = 1e-6) -> dict:
    """Simulate the growing-axis regime and center/compare against the normal law.

    Returns summary statistics per coordinate, KS outcomes (after removing
    the empirical mean, since a finite-k1 bias is expected), fixed-bin
    histogram data with the predicted density overlay, and the centered
    draws themselves under the key ``"draws"``.
    """
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    spec = RootSystemSpec("B", xa.size)
    cfg = SimConfig(spec, Multiplicity.pair(k1, k2), math.sqrt(k1) * xa,
                    horizon=t, dt=dt, seed=seed, n_paths=n_paths, guard_eps=guard_eps)
    terminal = simulate_terminal(cfg)
    alive = terminal.alive()
    centering = clt_b2_centering(xa, t, k1)
    centered = alive - centering
    pred = clt_b2_prediction(xa, t)
    mean_centered = SampleSet(centered - centered.mean(axis=0), "mean_centered", seed)
    bin_centers = 0.5 * (_HIST_EDGES[:-1] + _HIST_EDGES[1:])
    coords = []
    for i in range(xa.size):
        col = centered[:, i]
        bias = float(col.mean())
        var = float(col.var(ddof=1))
        stat, crit = ks_one_sample_normal(mean_centered, pred, i)
        pv = float(pred.variance_diag[i])
        hist = _histogram(col)
        hist["pdf_overlay"] = (_normal_pdf(bin_centers, pv)).tolist()
        coords.append({
            "index": i + 1,
            "bias": bias,
            "variance": var,
            "predicted_variance": pv,
            "variance_ratio": var / pv,
            "ks_stat_centered": float(stat),
            "ks_critical_1pct": float(crit),
            "ks_below_critical": bool(stat < crit),
            "histogram": hist,
        })
    return {
        "t": t,
        "k1": k1,
        "k2": k2,
        "x": xa.tolist(),
        "dt": dt,
        "seed": seed,
        "n_paths": n_paths,
        "n_exited": int(terminal.exited.sum()),
        "bin_edges": _HIST_EDGES.tolist(),
        "coordinates": coords,
        "draws": centered,
    }


def figure1_experiment(seed: int, n_paths: int = 2000,
                       t_values: tuple = (1.0, 10.0),
                       k1_values: tuple = (5.0, 50.0, 500.0),
                       k2: float = 1.0, x=(3.0, 2.0, 1.0)) -> dict:
    """Bias/convergence panels: per-coordinate centered statistics across k1 and t.

    Six panels by default ((t, k1) pairs), each holding fixed-bin histogram
    data, empirical mean/variance per coordinate and the predicted normal
    overlay, emitted as plot-ready data.
    """
    panels = []
    idx = 0
    for t in t_values:
        dt = 5e-4 if t <= 1.0 else 2e-3
        for k1 in k1_values:
            panel_seed = (seed ^ splitmix64(1000 + idx)) & ((1 << 64) - 1)
            panel = clt_b2_experiment(x, t, k1, k2, n_paths, dt, panel_seed)
            panel.pop("draws")
            panels.append(panel)
            idx += 1
    return {
        "schema_version": 1,
        "seed": seed,
        "n_paths": n_paths,
        "x": list(x),
        "k2": k2,
        "panels": panels,
    }


def chisq_vs_sde(d: int, x_tilde: float, t: float, n_samples: int, seed: int,
                 dt: float = 5e-4) -> dict:
    """Squared one-dimensional SDE vs the sum-of-squares oracle, plus moment checks."""
    oracle = oracle_chi_square_1d(d, x_tilde, t, n_samples, seed)
    k1 = (d - 1) / 2.0
    spec = RootSystemSpec("B", 1)
    start = np.array([math.sqrt(d) * x_tilde])
    cfg = SimConfig(spec, Multiplicity.pair(k1, 0.5), start, horizon=t, dt=dt,
                    seed=(seed ^ splitmix64(42)) & ((1 << 64) - 1),
                    n_paths=n_samples, guard_eps=1e-8)
    terminal = simulate_terminal(cfg)
    squared = SampleSet(terminal.alive() ** 2, "sde_squared", cfg.seed)
    stat, crit = ks_two_sample(oracle, squared, 0)
    s = oracle.draws[:, 0]
    return {
        "d": d,
        "x_tilde": x_tilde,
        "t": t,
        "n_samples": n_samples,
        "multiplicity_k1": k1,
        "n_exited": int(terminal.exited.sum()),
        "ks": {"statistic": stat, "critical_1pct": crit, "below": bool(stat < crit)},
        "oracle_mean": float(s.mean()),
        "oracle_variance": float(s.var(ddof=1)),
        "predicted_mean": d * (t + x_tilde**2),
        "predicted_variance": d * (2.0 * t * t + 4.0 * t * x_tilde**2),
    }


def wishart_vs_sde(p: int, n: int, d_field: int, x0, t: float, n_samples: int,
                   seed: int, dt: float = 5e-4) -> dict:
    """Wishart eigenvalue oracle vs the direct type-B simulation, KS per coordinate."""
    spec = RootSystemSpec("B", n)
    mult = wishart_multiplicity(p, n, d_field)
    oracle = oracle_wishart(p, spec, d_field, x0, t, n_samples, seed)
    cfg = SimConfig(spec, mult, np.asarray(x0, dtype=float), horizon=t, dt=dt,
                    seed=(seed ^ splitmix64(101)) & ((1 << 64) - 1),
                    n_paths=n_samples, guard_eps=1e-8)
    terminal = simulate_terminal(cfg)
    sde = SampleSet(terminal.alive(), "sde_terminal", cfg.seed)
    per_coord = []
    for i in range(n):
        stat, crit = ks_two_sample(oracle, sde, i)
        per_coord.append({"coordinate": i + 1, "statistic": stat,
                          "critical_1pct": crit, "below": bool(stat < crit)})
    return {
        "p": p,
        "n": n,
        "d_field": d_field,
        "x0": list(np.asarray(x0, dtype=float)),
        "t": t,
        "n_samples": n_samples,
        "multiplicity": {"k1": mult.k1, "k2": mult.k2},
        "n_exited": int(terminal.exited.sum()),
        "ks": per_coord,
    }


def lln_rate_experiment(regime: FreezingRegime, spec: RootSystemSpec, x, y,
                        kappas, n_paths: int, t: float, dt: float,
                        seed: int) -> dict:
    """Median normalised sup-errors across coupling scales, with log-log slope.

    Seeds are shared across scales (common Brownian paths), so the fitted
    slope isolates the 1/sqrt(kappa) decay.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    kappas = [float(k) for k in kappas]
    per_kappa = []
    for kappa in kappas:
        start = math.sqrt(kappa) * xa + ya
        cfg = SimConfig(spec, regime.multiplicity(kappa), start, horizon=t,
                        dt=dt, seed=seed, n_paths=n_paths, regime=regime)
        reference = None
        errors = []
        n_exited = 0
        for p in range(n_paths):
            path = simulate_path(cfg, p)
            if path.exited:
                n_exited += 1
                continue
            if reference is None:
                reference = ode_solve(regime, spec, xa, path.trajectory.times)
            errors.append(lln_error(path, regime, spec, xa, kappa, reference))
        errors = np.asarray(errors)
        per_kappa.append({
            "kappa": kappa,
            "median": float(np.median(errors)),
            "q10": float(np.quantile(errors, 0.10)),
            "q90": float(np.quantile(errors, 0.90)),
            "n_paths": int(errors.size),
            "n_exited": n_exited,
        })
    slope = None
    if len(kappas) >= 2:
        lk = np.log([row["kappa"] for row in per_kappa])
        lm = np.log([row["median"] for row in per_kappa])
        slope = float(np.polyfit(lk, lm, 1)[0])
    return {
        "regime": regime.variant,
        "n": spec.n,
        "x": xa.tolist(),
        "y": ya.tolist(),
        "t": t,
        "dt": dt,
        "n_paths": n_paths,
        "seed": seed,
        "per_kappa": per_kappa,
        "slope": slope,
        "expected_slope": -0.5,
    }
