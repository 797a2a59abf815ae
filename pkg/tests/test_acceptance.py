"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.  Monte Carlo criteria use fixed seeds chosen ahead
of time; tolerances are the stated ones, not calibrated to the draws.
"""

import json
import math
import time

import numpy as np
import pytest

import bessel_freeze as bf
from bessel_freeze.chamber import Multiplicity, RootSystemSpec
from bessel_freeze.cli import main as cli_main
from bessel_freeze.freeze_ode import FreezingRegime, min_gap_profile, ode_solve, self_similar_profile
from bessel_freeze.polyroots import (
    fixed_point_from_zeros,
    frozen_fixed_point,
    stationary_defect,
)
from bessel_freeze.validate import (
    chisq_vs_sde,
    clt_b2_experiment,
    figure1_experiment,
    lln_rate_experiment,
    norm_clt_prediction,
    oracle_chi_square_1d,
    wishart_vs_sde,
)

from conftest import random_interior


def _report(name, ok, detail=""):
    print(f"[{name}] {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name}: {detail}"


# -- criterion 1: fixed point vs polynomial zeros ---------------------------

def test_c01_fixed_point_polynomial_equivalence():
    t0 = time.time()
    worst_defect = 0.0
    worst_newton = 0.0
    cases = [("A", None, range(1, 21))]
    cases += [("B", nu, range(1, 21)) for nu in (0.5, 1.0, 2.0)]
    cases += [("D", None, range(2, 21))]
    for kind, nu, sizes in cases:
        for n in sizes:
            spec = RootSystemSpec(kind, n)
            y0 = fixed_point_from_zeros(spec, nu) if kind == "B" else fixed_point_from_zeros(spec)
            defect = stationary_defect(spec, y0, nu=nu) if kind == "B" else stationary_defect(spec, y0)
            worst_defect = max(worst_defect, defect)
            res = frozen_fixed_point(spec, nu=nu) if kind == "B" else frozen_fixed_point(spec)
            worst_newton = max(worst_newton, float(np.abs(res.y.coords - y0).max()))
    elapsed = time.time() - t0
    _report("C1 fixed-point/zero equivalence",
            worst_defect <= 1e-9 and worst_newton <= 1e-10 and elapsed < 10,
            f"defect={worst_defect:.2e} newton-diff={worst_newton:.2e} elapsed={elapsed:.1f}s")


# -- criteria 2-4: limit dynamics ------------------------------------------

GRID = np.linspace(0.0, 10.0, 101)


@pytest.fixture(scope="module")
def self_similar_trajectories():
    runs = []
    for regime in (FreezingRegime.a_k(), FreezingRegime.b_beta(1.0), FreezingRegime.d_k()):
        for n in (2, 3, 5):
            spec = RootSystemSpec(regime.kind, n)
            profile = self_similar_profile(regime, spec)
            for c in (0.5, 1.0, 2.0):
                traj = ode_solve(regime, spec, c * profile, GRID)
                runs.append((regime, c, profile, traj))
    return runs


@pytest.fixture(scope="module")
def b_k1_trajectories():
    rng = np.random.default_rng(20250809)
    regime = FreezingRegime.b_k1(1.0)
    runs = []
    for trial in range(20):
        n = (2, 3, 5)[trial % 3]
        x0 = random_interior(rng, "B", n)
        spec = RootSystemSpec("B", n)
        runs.append((regime, x0, ode_solve(regime, spec, x0, GRID)))
    return runs


def test_c02_self_similar_solutions(self_similar_trajectories):
    worst = 0.0
    for regime, c, profile, traj in self_similar_trajectories:
        if regime.variant == "A_k":
            scale = np.sqrt(2.0 * GRID + c * c)
        else:
            scale = np.sqrt(GRID + c * c)
        exact = scale[:, None] * profile
        rel = np.linalg.norm(traj.points - exact, axis=1) / np.linalg.norm(exact, axis=1)
        worst = max(worst, float(rel.max()))
    _report("C2 self-similar solutions", worst <= 1e-6, f"worst rel err={worst:.2e}")


def test_c03_b_k1_closed_form(b_k1_trajectories):
    worst = 0.0
    for _, x0, traj in b_k1_trajectories:
        exact = np.sqrt(2.0 * GRID[:, None] + x0**2)
        worst = max(worst, float(np.abs(traj.points - exact).max()))
    _report("C3 closed-form growing-axis flow", worst <= 1e-8, f"worst abs err={worst:.2e}")


def test_c04_gap_monotonicity(self_similar_trajectories, b_k1_trajectories):
    worst = 0.0
    for regime, _, _, traj in self_similar_trajectories:
        prof = min_gap_profile(traj, regime)
        worst = min(worst, float(np.diff(prof).min()))
    for regime, _, traj in b_k1_trajectories:
        prof = min_gap_profile(traj, regime)
        worst = min(worst, float(np.diff(prof).min()))
    _report("C4 gap monotonicity", worst >= -1e-9, f"most negative increment={worst:.2e}")


# -- criterion 5: limit-law rate --------------------------------------------

def test_c05_lln_rate():
    configs = [
        (FreezingRegime.a_k(), np.array([2.0, 0.0, -2.0])),
        (FreezingRegime.b_beta(1.0), np.array([3.0, 2.0, 1.0])),
        (FreezingRegime.b_k1(1.0), np.array([3.0, 2.0, 1.0])),
        (FreezingRegime.d_k(), np.array([3.0, 2.0, 1.0])),
    ]
    unit = np.array([1.0, 0.0, 0.0])
    details = []
    ok = True
    for regime, x in configs:
        spec = RootSystemSpec(regime.kind, 3)
        t0 = time.time()
        for y in (np.zeros(3), unit):
            rep = lln_rate_experiment(regime, spec, x, y, [25.0, 100.0, 400.0],
                                      n_paths=100, t=1.0, dt=1e-3, seed=314159)
            slope = rep["slope"]
            ok = ok and -0.65 <= slope <= -0.35
            # shifting the start by a fixed y must not let errors grow with kappa
            medians = [row["median"] for row in rep["per_kappa"]]
            ok = ok and max(medians) <= 2.0 * medians[0]
            details.append(f"{regime.variant}/|y|={np.linalg.norm(y):.0f}:{slope:+.3f}")
        elapsed = time.time() - t0
        ok = ok and elapsed < 120
        details.append(f"({elapsed:.0f}s)")
    _report("C5 limit-law rate", ok, "slopes " + " ".join(details))


# -- criteria 6-7: central limit behaviour ----------------------------------

def test_c06_clt_growing_axis():
    rep = clt_b2_experiment([3, 2, 1], t=1.0, k1=500.0, k2=1.0,
                            n_paths=2000, dt=5e-4, seed=60601)
    ratios = [c["variance_ratio"] for c in rep["coordinates"]]
    ks_passes = sum(c["ks_below_critical"] for c in rep["coordinates"])
    ok = all(abs(r - 1.0) <= 0.15 for r in ratios) and ks_passes >= 2
    _report("C6 growing-axis normal limit", ok,
            f"variance ratios={np.round(ratios, 3)} ks passes={ks_passes}/3 "
            f"exits={rep['n_exited']}")


@pytest.fixture(scope="module")
def figure_report():
    return figure1_experiment(seed=70707, n_paths=2000)


def test_c07_bias_panels(figure_report):
    panels = {(p["t"], p["k1"]): p for p in figure_report["panels"]}
    bias = {key: [c["bias"] for c in panel["coordinates"]]
            for key, panel in panels.items()}
    b5 = bias[(10.0, 5.0)]
    checks = [
        b5[0] > 0,
        b5[2] < 0,
        abs(b5[1]) < min(abs(b5[0]), abs(b5[2])),
    ]
    for coord in (0, 2):
        seq = [abs(bias[(10.0, k1)][coord]) for k1 in (5.0, 50.0, 500.0)]
        checks.append(seq[0] > seq[1] > seq[2])
    _report("C7 finite-coupling bias", all(checks),
            f"biases at t=10, k1=5: {np.round(b5, 3)}; "
            f"outer-coordinate decay verified across k1=5,50,500")


# -- criteria 8-9: independent oracles ---------------------------------------

def test_c08_wishart_oracle():
    real = wishart_vs_sde(11, 2, 1, [2.0, 1.0], t=1.0, n_samples=2000, seed=88)
    cplx = wishart_vs_sde(6, 2, 2, [2.0, 1.0], t=1.0, n_samples=2000, seed=88)
    ok = all(r["below"] for r in real["ks"]) and all(r["below"] for r in cplx["ks"])
    _report("C8 Wishart oracle equivalence", ok,
            f"real k1={real['multiplicity']['k1']} KS={[round(r['statistic'], 4) for r in real['ks']]}; "
            f"complex k1={cplx['multiplicity']['k1']} KS={[round(r['statistic'], 4) for r in cplx['ks']]} "
            f"(crit {real['ks'][0]['critical_1pct']:.4f}); "
            f"axis couplings are (d(p-n+1)-1)/2, see decisions ledger")


def test_c09_chi_square_oracle():
    rep = chisq_vs_sde(3, 1.0, t=1.0, n_samples=2000, seed=99)
    s = oracle_chi_square_1d(3, 1.0, 1.0, 10_000, seed=909).draws[:, 0]
    mean_se = s.std(ddof=1) / math.sqrt(s.size)
    var = s.var(ddof=1)
    m4 = ((s - s.mean()) ** 4).mean()
    var_se = math.sqrt((m4 - var**2) / s.size)
    ok = (rep["ks"]["below"]
          and abs(s.mean() - 6.0) <= 3 * mean_se
          and abs(var - 18.0) <= 3 * var_se)
    _report("C9 chi-square oracle", ok,
            f"KS={rep['ks']['statistic']:.4f} (crit {rep['ks']['critical_1pct']:.4f}) "
            f"mean={s.mean():.3f} (6 ± {3*mean_se:.3f}) var={var:.2f} (18 ± {3*var_se:.2f})")


# -- criteria 10-11: norm and center-of-gravity fluctuations -----------------

def test_c10_norm_fluctuations():
    k = 200.0
    x = np.array([3.0, 2.0, 1.0])
    spec = RootSystemSpec("A", 3)
    gamma = Multiplicity.single(k).gamma(spec)
    assert gamma == 600.0
    cfg = bf.SimConfig(spec, Multiplicity.single(k), math.sqrt(k) * x, horizon=1.0,
                       dt=5e-4, seed=1010, n_paths=2000, guard_eps=1e-6)
    terminal = bf.simulate_terminal(cfg)
    norms = np.linalg.norm(terminal.alive(), axis=1)
    predicted = float(norm_clt_prediction(x, 1.0, gamma).variance_diag[0])
    ratio = norms.var(ddof=1) / predicted
    _report("C10 norm fluctuations", abs(ratio - 1.0) <= 0.15,
            f"variance ratio={ratio:.3f} (predicted {predicted:.4f}) exits={terminal.exited.sum()}")


def test_c11_center_of_gravity():
    x = np.array([3.0, 2.0, 1.0])
    spec = RootSystemSpec("A", 3)
    start = math.sqrt(50.0) * x
    cfg = bf.SimConfig(spec, Multiplicity.single(50.0), start, horizon=1.0,
                       dt=1e-3, seed=1111, n_paths=2000, guard_eps=1e-6)
    terminal = bf.simulate_terminal(cfg)
    sums = terminal.alive().sum(axis=1) - start.sum()
    ratio = sums.var(ddof=1) / 3.0
    _report("C11 center of gravity", abs(ratio - 1.0) <= 0.10,
            f"Var(sum displacement)={sums.var(ddof=1):.3f} target=3 ratio={ratio:.3f}")


# -- criterion 12: byte determinism ------------------------------------------

SIM_CONFIG = """system = B
n = 3
k1 = 5
k2 = 1
start = 6.7,4.5,2.2
horizon = 0.5
dt = 0.001
seed = 424242
paths = 4
"""


def test_c12_byte_determinism(tmp_path, monkeypatch):
    config = tmp_path / "run.cfg"
    config.write_text(SIM_CONFIG)
    outs = [tmp_path / f"r{i}" for i in range(3)]
    monkeypatch.setenv("BESSEL_FREEZE_THREADS", "1")
    assert cli_main(["simulate", str(config), "--out", str(outs[0])]) == 0
    assert cli_main(["simulate", str(config), "--out", str(outs[1])]) == 0
    monkeypatch.setenv("BESSEL_FREEZE_THREADS", "8")
    assert cli_main(["simulate", str(config), "--out", str(outs[2])]) == 0
    ok = True
    for name in (f"path_{i:04d}.csv" for i in range(4)):
        ref = (outs[0] / name).read_bytes()
        ok = ok and (outs[1] / name).read_bytes() == ref
        ok = ok and (outs[2] / name).read_bytes() == ref
    manifests = [json.loads((o / "manifest.json").read_text()) for o in outs]
    for m in manifests:
        m.pop("created_at")
    ok = ok and manifests[0] == manifests[1] == manifests[2]
    _report("C12 byte determinism", ok,
            "identical CSV bytes across two runs and thread counts 1/8")
