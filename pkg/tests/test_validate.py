import math

import numpy as np
import pytest

from bessel_freeze.chamber import BoundaryPoint, RootSystemSpec
from bessel_freeze.validate import (
    NormalPrediction,
    SampleSet,
    ShapeError,
    chisq_vs_sde,
    clt_b2_centering,
    clt_b2_prediction,
    clt_squared_prediction,
    figure1_experiment,
    ks_one_sample_normal,
    ks_two_sample,
    norm_clt_prediction,
    oracle_chi_square_1d,
    oracle_wishart,
    wishart_multiplicity,
)


def test_clt_b2_prediction_values():
    pred = clt_b2_prediction([3, 2, 1], t=1.0)
    np.testing.assert_allclose(pred.variance_diag, [10 / 11, 5 / 6, 2 / 3], rtol=1e-14)
    np.testing.assert_array_equal(pred.mean, np.zeros(3))
    pred10 = clt_b2_prediction([3.0], t=10.0)
    assert pred10.variance_diag[0] == pytest.approx(190 / 29, rel=1e-14)
    # small-coordinate limit of the variance formula is t/2
    eps = clt_b2_prediction([1e-9], t=2.0)
    assert eps.variance_diag[0] == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(BoundaryPoint):
        clt_b2_prediction([3, 3, 1], t=1.0)


def test_clt_b2_centering():
    np.testing.assert_allclose(
        clt_b2_centering([3, 2, 1], t=1.0, k1=500.0),
        math.sqrt(500) * np.sqrt([11.0, 6.0, 3.0]), rtol=1e-14)


def test_clt_squared_prediction_and_delta_link():
    pred = clt_squared_prediction([3.0], t=1.0)
    assert pred.variance_diag[0] == pytest.approx(40.0, rel=1e-14)
    # vanishing-coordinate limit of the formula is 4 t^2
    pred0 = clt_squared_prediction([1e-9], t=1.5)
    assert pred0.variance_diag[0] == pytest.approx(9.0, rel=1e-9)
    x = np.array([3.0, 2.0, 1.0])
    t = 1.7
    sq = clt_squared_prediction(x, t).variance_diag
    b2 = clt_b2_prediction(x, t).variance_diag
    np.testing.assert_allclose(b2, sq / (4 * (2 * t + x**2)), rtol=1e-12)


def test_norm_clt_prediction_values():
    pred = norm_clt_prediction([3, 2, 1], t=1.0, gamma=600.0)
    assert pred.variance_diag[0] == pytest.approx(15 / 16, rel=1e-14)
    small = norm_clt_prediction([1e-9], t=2.0, gamma=10.0)
    assert small.variance_diag[0] == pytest.approx(1.0, rel=1e-9)
    # one particle: same formula as the per-coordinate prediction
    one = norm_clt_prediction([2.5], t=1.3, gamma=5.0)
    per = clt_b2_prediction([2.5], t=1.3)
    assert one.variance_diag[0] == pytest.approx(per.variance_diag[0], rel=1e-14)


def test_chi_square_oracle_moments():
    s = oracle_chi_square_1d(1, 0.0, 1.0, 10_000, seed=71).draws[:, 0]
    se = s.std(ddof=1) / math.sqrt(s.size)
    assert abs(s.mean() - 1.0) <= 3 * se
    s = oracle_chi_square_1d(5, 1.0, 2.0, 10_000, seed=72).draws[:, 0]
    se = s.std(ddof=1) / math.sqrt(s.size)
    assert abs(s.mean() - 15.0) <= 3 * se
    var = s.var(ddof=1)
    m4 = ((s - s.mean()) ** 4).mean()
    se_var = math.sqrt((m4 - var**2) / s.size)
    assert abs(var - 80.0) <= 3 * se_var


def test_wishart_one_dim_chi_mean():
    spec = RootSystemSpec("B", 1)
    draws = oracle_wishart(3, spec, 1, [0.0], 1.0, 10_000, seed=5).draws[:, 0]
    mean_chi3 = math.sqrt(2) * math.gamma(2.0) / math.gamma(1.5)
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - mean_chi3) <= 3 * se


def test_wishart_multiplicity_map():
    # one particle: radial part of a (d*p)-dimensional Brownian motion
    m = wishart_multiplicity(3, 1, 1)
    assert (m.k1, m.k2) == (1.0, 0.5)
    m = wishart_multiplicity(11, 2, 1)
    assert (m.k1, m.k2) == (4.5, 0.5)
    m = wishart_multiplicity(6, 2, 2)
    assert (m.k1, m.k2) == (4.5, 1.0)
    m = wishart_multiplicity(3, 2, 4)
    assert (m.k1, m.k2) == (3.5, 2.0)


def test_wishart_shape_and_field_validation():
    spec = RootSystemSpec("B", 3)
    with pytest.raises(ShapeError):
        oracle_wishart(2, spec, 1, [3, 2, 1], 1.0, 100, seed=1)
    with pytest.raises(ValueError):
        oracle_wishart(5, spec, 3, [3, 2, 1], 1.0, 100, seed=1)


def test_wishart_draws_are_ordered_b_points():
    spec = RootSystemSpec("B", 3)
    for d in (1, 2, 4):
        draws = oracle_wishart(5, spec, d, [3, 2, 1], 1.0, 200, seed=9).draws
        assert draws.shape == (200, 3)
        assert (np.diff(draws, axis=1) <= 0).all()
        assert (draws >= 0).all()


def test_ks_two_sample_edge_cases():
    a = SampleSet(np.arange(10.0), "a", 0)
    stat, _ = ks_two_sample(a, a)
    assert stat == 0.0
    b = SampleSet(np.arange(10.0) + 100.0, "b", 0)
    stat, _ = ks_two_sample(a, b)
    assert stat == 1.0


def test_ks_two_sample_null_calibration():
    passes = 0
    for rep in range(100):
        a = oracle_chi_square_1d(3, 1.0, 1.0, 2000, seed=1000 + rep)
        b = oracle_chi_square_1d(3, 1.0, 1.0, 2000, seed=5000 + rep)
        stat, crit = ks_two_sample(a, b)
        passes += stat < crit
    assert passes >= 95


def test_ks_one_sample_normal():
    rng = np.random.default_rng(4)
    pred = NormalPrediction([0.0], [4.0])
    good = SampleSet(2.0 * rng.standard_normal(3000), "good", 4)
    stat, crit = ks_one_sample_normal(good, pred)
    assert 0.0 <= stat < crit
    shifted = SampleSet(good.draws[:, 0] + 1.0, "shifted", 4)
    stat, crit = ks_one_sample_normal(shifted, pred)
    assert crit < stat <= 1.0


def test_chisq_vs_sde_smoke():
    report = chisq_vs_sde(3, 1.0, 1.0, 600, seed=2025, dt=1e-3)
    assert report["multiplicity_k1"] == 1.0
    assert report["predicted_mean"] == 6.0
    assert report["predicted_variance"] == 18.0
    assert report["ks"]["statistic"] < 3 * report["ks"]["critical_1pct"]


def test_figure1_experiment_structure():
    report = figure1_experiment(seed=77, n_paths=300, t_values=(1.0,),
                                k1_values=(5.0, 50.0))
    assert len(report["panels"]) == 2
    panel = report["panels"][0]
    assert {c["index"] for c in panel["coordinates"]} == {1, 2, 3}
    coord = panel["coordinates"][0]
    assert len(coord["histogram"]["counts"]) == 48
    assert len(coord["histogram"]["pdf_overlay"]) == 48
    assert coord["predicted_variance"] == pytest.approx(10 / 11, rel=1e-12)
    # bias of the outer coordinates shrinks with k1 already at low path counts
    b5 = abs(report["panels"][0]["coordinates"][0]["bias"])
    b50 = abs(report["panels"][1]["coordinates"][0]["bias"])
    assert b50 < b5


def test_sample_set_validation():
    with pytest.raises(ValueError):
        SampleSet(np.array([1.0]), "too short", 0)
    with pytest.raises(ValueError):
        SampleSet(np.array([1.0, np.inf]), "bad", 0)
    with pytest.raises(ValueError):
        NormalPrediction([0.0], [0.0])
