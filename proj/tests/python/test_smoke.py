import math

import numpy as np
import pytest

import oprisk


def test_quantile_cdf_round_trip():
    m = oprisk.SeverityModel("GPD", 0.8, 35000.0)
    p = np.array([0.1, 0.5, 0.9, 0.999])
    np.testing.assert_allclose(oprisk.cdf(m, oprisk.quantile(m, p)), p, rtol=1e-12)
    assert math.isclose(float(oprisk.cdf(m, 0.0)), 0.0)


def test_truncated_model_support():
    m = oprisk.SeverityModel("LogNormal", 10.0, 2.0, threshold=10000.0)
    assert m.label == "TLogN"
    assert float(oprisk.cdf(m, 10000.0)) == 0.0
    assert float(oprisk.quantile(m, 0.5)) > 10000.0


def test_infinite_mean_capital():
    m = oprisk.SeverityModel("GPD", 1.1, 40000.0)
    assert math.isclose(oprisk.isla(m, 25.0), 2521620617.0, rel_tol=5e-3)
    b = oprisk.capital(m, 25.0, method="degen")
    assert b.branch == "degen_infinite_mean"
    assert b.tail_index == pytest.approx(1.1)
    with pytest.raises(oprisk.DomainError):
        oprisk.sla_bk(m, 25.0)


def test_fit_recovers_parameters():
    truth = oprisk.SeverityModel("LogNormal", 10.0, 2.0)
    losses = oprisk.sample(truth, 5000, seed=3)
    fit = oprisk.fit_severity(losses, "LogNormal")
    assert fit.converged
    assert abs(fit.model.p1 - 10.0) < 0.1
    assert abs(fit.model.p2 - 2.0) < 0.1


def test_fisher_and_covariance():
    f = oprisk.fisher_information(oprisk.SeverityModel("LogNormal", 10.0, 2.0))
    assert f["method"] == "closed_form"
    assert f["inverse"][0][0] == pytest.approx(4.0)
    assert f["inverse"][1][1] == pytest.approx(2.0)
    cov = oprisk.param_covariance(oprisk.SeverityModel("GPD", 0.8, 35000.0), 250)
    assert cov["rho"] < 0.0


def test_rce_shrinks_convex_capital():
    r = oprisk.rce(oprisk.SeverityModel("LogNormal", 10.0, 2.0), 250, 25.0)
    assert 0.0 < r.ratio < 1.0
    assert r.capital < r.step1_capital
    assert r.c == pytest.approx(1.55)
    with pytest.raises(oprisk.ConfigError):
        oprisk.rce(oprisk.SeverityModel("Normal", 5e5, 1.5e6), 250, 25.0)


def test_bad_input_raises():
    with pytest.raises(oprisk.ConfigError):
        oprisk.SeverityModel("Burr", 1.0, 1.0)
    with pytest.raises(oprisk.DomainError):
        oprisk.SeverityModel("LogNormal", 10.0, -1.0)
    with pytest.raises(oprisk.Error):
        oprisk.fit_severity([-1.0, 2.0, 3.0], "LogNormal")


def test_small_study_is_deterministic():
    truth = oprisk.SeverityModel("GPD", 0.875, 47500.0)
    a = oprisk.simulate_study(truth, replications=8, seed=5, threads=1)
    b = oprisk.simulate_study(truth, replications=8, seed=5, threads=2)
    assert a == b
    assert {row["estimator"] for row in a["stats"]} == {"MLE", "RCE"}
    assert a["n_failed"] <= 1
