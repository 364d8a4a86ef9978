import math

import numpy as np
import pytest

import mixcure


def small_dataset():
    sim = mixcure.simulate(table=2, n=300, seed=4, calibration_draws=5000)
    return sim


def test_simulate_shapes_and_determinism():
    a = small_dataset()
    b = small_dataset()
    assert a["time"].shape == (300,)
    assert a["z"].shape == (300, 4)
    assert set(np.unique(a["status"])) <= {0, 1, 2}
    np.testing.assert_array_equal(a["time"], b["time"])
    assert 0.2 < a["rates"]["cure_rate"] < 0.4


def test_fit_returns_named_coefficients():
    d = small_dataset()
    doc = mixcure.fit(d["time"], d["status"], x=d["x"], z=d["z"], q=d["q"], latency="cox")
    fit = doc["fit"]
    assert fit["converged"]
    assert len(fit["beta"]) == 5
    assert len(fit["gamma"]) == 4
    assert all(math.isfinite(v) for v in fit["beta"])
    trace = fit["loglik_trace"]
    assert all(b >= a - 1e-6 for a, b in zip(trace, trace[1:]))


def test_ignore_strategy_matches_cutoff_without_known_cured():
    d = small_dataset()
    status = np.where(d["status"] == 2, 0, d["status"])
    cut = mixcure.fit(d["time"], status, x=d["x"], z=d["z"], mechanism="cutoff", latency="cox")
    ign = mixcure.fit(d["time"], status, x=d["x"], z=d["z"], q=d["q"], strategy="ignore", latency="cox")
    np.testing.assert_allclose(cut["fit"]["beta"], ign["fit"]["beta"], atol=1e-8)


def test_bad_status_raises():
    with pytest.raises(mixcure.Error):
        mixcure.fit([1.0, 2.0], [1, 5])


def test_unknown_strategy_raises_spec_error():
    with pytest.raises(mixcure.SpecError):
        mixcure.fit([1.0, 2.0], [1, 0], strategy="sometimes")


def test_quantile_type7():
    assert mixcure.quantile([1.0, 2.0, 3.0, 4.0], 0.25) == pytest.approx(1.75)


def test_read_dataset_line_numbers(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time,status\n1.0,1\n2.0,9\n")
    with pytest.raises(mixcure.InputError, match="line 3"):
        mixcure.read_dataset(p)


def test_compare_strategies_report():
    rep = mixcure.compare_strategies(2, 200, ["full", "ignore"], 2, calibration_draws=5000)
    assert [s["strategy"] for s in rep["strategies"]] == ["full", "ignore"]
