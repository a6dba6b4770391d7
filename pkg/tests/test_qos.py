"""Throughput-prediction error metric and baseline predictors."""

import math

import numpy as np
import pytest

from nrtransport import (
    PredictionRecord,
    ThroughputTrace,
    horizon_cdfs,
    horizon_errors,
    predict,
    prediction_error,
    window_bits,
)
from nrtransport.errors import ConfigurationError
from nrtransport.rng import substream


def test_window_bits_constant_trace():
    trace = ThroughputTrace(1.0, np.full(100, 1000.0))
    assert window_bits(trace, 10.0, 5.0) == pytest.approx(5000.0, abs=1e-12)
    assert window_bits(trace, 3.0, 2.5) == pytest.approx(2500.0, abs=1e-12)


def test_window_bits_empty_window():
    trace = ThroughputTrace(1.0, np.zeros(10))
    assert window_bits(trace, 2.0, 3.0) == 0.0


def test_window_bits_fractional_epochs():
    trace = ThroughputTrace(1.0, np.array([100.0, 200.0, 400.0]))
    # [0.5, 1.5] takes half of epoch 0 and half of epoch 1.
    assert window_bits(trace, 0.5, 1.0) == pytest.approx(150.0, abs=1e-12)
    with pytest.raises(ConfigurationError):
        window_bits(trace, 2.5, 1.0)  # runs past the trace end
    with pytest.raises(ConfigurationError):
        window_bits(trace, 0.0, -1.0)


def test_prediction_error_arithmetic():
    rec = PredictionRecord(t=0.0, horizon_s=0.1, b_predicted=8e5, b_delivered=1e6)
    assert prediction_error(rec) == pytest.approx(2e6, abs=1e-12)
    perfect = PredictionRecord(t=0.0, horizon_s=1.0, b_predicted=5.0, b_delivered=5.0)
    assert prediction_error(perfect) == 0.0
    # Zero prediction against constant rate R gives e' = R.
    rate = 3e6
    rec = PredictionRecord(t=0.0, horizon_s=2.0, b_predicted=0.0, b_delivered=rate * 2.0)
    assert prediction_error(rec) == pytest.approx(rate, abs=1e-12)


def test_error_symmetry_and_homogeneity():
    a = PredictionRecord(t=0.0, horizon_s=0.5, b_predicted=10.0, b_delivered=4.0)
    b = PredictionRecord(t=0.0, horizon_s=0.5, b_predicted=4.0, b_delivered=10.0)
    assert prediction_error(a) == prediction_error(b)
    scaled = PredictionRecord(t=0.0, horizon_s=0.5, b_predicted=30.0, b_delivered=12.0)
    assert prediction_error(scaled) == pytest.approx(3 * prediction_error(a), abs=1e-12)


def test_constant_trace_all_predictors_exact():
    trace = ThroughputTrace(0.5, np.full(400, 250.0))
    for method in ("last_window", "moving_average", "ar1"):
        errs = horizon_errors(trace, 2.0, method, min_windows=10)
        assert np.max(errs) < 1e-12


def test_step_trace_last_window_error_equals_rate_jump():
    # Rate doubles at t0: predicting the first post-step window from the last
    # pre-step window misses by exactly R (the per-second increment).
    epoch = 1.0
    rate = 1000.0
    bits = np.concatenate([np.full(50, rate), np.full(50, 2 * rate)])
    trace = ThroughputTrace(epoch, bits)
    t0 = 50.0
    dt = 5.0
    pred = predict(trace, t0, dt, "last_window")
    delivered = window_bits(trace, t0, dt)
    e = prediction_error(
        PredictionRecord(t=t0, horizon_s=dt, b_predicted=pred, b_delivered=delivered)
    )
    assert e == pytest.approx(rate, abs=1e-9)


def test_ar1_with_unit_lambda_degenerates_to_last_window():
    rng = substream(5, "qos")
    trace = ThroughputTrace(0.1, rng.uniform(0, 1e5, 500))
    for t in (1.3, 7.7, 40.0):
        lw = predict(trace, t, 0.5, "last_window")
        ar = predict(trace, t, 0.5, "ar1", ar1_lambda=1.0)
        assert ar == pytest.approx(lw, abs=1e-9)


def test_moving_average_is_mean_of_trailing_windows():
    trace = ThroughputTrace(1.0, np.arange(100, dtype=float))
    t, dt = 20.0, 2.0
    manual = np.mean([window_bits(trace, t - (i + 1) * dt, dt) for i in range(4)])
    assert predict(trace, t, dt, "moving_average", ma_windows=4) == pytest.approx(manual)
    with pytest.raises(ConfigurationError):
        predict(trace, 1.0, 2.0, "moving_average", ma_windows=4)  # not enough history
    with pytest.raises(ConfigurationError):
        predict(trace, 20.0, 2.0, "nope")


def test_error_bounded_by_max_bits_over_horizon():
    rng = substream(6, "qos")
    trace = ThroughputTrace(0.2, rng.uniform(0, 1e6, 400))
    for t in np.linspace(2.0, 70.0, 15):
        dt = 1.0
        pred = predict(trace, float(t), dt, "last_window")
        deliv = window_bits(trace, float(t), dt)
        e = prediction_error(
            PredictionRecord(t=float(t), horizon_s=dt, b_predicted=pred, b_delivered=deliv)
        )
        assert 0.0 <= e <= max(pred, deliv) / dt + 1e-9


def test_cdf_invariant_to_whole_epoch_origin_shift():
    rng = substream(8, "qos")
    bits = rng.uniform(0, 1e5, 600)
    t1 = ThroughputTrace(0.5, bits)
    t2 = ThroughputTrace(0.5, np.roll(bits, 0))  # same trace, same origin
    c1 = horizon_cdfs(t1, [2.0], "last_window")[0]
    c2 = horizon_cdfs(t2, [2.0], "last_window")[0]
    assert np.array_equal(c1.errors, c2.errors)


def test_iid_trace_error_scales_with_inverse_sqrt_horizon():
    # On white-noise delivered bits the last-window error behaves like a CLT
    # sum: median e' drops by sqrt(10) across one decade of horizons.
    rng = np.random.default_rng(3)
    trace = ThroughputTrace(0.05, rng.uniform(1e5, 3e5, 120_000))
    m_short = np.median(horizon_errors(trace, 0.5, "last_window", step_s=0.5))
    m_long = np.median(horizon_errors(trace, 5.0, "last_window", step_s=5.0))
    assert abs(m_short / m_long - math.sqrt(10.0)) / math.sqrt(10.0) < 0.2


def test_trace_csv_round_trip(tmp_path):
    trace = ThroughputTrace(0.05, np.array([100.0, 0.0, 250.0]))
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    loaded = ThroughputTrace.from_csv(path)
    assert loaded.epoch_s == trace.epoch_s
    assert np.array_equal(loaded.delivered_bits, trace.delivered_bits)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigurationError):
        ThroughputTrace.from_csv(bad)


def test_trace_validation():
    with pytest.raises(ConfigurationError):
        ThroughputTrace(0.0, np.ones(5))
    with pytest.raises(ConfigurationError):
        ThroughputTrace(1.0, np.array([1.0, -2.0]))
    with pytest.raises(ConfigurationError):
        horizon_errors(ThroughputTrace(1.0, np.ones(5)), 1.0, min_windows=100)
