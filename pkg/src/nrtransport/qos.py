"""Throughput-prediction error over delivered-bits traces.

The error metric is |B_delivered - B_predicted| / dt in bits per second,
evaluated for pluggable baseline predictors over sliding windows at several
horizons, and summarized as empirical CDFs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .positioning import ErrorCdf, empirical_cdf


@dataclass(frozen=True)
class ThroughputTrace:
    """Delivered bits per uniform epoch."""

    epoch_s: float
    delivered_bits: np.ndarray
    metadata: dict | None = None

    def __post_init__(self):
        bits = np.asarray(self.delivered_bits, dtype=float)
        object.__setattr__(self, "delivered_bits", bits)
        if self.epoch_s <= 0:
            raise ConfigurationError("epoch duration must be positive")
        if bits.ndim != 1 or len(bits) == 0 or np.any(bits < 0):
            raise ConfigurationError("delivered bits must be a non-negative 1-D sequence")

    @property
    def duration(self) -> float:
        return len(self.delivered_bits) * self.epoch_s

    @classmethod
    def from_csv(cls, path) -> "ThroughputTrace":
        data = np.genfromtxt(path, delimiter=",", names=True)
        if data.dtype.names is None or set(data.dtype.names) != {"epoch_s", "delivered_bits"}:
            raise ConfigurationError("trace CSV needs header: epoch_s, delivered_bits")
        return cls(epoch_s=float(data["epoch_s"][0]), delivered_bits=np.asarray(data["delivered_bits"]))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch_s,delivered_bits\n")
            for b in self.delivered_bits:
                fh.write(f"{self.epoch_s!r},{int(b)}\n")


@dataclass(frozen=True)
class PredictionRecord:
    t: float
    horizon_s: float
    b_predicted: float
    b_delivered: float

    def __post_init__(self):
        if self.horizon_s <= 0:
            raise ConfigurationError("horizon must be positive")
        if self.b_predicted < 0 or self.b_delivered < 0:
            raise ConfigurationError("bit counts must be non-negative")


def window_bits(trace: ThroughputTrace, t: float, dt: float) -> float:
    """Bits delivered in [t, t + dt], with proportional weighting of the
    epochs that only partially overlap the window."""
    if dt <= 0:
        raise ConfigurationError("window length must be positive")
    if t < -1e-12 or t + dt > trace.duration + 1e-9:
        raise ConfigurationError("window outside the trace")
    e = trace.epoch_s
    lo = t / e
    hi = (t + dt) / e
    i0 = int(math.floor(lo))
    i1 = min(int(math.ceil(hi)), len(trace.delivered_bits))
    total = 0.0
    for i in range(max(i0, 0), i1):
        overlap = min(hi, i + 1) - max(lo, i)
        total += trace.delivered_bits[i] * max(overlap, 0.0)
    return total


def prediction_error(record: PredictionRecord) -> float:
    """|delivered - predicted| / horizon, in bits per second."""
    return abs(record.b_delivered - record.b_predicted) / record.horizon_s


PREDICTORS = ("last_window", "moving_average", "ar1")


def predict(
    trace: ThroughputTrace,
    t: float,
    dt: float,
    method: str = "last_window",
    *,
    ma_windows: int = 4,
    ar1_lambda: float = 0.5,
) -> float:
    """Predicted bits for the window [t, t + dt] from history before t."""
    if method == "last_window":
        if t - dt < -1e-9:
            raise ConfigurationError("insufficient history for last_window")
        return window_bits(trace, t - dt, dt)
    if method == "moving_average":
        if ma_windows < 1:
            raise ConfigurationError("moving_average needs k >= 1")
        if t - ma_windows * dt < -1e-9:
            raise ConfigurationError("insufficient history for moving_average")
        vals = [window_bits(trace, t - (i + 1) * dt, dt) for i in range(ma_windows)]
        return float(np.mean(vals))
    if method == "ar1":
        if not 0.0 < ar1_lambda <= 1.0:
            raise ConfigurationError("ar1 lambda must lie in (0, 1]")
        n = max(1, int(math.floor((t + 1e-9) / dt)))
        if n < 1:
            raise ConfigurationError("insufficient history for ar1")
        # Exponentially weighted history of consecutive trailing windows.
        pred = window_bits(trace, t - n * dt, dt)
        for i in range(n - 1, 0, -1):
            pred = ar1_lambda * window_bits(trace, t - i * dt, dt) + (1.0 - ar1_lambda) * pred
        return pred
    raise ConfigurationError(f"unknown predictor: {method}")


def horizon_errors(
    trace: ThroughputTrace,
    horizon_s: float,
    method: str = "last_window",
    *,
    step_s: float | None = None,
    min_windows: int = 100,
    **kwargs,
) -> np.ndarray:
    """Prediction-error samples over sliding windows for one horizon."""
    history = horizon_s
    if method == "moving_average":
        history = kwargs.get("ma_windows", 4) * horizon_s
    step = step_s if step_s is not None else max(trace.epoch_s, horizon_s / 10.0)
    starts = np.arange(history, trace.duration - horizon_s + 1e-9, step)
    if len(starts) < min_windows:
        raise ConfigurationError(
            f"only {len(starts)} evaluable windows at horizon {horizon_s}s; need {min_windows}"
        )
    errs = np.empty(len(starts))
    for i, t in enumerate(starts):
        rec = PredictionRecord(
            t=float(t),
            horizon_s=horizon_s,
            b_predicted=predict(trace, float(t), horizon_s, method, **kwargs),
            b_delivered=window_bits(trace, float(t), horizon_s),
        )
        errs[i] = prediction_error(rec)
    return errs


def horizon_cdfs(
    trace: ThroughputTrace,
    horizons,
    method: str = "last_window",
    **kwargs,
) -> list[ErrorCdf]:
    """Empirical prediction-error CDF per horizon."""
    return [empirical_cdf(horizon_errors(trace, h, method, **kwargs)) for h in horizons]
