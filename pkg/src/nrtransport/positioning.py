"""Highway fusion positioning study.

Generates noisy downlink range/angle measurements plus inertial acceleration
along a trajectory, fuses them with an extended Kalman filter (optionally from
several base stations at once), solves per-epoch geometric positions for the
radio-only baseline, and summarizes horizontal errors as empirical CDFs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import SPEED_OF_LIGHT, los_observation
from .errors import ConfigurationError, EstimationError, NumericalError
from .rng import substream
from .scenario import Deployment, PoseSample, Trajectory


@dataclass(frozen=True)
class NoiseModel:
    """Measurement noise scales.

    Range std follows a bandwidth/SNR law, c / (2 B sqrt(2 SNR)); angle std
    combines the beam-grid quantization step with an SNR-dependent Gaussian
    term (root-sum-square). The IMU reports acceleration with white noise.
    """

    eff_bandwidth_hz: float = 400e6
    angle_grid_step_rad: float = 0.125  # 16-column half-wavelength DFT grid
    angle_snr_coeff_rad: float = 0.02
    imu_accel_sigma: float = 0.05  # m/s^2 per axis

    def range_sigma(self, snr_db: float) -> float:
        if math.isinf(snr_db):
            return 0.0
        snr = 10.0 ** (snr_db / 10.0)
        return SPEED_OF_LIGHT / (2.0 * self.eff_bandwidth_hz * math.sqrt(2.0 * snr))

    def angle_sigma(self, snr_db: float) -> float:
        quant = self.angle_grid_step_rad / math.sqrt(12.0)
        if math.isinf(snr_db):
            gauss = 0.0
        else:
            gauss = self.angle_snr_coeff_rad / math.sqrt(10.0 ** (snr_db / 10.0))
        return math.hypot(quant, gauss)


@dataclass(frozen=True)
class SiteMeasurement:
    site_id: int
    range_m: float
    aoa_az: float  # azimuth toward the site, seen from the vehicle
    aoa_el: float
    snr_db: float


@dataclass(frozen=True)
class MeasurementFrame:
    t: float
    per_site: tuple[SiteMeasurement, ...]
    imu_accel: np.ndarray  # 2-vector, road plane

    def __post_init__(self):
        ordered = tuple(sorted(self.per_site, key=lambda m: (-m.snr_db, m.range_m)))
        object.__setattr__(self, "per_site", ordered)
        for m in self.per_site:
            if m.range_m <= 0:
                raise ConfigurationError("measured range must be positive")


def simulate_measurements(
    deployment: Deployment,
    trajectory: Trajectory,
    snr_db: float,
    n_fused_bs: int,
    seed: int,
    *,
    carrier_hz: float = 28e9,
    noise: NoiseModel | None = None,
    decimation: int = 1,
) -> list[MeasurementFrame]:
    """One frame per (decimated) trajectory epoch from the nearest sites."""
    if n_fused_bs < 1:
        raise ConfigurationError("n_fused_bs must be at least 1")
    if n_fused_bs > len(deployment.sites):
        raise ConfigurationError("n_fused_bs exceeds the number of deployed sites")
    if decimation < 1:
        raise ConfigurationError("decimation must be >= 1")
    noise = noise or NoiseModel()
    sigma_r = noise.range_sigma(snr_db)
    sigma_ang = noise.angle_sigma(snr_db)
    rng = substream(seed, "positioning", "meas")

    site_pos = deployment.site_positions()
    frames = []
    for i in range(0, len(trajectory), decimation):
        pose = trajectory.sample(i)
        d = np.linalg.norm(site_pos - pose.position, axis=1)
        nearest = np.argsort(d, kind="stable")[:n_fused_bs]
        per_site = []
        for k in nearest:
            site = deployment.sites[int(k)]
            obs = los_observation(site, pose, carrier_hz)
            per_site.append(
                SiteMeasurement(
                    site_id=site.id,
                    range_m=obs.true_range + rng.normal(0.0, sigma_r) if sigma_r else obs.true_range,
                    aoa_az=obs.true_aoa[0] + (rng.normal(0.0, sigma_ang) if sigma_ang else 0.0),
                    aoa_el=obs.true_aoa[1] + (rng.normal(0.0, sigma_ang) if sigma_ang else 0.0),
                    snr_db=snr_db,
                )
            )
        accel = pose.acceleration[:2].copy()
        if noise.imu_accel_sigma:
            accel = accel + rng.normal(0.0, noise.imu_accel_sigma, 2)
        frames.append(MeasurementFrame(t=pose.t, per_site=tuple(per_site), imu_accel=accel))
    return frames


# ---------------------------------------------------------------------------
# Extended Kalman filter


@dataclass(frozen=True)
class StateEstimate:
    """Planar state (x, y, vx, vy) with covariance."""

    t: float
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.covariance, dtype=float)
        if p.shape != (4, 4) or np.max(np.abs(p - p.T)) > 1e-12:
            raise ConfigurationError("covariance must be symmetric 4x4")
        if np.any(np.linalg.eigvalsh(p) <= 0):
            raise ConfigurationError("covariance must be positive definite")


@dataclass(frozen=True)
class EkfParams:
    deployment: Deployment
    noise: NoiseModel = field(default_factory=NoiseModel)
    ue_height: float = 1.5
    process_jitter: float = 1e-12
    sigma_floor_m: float = 1e-6
    sigma_floor_rad: float = 1e-9


def _measurement_model(state_xy: np.ndarray, site_pos: np.ndarray, ue_height: float):
    """Predicted (range, az, el) toward a site and Jacobian wrt (x, y)."""
    dx = site_pos[0] - state_xy[0]
    dy = site_pos[1] - state_xy[1]
    dz = site_pos[2] - ue_height
    d2 = math.hypot(dx, dy)
    r = math.sqrt(d2 * d2 + dz * dz)
    az = math.atan2(dy, dx)
    el = math.atan2(dz, d2)
    # d/d(x,y) of each observable.
    jac = np.array(
        [
            [-dx / r, -dy / r],
            [dy / (d2 * d2), -dx / (d2 * d2)],
            [dx * dz / (r * r * d2), dy * dz / (r * r * d2)],
        ]
    )
    return np.array([r, az, el]), jac


def _wrap(angle: np.ndarray) -> np.ndarray:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def ekf_fuse(
    frames: list[MeasurementFrame],
    initial: StateEstimate,
    params: EkfParams,
) -> list[StateEstimate]:
    """Fuse IMU acceleration (control input) with stacked per-site residuals."""
    if not frames:
        raise ConfigurationError("no measurement frames")
    sites = {s.id: s.position for s in params.deployment.sites}
    x = np.asarray(initial.mean, dtype=float).copy()
    p = np.asarray(initial.covariance, dtype=float).copy()
    t_prev = initial.t
    out = []
    for epoch, frame in enumerate(frames):
        dt = frame.t - t_prev
        if dt < 0:
            raise ConfigurationError("frames must be time-ordered")
        t_prev = frame.t
        if dt > 0:
            f = np.eye(4)
            f[0, 2] = f[1, 3] = dt
            a = frame.imu_accel
            x = f @ x
            x[0] += 0.5 * a[0] * dt * dt
            x[1] += 0.5 * a[1] * dt * dt
            x[2] += a[0] * dt
            x[3] += a[1] * dt
            g = np.array([[0.5 * dt * dt, 0.0], [0.0, 0.5 * dt * dt], [dt, 0.0], [0.0, dt]])
            sig_a = max(params.noise.imu_accel_sigma, 1e-6)
            q = (sig_a**2) * (g @ g.T)
            p = f @ p @ f.T + q

        # Stack residuals from all reported sites.
        n = len(frame.per_site)
        if n:
            z = np.empty(3 * n)
            pred = np.empty(3 * n)
            jac = np.zeros((3 * n, 4))
            r_diag = np.empty(3 * n)
            sig_r = max(params.noise.range_sigma(frame.per_site[0].snr_db), params.sigma_floor_m)
            sig_ang = max(params.noise.angle_sigma(frame.per_site[0].snr_db), params.sigma_floor_rad)
            for k, m in enumerate(frame.per_site):
                h, j = _measurement_model(x[:2], sites[m.site_id], params.ue_height)
                sl = slice(3 * k, 3 * k + 3)
                z[sl] = (m.range_m, m.aoa_az, m.aoa_el)
                pred[sl] = h
                jac[sl, :2] = j
                r_diag[sl] = (sig_r**2, sig_ang**2, sig_ang**2)
            innov = z - pred
            innov[1::3] = _wrap(innov[1::3])
            innov[2::3] = _wrap(innov[2::3])
            s = jac @ p @ jac.T + np.diag(r_diag)
            try:
                gain = p @ jac.T @ np.linalg.inv(s)
            except np.linalg.LinAlgError as exc:
                raise NumericalError("innovation covariance is singular", epoch=epoch) from exc
            x = x + gain @ innov
            ikh = np.eye(4) - gain @ jac
            p = ikh @ p @ ikh.T + gain @ np.diag(r_diag) @ gain.T

        p = 0.5 * (p + p.T) + params.process_jitter * np.eye(4)
        if np.any(np.linalg.eigvalsh(p) <= 0):
            raise NumericalError("covariance lost positive definiteness", epoch=epoch)
        out.append(StateEstimate(t=frame.t, mean=x.copy(), covariance=p.copy()))
    return out


def initial_state_from_frame(
    frame: MeasurementFrame,
    params: EkfParams,
    *,
    speed_along_road: float = 0.0,
    pos_sigma: float = 5.0,
    vel_sigma: float = 2.0,
) -> StateEstimate:
    """Seed the filter from the first frame's single-site geometric solve."""
    xy = _single_site_position(frame.per_site[0], params)
    mean = np.array([xy[0], xy[1], speed_along_road, 0.0])
    cov = np.diag([pos_sigma**2, pos_sigma**2, vel_sigma**2, vel_sigma**2])
    return StateEstimate(t=frame.t, mean=mean, covariance=cov)


# ---------------------------------------------------------------------------
# Radio-only geometric solve


def _single_site_position(m: SiteMeasurement, params: EkfParams) -> np.ndarray:
    site = {s.id: s.position for s in params.deployment.sites}[m.site_id]
    # Vehicle sits at site - range * u, with u the unit vector from the
    # vehicle toward the site (the measured arrival direction, reversed).
    u = np.array(
        [
            math.cos(m.aoa_az) * math.cos(m.aoa_el),
            math.sin(m.aoa_az) * math.cos(m.aoa_el),
            math.sin(m.aoa_el),
        ]
    )
    pos = site - m.range_m * u
    return pos[:2]


def nr_only_position(
    frame: MeasurementFrame,
    params: EkfParams,
    *,
    max_iter: int = 50,
    step_tol: float = 1e-9,
) -> np.ndarray:
    """Per-epoch geometric position from radio measurements alone.

    One site: range/angle intersection. Several: weighted Gauss-Newton over
    the stacked residuals, initialized from the best-SNR site's intersection.
    """
    if not frame.per_site:
        raise ConfigurationError("frame has no site measurements")
    sites = {s.id: s.position for s in params.deployment.sites}
    xy = _single_site_position(frame.per_site[0], params)
    if len(frame.per_site) == 1:
        return xy

    sig_r = max(params.noise.range_sigma(frame.per_site[0].snr_db), params.sigma_floor_m)
    sig_ang = max(params.noise.angle_sigma(frame.per_site[0].snr_db), params.sigma_floor_rad)
    w = np.tile([1.0 / sig_r, 1.0 / sig_ang, 1.0 / sig_ang], len(frame.per_site))

    for _ in range(max_iter):
        res = np.empty(3 * len(frame.per_site))
        jac = np.empty((3 * len(frame.per_site), 2))
        for k, m in enumerate(frame.per_site):
            h, j = _measurement_model(xy, sites[m.site_id], params.ue_height)
            sl = slice(3 * k, 3 * k + 3)
            res[sl] = np.array([m.range_m, m.aoa_az, m.aoa_el]) - h
            jac[sl] = j
        res[1::3] = _wrap(res[1::3])
        res[2::3] = _wrap(res[2::3])
        a = jac * w[:, None]
        b = res * w
        try:
            step, *_ = np.linalg.lstsq(a, b, rcond=None)
        except np.linalg.LinAlgError as exc:
            raise EstimationError("Gauss-Newton normal equations singular") from exc
        if not np.all(np.isfinite(step)) or np.linalg.norm(step) > 1e6:
            raise EstimationError("Gauss-Newton diverged")
        xy = xy + step
        if np.linalg.norm(step) < step_tol:
            return xy
    return xy


# ---------------------------------------------------------------------------
# Error CDFs


@dataclass(frozen=True)
class ErrorCdf:
    errors: np.ndarray  # sorted, m
    probabilities: np.ndarray  # non-decreasing, last = 1

    def __post_init__(self):
        e = np.asarray(self.errors, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if len(e) == 0:
            raise ConfigurationError("empty error CDF")
        if np.any(np.diff(e) < 0) or np.any(np.diff(p) < 0) or abs(p[-1] - 1.0) > 1e-12:
            raise ConfigurationError("CDF fields must be non-decreasing with final probability 1")

    def quantile(self, q: float) -> float:
        idx = int(np.searchsorted(self.probabilities, q))
        idx = min(idx, len(self.errors) - 1)
        return float(self.errors[idx])

    def prob_at(self, e: float) -> float:
        return float(np.searchsorted(self.errors, e, side="right")) / len(self.errors)


def empirical_cdf(errors) -> ErrorCdf:
    e = np.sort(np.asarray(errors, dtype=float))
    if len(e) == 0:
        raise ConfigurationError("no errors to summarize")
    p = np.arange(1, len(e) + 1, dtype=float) / len(e)
    return ErrorCdf(errors=e, probabilities=p)


def error_cdf(estimates: list[StateEstimate], trajectory: Trajectory) -> ErrorCdf:
    """Horizontal-error CDF against the matching trajectory epochs."""
    if not estimates:
        raise ConfigurationError("no estimates")
    t_by_index = {round(float(t), 9): i for i, t in enumerate(trajectory.t)}
    errors = []
    for est in estimates:
        idx = t_by_index.get(round(est.t, 9))
        if idx is None:
            raise ConfigurationError(f"estimate at t={est.t} has no matching trajectory sample")
        truth = trajectory.position[idx][:2]
        errors.append(float(np.linalg.norm(est.mean[:2] - truth)))
    return empirical_cdf(errors)


def positions_error_cdf(positions: list[np.ndarray | None], times, trajectory: Trajectory):
    """CDF for raw position fixes; ``None`` entries (failed solves) are counted
    separately and excluded."""
    t_by_index = {round(float(t), 9): i for i, t in enumerate(trajectory.t)}
    errors = []
    n_failed = 0
    for pos, t in zip(positions, times):
        if pos is None:
            n_failed += 1
            continue
        truth = trajectory.position[t_by_index[round(float(t), 9)]][:2]
        errors.append(float(np.linalg.norm(np.asarray(pos) - truth)))
    return empirical_cdf(errors), n_failed
