"""Propagation models: LoS mmWave geometry with DFT beam grids, Doppler-shifted
tapped-delay-line channels for the rail link, and macro path gain with
lognormal shadowing for the highway scheduler.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, GeometryError
from .scenario import ArrayGeometry, Site

SPEED_OF_LIGHT = 299_792_458.0


# ---------------------------------------------------------------------------
# Line-of-sight geometry


@dataclass(frozen=True)
class LosObservation:
    true_range: float  # m
    true_aod: tuple[float, float]  # (az, el) at the site toward the vehicle, rad
    true_aoa: tuple[float, float]  # (az, el) at the vehicle toward the site, rad
    doppler: float  # Hz, positive when closing


def _angles(direction: np.ndarray) -> tuple[float, float]:
    az = math.atan2(direction[1], direction[0])
    el = math.atan2(direction[2], math.hypot(direction[0], direction[1]))
    return az, el


def los_observation(site: Site, pose, carrier_hz: float) -> LosObservation:
    """Range, departure/arrival angles, and Doppler for a direct path.

    Doppler is (v . u) f_c / c with u the unit vector from the vehicle toward
    the site, i.e. positive while the vehicle closes on the site.
    """
    delta = np.asarray(pose.position, dtype=float) - site.position
    rng = float(np.linalg.norm(delta))
    if rng == 0.0:
        raise GeometryError("vehicle coincides with site")
    u_site_to_ue = delta / rng
    aod = _angles(u_site_to_ue)
    aoa = _angles(-u_site_to_ue)
    v = np.asarray(pose.velocity, dtype=float)
    doppler = float(v @ (-u_site_to_ue)) * carrier_hz / SPEED_OF_LIGHT
    return LosObservation(true_range=rng, true_aod=aod, true_aoa=aoa, doppler=doppler)


# ---------------------------------------------------------------------------
# Transmit beam grid


@dataclass(frozen=True)
class BeamGrid:
    """DFT beams over a uniform rectangular array.

    ``weights`` has shape (n_az * n_el, rows * cols); beams are indexed
    row-major in (azimuth, elevation) spatial frequency. Each weight vector is
    unit-norm, so the boresight array gain of an N-element array is N in power.
    """

    array: ArrayGeometry
    n_az: int
    n_el: int
    weights: np.ndarray

    @property
    def azimuth_step_sine(self) -> float:
        """Grid spacing in sine-of-azimuth space."""
        return 1.0 / (self.n_az * self.array.element_spacing)


def steering_vector(array: ArrayGeometry, az: float, el: float) -> np.ndarray:
    """Unit-power steering vector; columns span azimuth (y), rows elevation (z)."""
    u = math.sin(az) * math.cos(el)
    v = math.sin(el)
    n = np.arange(array.cols)
    m = np.arange(array.rows)
    phase = 2.0 * math.pi * array.element_spacing * (np.add.outer(m * v, n * u))
    return np.exp(1j * phase).ravel()


def make_beam_grid(array: ArrayGeometry, n_az: int, n_el: int) -> BeamGrid:
    """Orthogonal DFT beam grid covering the visible sector."""
    if n_az < 1 or n_el < 1:
        raise ConfigurationError("beam grid needs at least one beam per axis")
    # Spatial frequencies centered on boresight; u = f/d is the steered sine.
    f_az = (np.arange(n_az) - n_az // 2) / n_az
    f_el = (np.arange(n_el) - n_el // 2) / n_el
    f_az = np.sort(f_az)
    f_el = np.sort(f_el)
    n = np.arange(array.cols)
    m = np.arange(array.rows)
    weights = np.empty((n_az * n_el, array.n_elements), dtype=complex)
    idx = 0
    norm = 1.0 / math.sqrt(array.n_elements)
    for fa in f_az:
        for fe in f_el:
            phase = 2.0 * math.pi * (np.add.outer(m * fe, n * fa))
            weights[idx] = norm * np.exp(1j * phase).ravel()
            idx += 1
    return BeamGrid(array=array, n_az=n_az, n_el=n_el, weights=weights)


def beam_gains(grid: BeamGrid, az: float, el: float) -> np.ndarray:
    """Array power gain of every beam toward (az, el)."""
    a = steering_vector(grid.array, az, el)
    return np.abs(grid.weights.conj() @ a) ** 2


def best_beam_gain(grid: BeamGrid, az: float, el: float) -> float:
    return float(np.max(beam_gains(grid, az, el)))


# ---------------------------------------------------------------------------
# Tapped-delay-line channel


@dataclass(frozen=True)
class ChannelTaps:
    """One tapped-delay-line realization for a single link."""

    delays: np.ndarray  # s, sorted ascending
    dopplers: np.ndarray  # Hz
    gains: np.ndarray  # complex
    aod: np.ndarray  # rad (azimuth offsets)
    aoa: np.ndarray  # rad
    reference_time: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=float)
        if np.any(d < 0) or np.any(np.diff(d) < 0):
            raise ConfigurationError("tap delays must be non-negative and sorted")

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.gains) ** 2))


@dataclass(frozen=True)
class TapProfile:
    """Relative tap table: delays in ns, powers in dB, angle offsets in degrees.

    Angle offsets are relative to the LoS direction; exactly one row should be
    flagged as the LoS tap. Loadable from a plain-text table with columns
    ``delay_ns power_db aod_deg aoa_deg los_flag``.
    """

    delay_ns: np.ndarray
    power_db: np.ndarray
    aod_deg: np.ndarray
    aoa_deg: np.ndarray
    los_flag: np.ndarray

    def __post_init__(self):
        if len(self.delay_ns) == 0:
            raise ConfigurationError("tap profile is empty")
        if int(np.sum(self.los_flag)) != 1:
            raise ConfigurationError("tap profile must flag exactly one LoS tap")

    def __len__(self) -> int:
        return len(self.delay_ns)

    @property
    def k_factor_db(self) -> float:
        p = 10.0 ** (np.asarray(self.power_db) / 10.0)
        los = self.los_flag.astype(bool)
        return 10.0 * math.log10(np.sum(p[los]) / np.sum(p[~los]))

    @property
    def rms_delay_spread_ns(self) -> float:
        p = 10.0 ** (np.asarray(self.power_db) / 10.0)
        p = p / np.sum(p)
        mean = float(p @ self.delay_ns)
        return math.sqrt(float(p @ (self.delay_ns - mean) ** 2))

    @classmethod
    def from_text(cls, text: str) -> "TapProfile":
        rows = []
        for lineno, raw in enumerate(io.StringIO(text), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if parts[0] == "delay_ns":  # optional header
                continue
            if len(parts) != 5:
                raise ConfigurationError(f"tap table line {lineno}: expected 5 columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ConfigurationError(f"tap table line {lineno}: {exc}") from exc
        if not rows:
            raise ConfigurationError("tap table has no rows")
        arr = np.array(rows)
        return cls(
            delay_ns=arr[:, 0],
            power_db=arr[:, 1],
            aod_deg=arr[:, 2],
            aoa_deg=arr[:, 3],
            los_flag=arr[:, 4].astype(int),
        )

    @classmethod
    def from_file(cls, path) -> "TapProfile":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def default_rail_profile() -> TapProfile:
    """LoS tap plus three late reflections (K factor ~13 dB)."""
    return TapProfile(
        delay_ns=np.array([0.0, 30.0, 70.0, 150.0]),
        power_db=np.array([0.0, -15.8, -18.0, -21.0]),
        aod_deg=np.array([0.0, 110.0, 75.0, 150.0]),
        aoa_deg=np.array([0.0, 110.0, 75.0, 150.0]),
        los_flag=np.array([1, 0, 0, 0]),
    )


def los_only_profile() -> TapProfile:
    return TapProfile(
        delay_ns=np.array([0.0]),
        power_db=np.array([0.0]),
        aod_deg=np.array([0.0]),
        aoa_deg=np.array([0.0]),
        los_flag=np.array([1]),
    )


def hst_taps(
    site: Site,
    pose,
    profile: TapProfile,
    t: float,
    *,
    carrier_hz: float,
    link_power: float = 1.0,
    rng: np.random.Generator | None = None,
    nlos_phases: np.ndarray | None = None,
) -> ChannelTaps:
    """Tapped-delay-line realization for one site/train link.

    Tap magnitudes follow the profile exactly (so the realized power always
    sums to ``link_power``); only non-LoS phases are random. Per-tap Doppler
    comes from the tap's arrival direction relative to the train velocity.
    """
    if len(profile) == 0:
        raise ConfigurationError("tap profile is empty")
    obs = los_observation(site, pose, carrier_hz)
    los_az, _los_el = obs.true_aoa
    v = np.asarray(pose.velocity, dtype=float)

    p_lin = 10.0 ** (np.asarray(profile.power_db) / 10.0)
    amps = np.sqrt(p_lin / np.sum(p_lin) * link_power)

    tau_los = obs.true_range / SPEED_OF_LIGHT
    delays = tau_los + np.asarray(profile.delay_ns) * 1e-9

    # Arrival direction of each tap = LoS azimuth rotated by the tap offset
    # (horizontal propagation for late reflections).
    aoa = los_az + np.radians(np.asarray(profile.aoa_deg))
    aod = np.array([obs.true_aod[0]] * len(profile)) + np.radians(np.asarray(profile.aod_deg))
    arrival_dir = np.column_stack([np.cos(aoa), np.sin(aoa), np.zeros(len(profile))])
    # Positive Doppler when moving toward the incoming wavefront.
    dopplers = (arrival_dir @ v) * carrier_hz / SPEED_OF_LIGHT
    los_idx = int(np.argmax(profile.los_flag))
    dopplers[los_idx] = obs.doppler

    phases = np.empty(len(profile))
    phases[:] = 0.0
    nlos = ~profile.los_flag.astype(bool)
    n_nlos = int(np.sum(nlos))
    if n_nlos:
        if nlos_phases is not None:
            phases[nlos] = np.asarray(nlos_phases, dtype=float)[:n_nlos]
        elif rng is not None:
            phases[nlos] = rng.uniform(0.0, 2.0 * math.pi, n_nlos)
        else:
            raise ConfigurationError("non-LoS taps need rng or nlos_phases")
    phases[los_idx] = -2.0 * math.pi * carrier_hz * tau_los % (2.0 * math.pi)
    gains = amps * np.exp(1j * phases)

    order = np.argsort(delays, kind="stable")
    return ChannelTaps(
        delays=delays[order],
        dopplers=dopplers[order],
        gains=gains[order],
        aod=aod[order],
        aoa=aoa[order],
        reference_time=t,
    )


# ---------------------------------------------------------------------------
# Combined OFDM frequency response


@dataclass(frozen=True)
class FreqResponse:
    h: np.ndarray  # complex, (n_symbols, n_subcarriers)
    symbol_times: np.ndarray  # s
    subcarrier_freqs: np.ndarray  # Hz (baseband)

    def __post_init__(self):
        if not np.all(np.isfinite(self.h.real)) or not np.all(np.isfinite(self.h.imag)):
            raise ConfigurationError("frequency response has non-finite entries")


def combined_freq_response(
    taps_per_trp: list[ChannelTaps],
    cdd_delays: list[float],
    precomp_shifts: list[float],
    symbol_times: np.ndarray,
    subcarrier_freqs: np.ndarray,
) -> FreqResponse:
    """Superpose per-TRP tapped-delay-line channels on an OFDM grid.

    H(t, f) = sum_trp sum_tap g exp(j 2 pi (doppler - precomp) t)
                              exp(-j 2 pi f (delay + cdd)).
    """
    if not (len(taps_per_trp) == len(cdd_delays) == len(precomp_shifts)):
        raise ConfigurationError("per-TRP lists must have matching lengths")
    if len(taps_per_trp) < 1:
        raise ConfigurationError("need at least one TRP")
    t = np.asarray(symbol_times, dtype=float)
    f = np.asarray(subcarrier_freqs, dtype=float)
    h = np.zeros((len(t), len(f)), dtype=complex)
    for taps, cdd, pre in zip(taps_per_trp, cdd_delays, precomp_shifts):
        time_phase = np.exp(2j * math.pi * np.outer(t, taps.dopplers - pre))  # (T, taps)
        freq_phase = np.exp(-2j * math.pi * np.outer(taps.delays + cdd, f))  # (taps, F)
        h += (time_phase * taps.gains) @ freq_phase
    return FreqResponse(h=h, symbol_times=t, subcarrier_freqs=f)


# ---------------------------------------------------------------------------
# Macro path gain


@dataclass(frozen=True)
class MacroParams:
    """Log-distance path loss (128.1 + 37.6 log10 d_km style) with shadowing."""

    intercept_db: float = 128.1
    exponent: float = 3.76  # path loss slope is 10*exponent dB per decade
    shadow_sigma_db: float = 8.0

    def pathloss_db(self, distance_m) -> np.ndarray:
        d_km = np.asarray(distance_m, dtype=float) / 1000.0
        return self.intercept_db + 10.0 * self.exponent * np.log10(d_km)


def macro_pathgain(
    site: Site,
    position,
    params: MacroParams,
    rng: np.random.Generator | None = None,
    shadow_db: float | None = None,
) -> float:
    """Path gain in dB (negative), optionally with lognormal shadowing.

    Pass ``shadow_db`` to reuse a per-user shadowing draw, or ``rng`` to draw
    a fresh one; omit both for the deterministic curve.
    """
    pos = np.asarray(position, dtype=float)
    d2d = float(np.hypot(pos[0] - site.position[0], pos[1] - site.position[1]))
    if d2d <= 0.0:
        raise GeometryError("2D distance to site is zero")
    gain = -float(params.pathloss_db(d2d))
    if shadow_db is not None:
        gain += float(shadow_db)
    elif rng is not None and params.shadow_sigma_db > 0:
        gain += float(rng.normal(0.0, params.shadow_sigma_db))
    return gain


# ---------------------------------------------------------------------------
# Sector antenna pattern (used by the rail link gain model)


@dataclass(frozen=True)
class SectorPattern:
    """Parabolic 3GPP-style element pattern with a side/back-lobe floor.

    With ``bidirectional`` the site carries fore/aft panel pairs along the
    boresight axis, as is common for track-side deployments: the azimuth
    offset is folded into [0, 90 deg].
    """

    peak_gain_dbi: float = 20.5
    az_3db_deg: float = 65.0
    el_3db_deg: float = 15.0
    backoff_db: float = 25.0
    bidirectional: bool = True

    def gain_db(self, az_off_rad, el_off_rad) -> np.ndarray:
        az = np.abs(np.asarray(az_off_rad, dtype=float))
        if self.bidirectional:
            az = np.minimum(az, math.pi - az)
        el = np.asarray(el_off_rad, dtype=float)
        a_az = np.minimum(12.0 * (np.degrees(az) / self.az_3db_deg) ** 2, self.backoff_db)
        a_el = np.minimum(12.0 * (np.degrees(el) / self.el_3db_deg) ** 2, self.backoff_db)
        return self.peak_gain_dbi - np.minimum(a_az + a_el, self.backoff_db)
