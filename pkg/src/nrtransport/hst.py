"""Multi-TRP downlink throughput versus train position.

Schemes: single-frequency network (SFN), SFN with per-TRP cyclic delay
diversity, SFN with genie Doppler precompensation, and dynamic point switching
(genie TRP selection). The physical layer is abstracted: per-resource-element
SINR -> exponential effective-SNR mapping per code block -> logistic block
error curve, with Chase-combining HARQ modeled as linear SNR accumulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channel import (
    SPEED_OF_LIGHT,
    SectorPattern,
    TapProfile,
    default_rail_profile,
    los_observation,
)
from .errors import ConfigurationError
from .rng import substream
from .scenario import Deployment, Trajectory


@dataclass(frozen=True)
class Numerology:
    scs_hz: float = 30e3
    n_rb: int = 50
    symbols_per_slot: int = 14

    def __post_init__(self):
        if self.scs_hz <= 0 or self.n_rb < 1 or self.symbols_per_slot < 1:
            raise ConfigurationError("invalid numerology")

    @property
    def slot_duration(self) -> float:
        # 0.5 ms at 30 kHz SCS, scaling inversely with subcarrier spacing.
        return 1e-3 * 15e3 / self.scs_hz

    @property
    def n_subcarriers(self) -> int:
        return self.n_rb * 12

    @property
    def symbol_duration(self) -> float:
        return self.slot_duration / self.symbols_per_slot

    def symbol_times(self, slot_start: float = 0.0) -> np.ndarray:
        return slot_start + (np.arange(self.symbols_per_slot) + 0.5) * self.symbol_duration

    def subcarrier_freqs(self, step: int = 1) -> np.ndarray:
        return np.arange(0, self.n_subcarriers, step) * self.scs_hz


@dataclass(frozen=True)
class Mcs:
    modulation_order_bits: int = 6
    code_rate: float = 0.428

    def __post_init__(self):
        if not 0.0 < self.code_rate < 1.0:
            raise ConfigurationError("code rate must lie in (0, 1)")

    @property
    def spectral_efficiency(self) -> float:
        return self.modulation_order_bits * self.code_rate


class Scheme(str, Enum):
    SFN = "SFN"
    SFN_CDD = "SFN_CDD"
    SFN_PRECOMP = "SFN_PRECOMP"
    DPS = "DPS"


@dataclass(frozen=True)
class SlotResult:
    """One transport block: starts at ``slot_index``, occupies
    ``harq_attempts_used`` consecutive slots."""

    slot_index: int
    scheme: Scheme
    train_x: float
    delivered_bits: int
    harq_attempts_used: int
    effective_snr_db: float


def transport_block_size(numerology: Numerology, mcs: Mcs, overhead_symbols: int) -> int:
    """Bits per slot: data REs times modulation order times code rate."""
    if overhead_symbols >= numerology.symbols_per_slot:
        raise ConfigurationError("overhead cannot consume the whole slot")
    data_symbols = numerology.symbols_per_slot - overhead_symbols
    bits = numerology.n_subcarriers * data_symbols * mcs.modulation_order_bits * mcs.code_rate
    # Guard the floor against float representation of exact products.
    return int(math.floor(bits + 1e-9))


def effective_snr(sinr_linear, beta: float = 1.0) -> float:
    """Exponential effective-SNR mapping over resource elements, in dB."""
    g = np.asarray(sinr_linear, dtype=float).ravel()
    if g.size == 0:
        raise ConfigurationError("empty SINR set")
    eff = -beta * math.log(float(np.mean(np.exp(-g / beta))))
    return 10.0 * math.log10(max(eff, 1e-300))


@dataclass(frozen=True)
class BlerParams:
    margin_db: float = 2.0
    slope_db: float = 0.5
    threshold_db: float | None = None  # derived from the MCS when None

    def threshold_for(self, mcs: Mcs) -> float:
        if self.threshold_db is not None:
            return self.threshold_db
        # Shannon threshold of the MCS spectral efficiency plus margin.
        return 10.0 * math.log10(2.0 ** mcs.spectral_efficiency - 1.0) + self.margin_db


def bler(snr_eff_db: float, mcs: Mcs, params: BlerParams | None = None) -> float:
    """Logistic block error probability."""
    params = params or BlerParams()
    th = params.threshold_for(mcs)
    z = (snr_eff_db - th) / params.slope_db
    if z > 0:
        return math.exp(-z) / (1.0 + math.exp(-z))
    return 1.0 / (1.0 + math.exp(z))


@dataclass(frozen=True)
class HstLinkParams:
    carrier_hz: float = 2e9
    anchor_snr_db: float = 16.0  # SFN-combined SNR at train position x = 0
    esm_beta: float = 5.0
    bler: BlerParams = field(default_factory=BlerParams)
    max_harq_retx: int = 3
    cdd_delay_s: float = 1e-6  # applied to every second TRP
    pathloss_exponent: float = 2.5
    overhead_symbols: int = 1
    codeblock_bits: int = 8448  # max code block size; sets TB segmentation
    subcarrier_step: int = 12  # SINR sampled once per RB in the sweep
    estimation_penalty: bool = True  # see slot SINR model below
    pattern: SectorPattern = field(default_factory=SectorPattern)
    profile: TapProfile = field(default_factory=default_rail_profile)


def _link_gains_lin(deployment: Deployment, positions: np.ndarray, params: HstLinkParams) -> np.ndarray:
    """Per-slot, per-TRP link power gain (free space x antenna pattern), linear.

    Absolute scale is arbitrary; the SNR anchor fixes the noise power.
    """
    out = np.empty((len(positions), len(deployment.sites)))
    for k, site in enumerate(deployment.sites):
        delta = positions - site.position
        dist = np.linalg.norm(delta, axis=1)
        az = np.arctan2(delta[:, 1], delta[:, 0]) - site.boresight_azimuth
        d2d = np.hypot(delta[:, 0], delta[:, 1])
        depression = np.arctan2(site.position[2] - positions[:, 2], d2d)
        el_off = depression - site.downtilt
        g_db = params.pattern.gain_db(az, el_off)
        ref = SPEED_OF_LIGHT / (4.0 * math.pi * params.carrier_hz)
        out[:, k] = ref**2 * dist ** (-params.pathloss_exponent) * 10.0 ** (g_db / 10.0)
    return out


@dataclass
class _SlotChannel:
    """Per-slot tap parameters for every TRP, vectorized over the sweep."""

    delays: np.ndarray  # (slots, trp, taps)
    dopplers: np.ndarray
    amps: np.ndarray
    phases: np.ndarray
    gains_lin: np.ndarray  # (slots, trp)
    los_dopplers: np.ndarray  # (slots, trp)


def _build_slot_channels(
    deployment: Deployment,
    trajectory: Trajectory,
    params: HstLinkParams,
    seed: int,
    scheme: Scheme,
) -> _SlotChannel:
    n_slots = len(trajectory)
    n_trp = len(deployment.sites)
    profile = params.profile
    n_taps = len(profile)
    p_lin = 10.0 ** (profile.power_db / 10.0)
    p_lin = p_lin / np.sum(p_lin)
    los_idx = int(np.argmax(profile.los_flag))
    nlos = ~profile.los_flag.astype(bool)

    gains_lin = _link_gains_lin(deployment, trajectory.position, params)

    delays = np.empty((n_slots, n_trp, n_taps))
    dopplers = np.empty((n_slots, n_trp, n_taps))
    amps = np.empty((n_slots, n_trp, n_taps))
    phases = np.zeros((n_slots, n_trp, n_taps))
    v = trajectory.velocity  # (slots, 3)
    for k, site in enumerate(deployment.sites):
        delta = trajectory.position - site.position
        dist = np.linalg.norm(delta, axis=1)
        tau_los = dist / SPEED_OF_LIGHT
        u_to_site = -delta / dist[:, None]
        los_dop = np.einsum("ij,ij->i", v, u_to_site) * params.carrier_hz / SPEED_OF_LIGHT
        los_az = np.arctan2(u_to_site[:, 1], u_to_site[:, 0])
        aoa = los_az[:, None] + np.radians(profile.aoa_deg)[None, :]
        arrival = np.stack([np.cos(aoa), np.sin(aoa)], axis=-1)
        dop = np.einsum("stj,sj->st", arrival, v[:, :2]) * params.carrier_hz / SPEED_OF_LIGHT
        dop[:, los_idx] = los_dop
        delays[:, k, :] = tau_los[:, None] + profile.delay_ns[None, :] * 1e-9
        dopplers[:, k, :] = dop
        amps[:, k, :] = np.sqrt(p_lin[None, :] * gains_lin[:, k][:, None])
        phases[:, k, los_idx] = -2.0 * math.pi * params.carrier_hz * tau_los % (2.0 * math.pi)
        if np.any(nlos):
            rng = substream(seed, "hst", scheme.value, "phase", k)
            phases[:, k, nlos] = rng.uniform(0.0, 2.0 * math.pi, (n_slots, int(np.sum(nlos))))

    los_dopplers = dopplers[:, :, los_idx]
    return _SlotChannel(
        delays=delays, dopplers=dopplers, amps=amps, phases=phases,
        gains_lin=gains_lin, los_dopplers=los_dopplers,
    )


def _codeblock_slices(n_data_symbols: int, n_codeblocks: int) -> list[slice]:
    bounds = np.linspace(0, n_data_symbols, n_codeblocks + 1).round().astype(int)
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def run_hst_sweep(
    deployment: Deployment,
    trajectory: Trajectory,
    scheme: Scheme | str,
    numerology: Numerology,
    mcs: Mcs,
    seed: int,
    params: HstLinkParams | None = None,
) -> list[SlotResult]:
    """Simulate every slot along the trajectory for one transmission scheme.

    The trajectory sample period must equal the slot duration. Each transport
    block occupies one slot per HARQ attempt (up to 1 + max_harq_retx slots).
    """
    try:
        scheme = Scheme(scheme)
    except ValueError as exc:
        raise ConfigurationError(f"unknown scheme: {scheme}") from exc
    params = params or HstLinkParams()
    if abs(trajectory.sample_period - numerology.slot_duration) > 1e-12:
        raise ConfigurationError("trajectory sample period must equal the slot duration")

    ch = _build_slot_channels(deployment, trajectory, params, seed, scheme)
    n_slots, n_trp, _ = ch.delays.shape

    # Noise power from the SNR anchor: SFN-combined power at x = 0.
    noise = float(np.sum(ch.gains_lin[0])) / 10.0 ** (params.anchor_snr_db / 10.0)

    tbs = transport_block_size(numerology, mcs, params.overhead_symbols)
    n_data_symbols = numerology.symbols_per_slot - params.overhead_symbols
    n_cb = max(1, math.ceil(tbs / params.codeblock_bits))
    cb_slices = _codeblock_slices(n_data_symbols, n_cb)

    sym_t_rel = (np.arange(n_data_symbols) + 0.5) * numerology.symbol_duration
    freqs = numerology.subcarrier_freqs(params.subcarrier_step)

    cdd = np.zeros(n_trp)
    if scheme is Scheme.SFN_CDD:
        cdd[1::2] = params.cdd_delay_s

    draw = substream(seed, "hst", scheme.value, "bler").uniform(size=(n_slots, n_cb))

    # Channel estimation model. CDD is transmitted with TRP-specific reference
    # signals, so the receiver tracks each TRP (genie estimate, no penalty).
    # The other schemes share one reference signal: the receiver corrects a
    # common frequency offset and tracks the composite channel linearly in
    # time across the slot; whatever varies faster (two opposite Doppler
    # shifts beating against each other) becomes residual estimation error
    # that adds to the noise. This is what separates plain SFN from the
    # Doppler-managed schemes.
    shared_rs = params.estimation_penalty and scheme is not Scheme.SFN_CDD
    tt = sym_t_rel - np.mean(sym_t_rel)
    basis = np.column_stack([np.ones(n_data_symbols), tt])
    resid_proj = np.eye(n_data_symbols) - basis @ np.linalg.pinv(basis)

    def slot_sinr(s: int) -> np.ndarray:
        """Per-RE SINR (data symbols x sampled subcarriers) for slot s."""
        if scheme is Scheme.DPS:
            trps = [int(np.argmax(ch.gains_lin[s]))]
        else:
            trps = list(range(n_trp))
        t_abs = trajectory.t[s] + sym_t_rel
        h = np.zeros((n_data_symbols, len(freqs)), dtype=complex)
        p_tot = 0.0
        nu_acc = 0.0
        for k in trps:
            pre = ch.los_dopplers[s, k] if scheme is Scheme.SFN_PRECOMP else 0.0
            g = ch.amps[s, k] * np.exp(1j * ch.phases[s, k])
            tp = np.exp(2j * math.pi * np.outer(t_abs, ch.dopplers[s, k] - pre))
            fp = np.exp(-2j * math.pi * np.outer(ch.delays[s, k] + cdd[k], freqs))
            h += (tp * g) @ fp
            w = ch.amps[s, k] ** 2
            p_tot += float(np.sum(w))
            nu_acc += float(np.sum(w * (ch.dopplers[s, k] - pre)))
        if not shared_rs:
            return (np.abs(h) ** 2) / noise
        nu_hat = nu_acc / p_tot  # power-weighted common frequency offset
        detrended = h * np.exp(-2j * math.pi * nu_hat * t_abs)[:, None]
        est_err = np.abs(resid_proj @ detrended) ** 2
        return (np.abs(h) ** 2) / (noise + est_err)

    results: list[SlotResult] = []
    s = 0
    while s < n_slots:
        start = s
        acc = slot_sinr(s)
        first_eff = min(effective_snr(acc[sl], params.esm_beta) for sl in cb_slices)
        attempts = 1
        delivered = 0
        while True:
            ok = True
            for ci, sl in enumerate(cb_slices):
                eff = effective_snr(acc[sl], params.esm_beta)
                p_err = bler(eff, mcs, params.bler)
                if draw[s, ci] < p_err:
                    ok = False
            if ok:
                delivered = tbs
                break
            if attempts > params.max_harq_retx:
                break
            s += 1
            if s >= n_slots:
                break
            attempts += 1
            acc = acc + slot_sinr(s)  # Chase combining: linear SNR accumulation
        results.append(
            SlotResult(
                slot_index=start,
                scheme=scheme,
                train_x=float(trajectory.position[start, 0]),
                delivered_bits=delivered,
                harq_attempts_used=attempts,
                effective_snr_db=first_eff,
            )
        )
        s += 1
    return results


def throughput_vs_position(
    results: list[SlotResult],
    bin_m: float,
    slot_duration: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Delivered bits per second of air time, averaged in position bins.

    Returns (bin_centers_m, throughput_bps); empty bins are dropped.
    """
    if bin_m <= 0:
        raise ConfigurationError("bin size must be positive")
    if not results:
        raise ConfigurationError("no slot results")
    xs = np.array([r.train_x for r in results])
    bits = np.array([r.delivered_bits for r in results], dtype=float)
    slots = np.array([r.harq_attempts_used for r in results], dtype=float)
    idx = np.floor(xs / bin_m).astype(int)
    centers, tput = [], []
    for b in np.unique(idx):
        sel = idx == b
        centers.append((b + 0.5) * bin_m)
        tput.append(np.sum(bits[sel]) / (np.sum(slots[sel]) * slot_duration))
    return np.array(centers), np.array(tput)
