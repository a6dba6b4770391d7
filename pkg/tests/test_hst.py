"""Rail downlink link abstraction: TBS, effective SNR, BLER, HARQ, schemes."""

import math

import numpy as np
import pytest

from nrtransport import (
    Mcs,
    Numerology,
    Scheme,
    bler,
    build_rail_deployment,
    effective_snr,
    linear_trajectory,
    run_hst_sweep,
    throughput_vs_position,
    transport_block_size,
)
from nrtransport.errors import ConfigurationError
from nrtransport.hst import BlerParams, HstLinkParams, SlotResult


def test_transport_block_size_default_mcs():
    tbs = transport_block_size(Numerology(), Mcs(), overhead_symbols=1)
    assert tbs == math.floor(50 * 12 * 13 * 6 * 0.428)
    assert tbs == 20030
    peak = tbs / Numerology().slot_duration
    assert abs(peak - 40.06e6) < 0.01e6


def test_transport_block_size_simple_cases():
    assert transport_block_size(
        Numerology(n_rb=1), Mcs(modulation_order_bits=2, code_rate=1 - 1e-12), 0
    ) == 336
    with pytest.raises(ConfigurationError):
        transport_block_size(Numerology(), Mcs(), overhead_symbols=14)


def test_effective_snr_flat_is_exact():
    for beta in (1.0, 5.0):
        snr = effective_snr(np.full(600, 10 ** (7.0 / 10.0)), beta)
        assert abs(snr - 7.0) < 1e-12


def test_effective_snr_penalizes_nulls():
    # Half the REs at x = 10 dB, half in a deep null: the exponential mapping
    # with beta = 1 lands more than 3 dB below x.
    x_lin = 10.0
    sinr = np.concatenate([np.full(300, x_lin), np.full(300, 1e-12)])
    eff = effective_snr(sinr, beta=1.0)
    assert eff < 10.0 * math.log10(x_lin) - 3.0


def test_bler_limits_and_threshold():
    mcs = Mcs()
    params = BlerParams()
    th = params.threshold_for(mcs)
    expected = 10 * math.log10(2 ** (6 * 0.428) - 1) + 2.0
    assert abs(th - expected) < 1e-12
    assert abs(th - 8.93) < 0.01
    assert abs(bler(th, mcs) - 0.5) < 1e-12
    assert bler(th + 50.0, mcs) < 1e-6
    assert bler(th - 50.0, mcs) > 1 - 1e-6


def _sweep(scheme, span=300.0, **overrides):
    deployment = build_rail_deployment(700.0, 10.0)
    numerology = Numerology()
    trajectory = linear_trajectory(500.0, span, numerology.slot_duration)
    params = HstLinkParams(**overrides)
    return run_hst_sweep(deployment, trajectory, scheme, numerology, Mcs(), 1, params), numerology


def test_all_success_gives_flat_peak_curve():
    # Force zero BLER with a huge negative threshold.
    results, numerology = _sweep(
        Scheme.DPS, bler=BlerParams(threshold_db=-500.0)
    )
    assert all(r.delivered_bits == 20030 and r.harq_attempts_used == 1 for r in results)
    centers, tput = throughput_vs_position(results, 20.0, numerology.slot_duration)
    assert np.max(np.abs(tput - 20030 / numerology.slot_duration)) < 1e-6


def test_alternating_success_failure_halves_throughput():
    numerology = Numerology()
    results = []
    for i in range(100):
        results.append(
            SlotResult(
                slot_index=i, scheme=Scheme.SFN, train_x=1.0,
                delivered_bits=20030 if i % 2 == 0 else 0,
                harq_attempts_used=1, effective_snr_db=10.0,
            )
        )
    _, tput = throughput_vs_position(results, 20.0, numerology.slot_duration)
    assert abs(tput[0] - 0.5 * 20030 / numerology.slot_duration) < 1e-6


def test_all_failures_deliver_nothing():
    results, _ = _sweep(Scheme.SFN, bler=BlerParams(threshold_db=500.0))
    assert all(r.delivered_bits == 0 for r in results)
    assert all(r.harq_attempts_used <= 4 for r in results)


def test_throughput_non_increasing_in_bler_threshold():
    tputs = []
    for th in (5.0, 9.0, 13.0):
        results, numerology = _sweep(Scheme.SFN, bler=BlerParams(threshold_db=th))
        bits = sum(r.delivered_bits for r in results)
        slots = sum(r.harq_attempts_used for r in results)
        tputs.append(bits / (slots * numerology.slot_duration))
    assert tputs[0] >= tputs[1] >= tputs[2]


def test_harq_occupies_extra_slots():
    results, _ = _sweep(Scheme.SFN, span=2100.0, max_harq_retx=3)
    used = [r.harq_attempts_used for r in results]
    assert max(used) > 1  # retransmissions do occur along the sweep
    assert max(used) <= 4
    # Slot accounting: transport blocks tile the sweep without overlap.
    total = sum(used)
    starts = [r.slot_index for r in results]
    assert starts == sorted(starts)
    assert total >= starts[-1]


def test_dps_effective_snr_below_sfn_combined_power():
    # DPS transmits from one TRP, so its received power cannot exceed the
    # coherent SFN sum at positions where the two links are equal.
    dps, _ = _sweep(Scheme.DPS, span=2100.0)
    sfn, _ = _sweep(Scheme.SFN, span=2100.0)
    mid_dps = [r for r in dps if abs(r.train_x - 1050.0) < 20.0]
    mid_sfn = [r for r in sfn if abs(r.train_x - 1050.0) < 20.0]
    # Compare the best DPS slot against the best possible SFN power bound:
    # 3 dB combining gain at the equal-power midpoint.
    assert max(r.effective_snr_db for r in mid_dps) <= max(
        r.effective_snr_db for r in mid_sfn
    ) + 6.0


def test_scheme_validation_and_sample_period_check():
    deployment = build_rail_deployment(700.0, 10.0)
    numerology = Numerology()
    trajectory = linear_trajectory(500.0, 300.0, numerology.slot_duration)
    with pytest.raises(ConfigurationError):
        run_hst_sweep(deployment, trajectory, "NOT_A_SCHEME", numerology, Mcs(), 1)
    bad = linear_trajectory(500.0, 300.0, 1e-3)
    with pytest.raises(ConfigurationError):
        run_hst_sweep(deployment, bad, Scheme.SFN, numerology, Mcs(), 1)


def test_near_trp_anchor_reaches_peak():
    # At the anchor position (x = 0, 16 dB SFN-combined SNR) every scheme
    # delivers at or near the peak rate.
    for scheme in Scheme:
        results, numerology = _sweep(scheme, span=700.0)
        near = [r for r in results if r.train_x < 5.0]
        bits = sum(r.delivered_bits for r in near)
        slots = sum(r.harq_attempts_used for r in near)
        tput = bits / (slots * numerology.slot_duration)
        assert tput > 0.95 * 20030 / numerology.slot_duration, scheme
