"""End-to-end study execution: configs in, CSVs + SVG plots + manifest out.

Each study builds its scenario from the validated config, runs the simulation,
and renders rows deterministically, so identical (config, seed) always yields
byte-identical outputs. Replications and per-parameter tasks may fan out to a
process pool; every task derives its randomness from counter-based substreams,
so the worker count never changes the numbers.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import hst, positioning, qos, scheduler
from .config import RunConfig
from .errors import ConfigurationError
from .scenario import (
    KMH,
    ScenarioKind,
    build_linear_deployment,
    build_rail_deployment,
    linear_trajectory,
    snake_trajectory,
)
from .svgplot import Series, line_plot

VERSION = "0.1.0"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(header: list[str], rows: list[tuple]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _map_tasks(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# Positioning study


def _positioning_scenario(p: dict):
    deployment = build_linear_deployment(
        p["isd_m"], p["lateral_offset_m"], p["site_height_m"], p["span_m"],
        ScenarioKind.HIGHWAY_POSITIONING,
    )
    trajectory = snake_trajectory(
        p["speed_kmh"], p["span_m"], p["snake_amplitude_m"], p["snake_period_m"], p["dt_s"]
    )
    return deployment, trajectory


def _positioning_one(task):
    """Rows for one SNR point: fused estimates plus the radio-only solve."""
    p, seed, snr = task
    deployment, trajectory = _positioning_scenario(p)
    frames = positioning.simulate_measurements(
        deployment, trajectory, snr, p["nb_fused_bs"], seed,
        carrier_hz=p["carrier_hz"], decimation=p["decimation"],
    )
    params = positioning.EkfParams(deployment=deployment)
    initial = positioning.initial_state_from_frame(
        frames[0], params, speed_along_road=p["speed_kmh"] * KMH
    )
    estimates = positioning.ekf_fuse(frames, initial, params)

    rows = []
    for frame, est in zip(frames, estimates):
        idx = int(round(frame.t / p["dt_s"]))
        tx, ty = trajectory.position[idx][:2]
        ex, ey = est.mean[:2]
        rows.append(
            (frame.t, float(tx), float(ty), float(ex), float(ey),
             float(np.hypot(ex - tx, ey - ty)), "fused", p["nb_fused_bs"], snr)
        )
        try:
            nx, ny = positioning.nr_only_position(frame, params)
        except positioning.EstimationError:
            continue
        rows.append(
            (frame.t, float(tx), float(ty), float(nx), float(ny),
             float(np.hypot(nx - tx, ny - ty)), "nr_only", p["nb_fused_bs"], snr)
        )
    return rows


def run_positioning(config: RunConfig) -> dict[str, str]:
    p = config.params
    chunks = _map_tasks(
        _positioning_one, [(p, config.seed, snr) for snr in p["snr_db"]], config.workers
    )
    rows = [row for chunk in chunks for row in chunk]
    csv = _csv(
        ["t", "truth_x", "truth_y", "est_x", "est_y", "err_m", "method", "nb_fused_bs", "snr_db"],
        rows,
    )
    series = []
    for snr in p["snr_db"]:
        for method in ("fused", "nr_only"):
            errs = sorted(r[5] for r in rows if r[6] == method and r[8] == snr)
            if not errs:
                continue
            probs = np.arange(1, len(errs) + 1) / len(errs)
            series.append(Series(f"{method} SNR {_fmt(snr)} dB", np.asarray(errs), probs))
    svg = line_plot(
        series, title="Horizontal positioning error CDF",
        xlabel="error (m)", ylabel="P(error <= x)",
    )
    return {"positioning.csv": csv, "positioning_cdf.svg": svg}


# ---------------------------------------------------------------------------
# HST study


def _hst_setup(p: dict):
    deployment = build_rail_deployment(p["isd_m"], p["track_offset_m"])
    numerology = hst.Numerology()
    trajectory = linear_trajectory(p["speed_kmh"], p["span_m"], numerology.slot_duration)
    params = hst.HstLinkParams(
        anchor_snr_db=p["anchor_snr_db"],
        esm_beta=p["esm_beta"],
        cdd_delay_s=p["cdd_us"] * 1e-6,
        max_harq_retx=p["max_harq_retx"],
    )
    return deployment, trajectory, numerology, params


def _hst_one(task):
    """Binned throughput curve rows for one transmission scheme."""
    p, seed, scheme = task
    deployment, trajectory, numerology, params = _hst_setup(p)
    results = hst.run_hst_sweep(
        deployment, trajectory, scheme, numerology, hst.Mcs(), seed, params
    )
    xs = np.array([r.train_x for r in results])
    bits = np.array([r.delivered_bits for r in results], dtype=float)
    slots = np.array([r.harq_attempts_used for r in results], dtype=float)
    snrs = np.array([r.effective_snr_db for r in results])
    idx = np.floor(xs / p["bin_m"]).astype(int)
    rows = []
    for b in np.unique(idx):
        sel = idx == b
        tput = np.sum(bits[sel]) / (np.sum(slots[sel]) * numerology.slot_duration)
        rows.append(
            (scheme, float((b + 0.5) * p["bin_m"]), float(tput / 1e6),
             float(np.mean(snrs[sel])), float(np.mean(slots[sel])))
        )
    return rows


def run_hst(config: RunConfig) -> dict[str, str]:
    p = config.params
    schemes = [s.value for s in hst.Scheme] if p["scheme"] == "all" else [p["scheme"]]
    chunks = _map_tasks(_hst_one, [(p, config.seed, s) for s in schemes], config.workers)
    rows = [row for chunk in chunks for row in chunk]
    csv = _csv(["scheme", "train_x_m", "throughput_mbps", "snr_eff_db", "harq_attempts"], rows)
    series = []
    for scheme, chunk in zip(schemes, chunks):
        series.append(
            Series(scheme, np.array([r[1] for r in chunk]), np.array([r[2] for r in chunk]))
        )
    svg = line_plot(
        series, title="Downlink throughput vs train position",
        xlabel="train position (m)", ylabel="throughput (Mbps)",
    )
    return {"hst.csv": csv, "hst_throughput.svg": svg}


# ---------------------------------------------------------------------------
# Scheduler study


def _scheduler_deployment(p: dict):
    return build_linear_deployment(p["isd_m"], 0.0, 35.0, p["isd_m"], ScenarioKind.HIGHWAY_MACRO)


def _scheduler_one(task):
    p, seed, reps, density, rho = task
    deployment = _scheduler_deployment(p)
    traffic = scheduler.TrafficConfig(
        density_mbps_km2=0.0,
        file_size_bits=p["file_size_mb"] * 8e6,
        vehicle_speed_kmh=p["speed_kmh"],
    )
    (point,) = scheduler.density_sweep(
        deployment, [density], [rho], reps, seed,
        duration=p["duration_s"], traffic_template=traffic,
    )
    return (point.density_mbps_km2, point.drop_fraction, point.mean_user_tput_mbps,
            point.coverage_fraction, point.median_file_time_s)


def run_scheduler(config: RunConfig) -> dict[str, str]:
    p = config.params
    tasks = [
        (p, config.seed, config.replications, d, rho)
        for d in p["densities_mbps_km2"]
        for rho in p["drop_fractions"]
    ]
    rows = _map_tasks(_scheduler_one, tasks, config.workers)
    csv = _csv(
        ["density_mbps_km2", "drop_fraction", "mean_user_tput_mbps",
         "coverage_fraction", "median_file_time_s"],
        rows,
    )
    series = []
    for rho in p["drop_fractions"]:
        sel = sorted((r for r in rows if r[1] == rho), key=lambda r: r[0])
        series.append(
            Series(f"drop {int(round(rho * 100))}%",
                   np.array([r[0] for r in sel]), np.array([r[2] for r in sel]))
        )
    svg = line_plot(
        series, title="Mean user throughput vs traffic density",
        xlabel="traffic density (Mbps/km^2)", ylabel="mean user throughput (Mbps)",
    )
    return {"scheduler.csv": csv, "scheduler_tput.svg": svg}


# ---------------------------------------------------------------------------
# QoS study


def default_hst_trace(seed: int, epoch_s: float = 0.05, repeats: int = 20) -> qos.ThroughputTrace:
    """Delivered-bits trace from the rail downlink study, tiled for length.

    The single pass over the track (about 15 s) is repeated so that long
    prediction horizons still have enough evaluable windows.
    """
    if repeats < 1 or epoch_s <= 0:
        raise ConfigurationError("invalid trace parameters")
    deployment = build_rail_deployment(700.0, 10.0)
    numerology = hst.Numerology()
    trajectory = linear_trajectory(500.0, 2100.0, numerology.slot_duration)
    results = hst.run_hst_sweep(
        deployment, trajectory, hst.Scheme.SFN, numerology, hst.Mcs(), seed, hst.HstLinkParams()
    )
    bits_per_slot = np.zeros(len(trajectory))
    for r in results:
        bits_per_slot[r.slot_index + r.harq_attempts_used - 1] += r.delivered_bits
    per_epoch = int(round(epoch_s / numerology.slot_duration))
    if per_epoch < 1 or abs(per_epoch * numerology.slot_duration - epoch_s) > 1e-12:
        raise ConfigurationError("trace epoch must be a multiple of the slot duration")
    n_epochs = len(bits_per_slot) // per_epoch
    epochs = bits_per_slot[: n_epochs * per_epoch].reshape(n_epochs, per_epoch).sum(axis=1)
    return qos.ThroughputTrace(
        epoch_s=epoch_s,
        delivered_bits=np.tile(epochs, repeats),
        metadata={"source": "hst_sfn", "seed": seed, "repeats": repeats},
    )


def _qos_one(task):
    p, seed, horizon = task
    if p["trace_csv"]:
        trace = qos.ThroughputTrace.from_csv(p["trace_csv"])
    else:
        trace = default_hst_trace(seed, p["trace_epoch_s"], p["trace_repeats"])
    kwargs = {}
    if p["method"] == "moving_average":
        kwargs["ma_windows"] = p["ma_windows"]
    elif p["method"] == "ar1":
        kwargs["ar1_lambda"] = p["ar1_lambda"]
    errs = np.sort(qos.horizon_errors(trace, horizon, p["method"], **kwargs))
    probs = np.arange(1, len(errs) + 1) / len(errs)
    return [(horizon, p["method"], float(e), float(cp)) for e, cp in zip(errs, probs)]


def run_qos(config: RunConfig) -> dict[str, str]:
    p = config.params
    chunks = _map_tasks(
        _qos_one, [(p, config.seed, h) for h in p["horizons_s"]], config.workers
    )
    rows = [row for chunk in chunks for row in chunk]
    csv = _csv(["horizon_s", "method", "e_prime_bps", "cdf_p"], rows)
    series = [
        Series(f"horizon {_fmt(h)} s",
               np.array([r[2] for r in chunk]), np.array([r[3] for r in chunk]))
        for h, chunk in zip(p["horizons_s"], chunks)
    ]
    svg = line_plot(
        series, title="Throughput prediction error CDF",
        xlabel="e' (bit/s)", ylabel="P(e' <= x)",
    )
    return {"qos.csv": csv, "qos_cdf.svg": svg}


# ---------------------------------------------------------------------------
# Orchestration


STUDY_RUNNERS = {
    "positioning": run_positioning,
    "hst": run_hst,
    "scheduler": run_scheduler,
    "qos": run_qos,
}


@dataclass(frozen=True)
class RunManifest:
    study: str
    seed: int
    config_sha256: str
    version: str
    outputs: dict  # filename -> {"sha256": ..., "rows": ...}
    wall_time_s: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "study": self.study,
                "seed": self.seed,
                "config_sha256": self.config_sha256,
                "version": self.version,
                "outputs": self.outputs,
                "wall_time_s": self.wall_time_s,
            },
            indent=2,
            sort_keys=True,
        ) + "\n"


def plot_csv(csv_path: str, out_path: str | None = None) -> str:
    """Regenerate the SVG plot for a study CSV (identified by its header)."""
    import csv as csvmod

    with open(csv_path, "r", encoding="utf-8") as fh:
        reader = csvmod.reader(fh)
        header = next(reader, None)
        data = [row for row in reader if row]
    if header is None or not data:
        raise ConfigurationError(f"{csv_path}: empty CSV")

    def col(name, rows, cast=float):
        i = header.index(name)
        return [cast(r[i]) for r in rows]

    series = []
    if header == ["t", "truth_x", "truth_y", "est_x", "est_y", "err_m",
                  "method", "nb_fused_bs", "snr_db"]:
        keys = sorted({(r[6], r[8]) for r in data})
        for method, snr in keys:
            sel = [r for r in data if r[6] == method and r[8] == snr]
            errs = np.sort(np.array(col("err_m", sel)))
            series.append(Series(f"{method} SNR {snr} dB", errs,
                                 np.arange(1, len(errs) + 1) / len(errs)))
        svg = line_plot(series, title="Horizontal positioning error CDF",
                        xlabel="error (m)", ylabel="P(error <= x)")
    elif header == ["scheme", "train_x_m", "throughput_mbps", "snr_eff_db", "harq_attempts"]:
        for scheme in dict.fromkeys(r[0] for r in data):
            sel = [r for r in data if r[0] == scheme]
            series.append(Series(scheme, np.array(col("train_x_m", sel)),
                                 np.array(col("throughput_mbps", sel))))
        svg = line_plot(series, title="Downlink throughput vs train position",
                        xlabel="train position (m)", ylabel="throughput (Mbps)")
    elif header == ["density_mbps_km2", "drop_fraction", "mean_user_tput_mbps",
                    "coverage_fraction", "median_file_time_s"]:
        for rho in dict.fromkeys(r[1] for r in data):
            sel = sorted((r for r in data if r[1] == rho), key=lambda r: float(r[0]))
            series.append(Series(f"drop {int(round(float(rho) * 100))}%",
                                 np.array(col("density_mbps_km2", sel)),
                                 np.array(col("mean_user_tput_mbps", sel))))
        svg = line_plot(series, title="Mean user throughput vs traffic density",
                        xlabel="traffic density (Mbps/km^2)",
                        ylabel="mean user throughput (Mbps)")
    elif header == ["horizon_s", "method", "e_prime_bps", "cdf_p"]:
        for h in dict.fromkeys(r[0] for r in data):
            sel = [r for r in data if r[0] == h]
            series.append(Series(f"horizon {h} s", np.array(col("e_prime_bps", sel)),
                                 np.array(col("cdf_p", sel))))
        svg = line_plot(series, title="Throughput prediction error CDF",
                        xlabel="e' (bit/s)", ylabel="P(e' <= x)")
    else:
        raise ConfigurationError(f"{csv_path}: unrecognized CSV header {header}")

    out = out_path or os.path.splitext(csv_path)[0] + ".svg"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return out


def run(config: RunConfig, output_dir: str | None = None) -> RunManifest:
    """Execute one study and write its CSVs, plots, and manifest."""
    t0 = time.perf_counter()
    outputs = STUDY_RUNNERS[config.study](config)
    outdir = output_dir or config.output_dir
    os.makedirs(outdir, exist_ok=True)
    summary = {}
    for name in sorted(outputs):
        content = outputs[name]
        with open(os.path.join(outdir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        entry = {"sha256": hashlib.sha256(content.encode()).hexdigest()}
        if name.endswith(".csv"):
            entry["rows"] = content.count("\n") - 1
        summary[name] = entry
    manifest = RunManifest(
        study=config.study,
        seed=config.seed,
        config_sha256=config.sha256(),
        version=VERSION,
        outputs=summary,
        wall_time_s=time.perf_counter() - t0,
    )
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())
    return manifest
