"""Config parsing, CLI behavior, and run manifests."""

import json
import os

import numpy as np
import pytest

from nrtransport import ConfigurationError, load_config, parse_config, run
from nrtransport.cli import main as cli_main
from nrtransport.runner import plot_csv


def test_minimal_config_fills_defaults():
    cfg = parse_config("[positioning]\nsnr_db = 5\nnb_fused_bs = 2\n")
    assert cfg.study == "positioning"
    assert cfg.params["snr_db"] == (5.0,)
    assert cfg.params["nb_fused_bs"] == 2
    assert cfg.params["isd_m"] == 200.0
    assert cfg.params["span_m"] == 10000.0
    assert cfg.seed == 1 and cfg.workers == 1


def test_misspelled_key_names_line():
    with pytest.raises(ConfigurationError, match="line 2.*snrr_db"):
        parse_config("[positioning]\nsnrr_db = 5\n")


def test_duplicate_key_rejected_with_line():
    with pytest.raises(ConfigurationError, match="line 3.*duplicate"):
        parse_config("[positioning]\nseed = 1\nseed = 2\n")


def test_type_mismatch_names_key_and_line():
    with pytest.raises(ConfigurationError, match="line 2.*decimation"):
        parse_config("[positioning]\ndecimation = fast\n")


def test_unknown_study_and_missing_section():
    with pytest.raises(ConfigurationError, match="unknown study"):
        parse_config("[warp_drive]\n")
    with pytest.raises(ConfigurationError, match="no \\[study\\] section"):
        parse_config("# just a comment\n")
    with pytest.raises(ConfigurationError, match="before any"):
        parse_config("seed = 1\n")


def test_hst_scheme_choice_accepted_and_validated():
    cfg = parse_config("[hst]\nscheme = SFN_CDD\ncdd_us = 1.0\n")
    assert cfg.params["scheme"] == "SFN_CDD"
    assert cfg.params["cdd_us"] == 1.0
    with pytest.raises(ConfigurationError, match="one of"):
        parse_config("[hst]\nscheme = MAGIC\n")


def test_replications_only_for_scheduler():
    parse_config("[scheduler]\nreplications = 5\n")
    with pytest.raises(ConfigurationError, match="single replication"):
        parse_config("[qos]\nreplications = 5\n")


def test_canonical_text_is_stable_and_hashable():
    a = parse_config("[qos]\nseed = 9\nma_windows = 4\n")
    b = parse_config("[qos]\nma_windows = 4\nseed = 9  # comment\n")
    assert a.canonical_text() == b.canonical_text()
    assert a.sha256() == b.sha256()


def _tiny_positioning_config(outdir, seed=3):
    return (
        "[positioning]\n"
        f"seed = {seed}\n"
        "span_m = 400\n"
        "snr_db = 15\n"
        f"output_dir = {outdir}\n"
    )


def test_run_twice_identical_checksums(tmp_path):
    text = _tiny_positioning_config(tmp_path / "a")
    m1 = run(parse_config(text), str(tmp_path / "a"))
    m2 = run(parse_config(text), str(tmp_path / "b"))
    assert {k: v["sha256"] for k, v in m1.outputs.items()} == {
        k: v["sha256"] for k, v in m2.outputs.items()
    }
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config_sha256"] == parse_config(text).sha256()
    # Row counts in the manifest match the CSV on disk.
    rows = manifest["outputs"]["positioning.csv"]["rows"]
    n_lines = (tmp_path / "a" / "positioning.csv").read_text().count("\n")
    assert rows == n_lines - 1


def test_parallel_workers_do_not_change_outputs(tmp_path):
    base = (
        "[qos]\nseed = 2\ntrace_repeats = 6\nhorizons_s = 0.5, 1\n"
    )
    m1 = run(parse_config(base + "workers = 1\n"), str(tmp_path / "w1"))
    m2 = run(parse_config(base + "workers = 3\n"), str(tmp_path / "w3"))
    assert {k: v["sha256"] for k, v in m1.outputs.items()} == {
        k: v["sha256"] for k, v in m2.outputs.items()
    }


def test_cli_validate_and_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text("[qos]\nseed = 4\n")
    assert cli_main(["validate", str(good)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("[qos]")

    bad = tmp_path / "bad.cfg"
    bad.write_text("[qos]\nhorizon = 1\n")
    assert cli_main(["validate", str(bad)]) == 1
    assert cli_main(["validate", str(tmp_path / "missing.cfg")]) == 3


def test_cli_run_and_plot(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(_tiny_positioning_config(tmp_path / "out"))
    assert cli_main(["run", str(cfg), "--output-dir", str(tmp_path / "out")]) == 0
    csv_path = tmp_path / "out" / "positioning.csv"
    assert csv_path.exists()
    svg = tmp_path / "replot.svg"
    assert cli_main(["plot", str(csv_path), "-o", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")


def test_cli_output_dir_env_override(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[qos]\nseed = 2\ntrace_repeats = 6\nhorizons_s = 0.5\n")
    monkeypatch.setenv("NRTRANSPORT_OUTDIR", str(tmp_path / "env_out"))
    assert cli_main(["run", str(cfg)]) == 0
    assert (tmp_path / "env_out" / "qos.csv").exists()


def test_plot_rejects_unknown_header(tmp_path):
    weird = tmp_path / "weird.csv"
    weird.write_text("alpha,beta\n1,2\n")
    with pytest.raises(ConfigurationError):
        plot_csv(str(weird))


def test_scheduler_config_round_trip(tmp_path):
    cfg = parse_config(
        "[scheduler]\nseed = 7\nreplications = 2\n"
        "densities_mbps_km2 = 10, 1000\ndrop_fractions = 0, 0.5\nduration_s = 20\n"
    )
    m = run(cfg, str(tmp_path / "sched"))
    lines = (tmp_path / "sched" / "scheduler.csv").read_text().strip().splitlines()
    assert lines[0] == "density_mbps_km2,drop_fraction,mean_user_tput_mbps,coverage_fraction,median_file_time_s"
    assert len(lines) == 1 + 4  # 2 densities x 2 drop fractions
