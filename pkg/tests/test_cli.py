"""End-to-end tests of the command-line interface."""

import json
import math

import numpy as np
import pytest

from modleak.cli import _parse_phase, _parse_float_list, build_parser, main


def test_parse_phase():
    assert _parse_phase("pi") == pytest.approx(math.pi)
    assert _parse_phase("-pi/2") == pytest.approx(-math.pi / 2)
    assert _parse_phase("0.5pi") == pytest.approx(math.pi / 2)
    assert _parse_phase("pi/3") == pytest.approx(math.pi / 3)
    assert _parse_phase("2pi") == pytest.approx(2 * math.pi)
    assert _parse_phase("1.57") == pytest.approx(1.57)
    assert _parse_phase(" -0.25 ") == pytest.approx(-0.25)
    with pytest.raises(ValueError):
        _parse_phase("pix")


def test_parse_float_list():
    assert _parse_float_list("0,5,10") == [0.0, 5.0, 10.0]
    assert _parse_float_list("1.5") == [1.5]
    assert _parse_float_list(",") == []


def test_usage_errors_exit_1(capsys):
    assert main([]) == 1
    assert main(["epsilon", "--no-such-flag"]) == 1
    assert main(["keyrate", "--scenario", "bogus"]) == 1
    err = capsys.readouterr().err
    assert "error" in err


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
    out = capsys.readouterr().out
    assert "epsilon" in out
    assert "keyrate" in out


def test_epsilon_ideal(capsys):
    code = main(["epsilon", "--scenario", "ideal", "--widths", "50"])
    assert code == 0
    out = capsys.readouterr().out
    assert "width_ps" in out
    row = next(line for line in out.splitlines() if line.strip().startswith("50."))
    width, eps_pi, eps_half = (float(x) for x in row.split())
    assert width == 50.0
    assert eps_pi < 1e-12  # ideal source has no deviation
    assert eps_half < 1e-12


def test_epsilon_cascade_json(tmp_path, capsys):
    report = tmp_path / "eps.json"
    code = main(["epsilon", "--widths", "50", "--json-out", str(report)])
    assert code == 0
    payload = json.loads(report.read_text())
    rows = payload["rows"]
    assert len(rows) == 1
    assert rows[0]["width_ps"] == 50.0
    assert rows[0]["epsilon_pi"] == pytest.approx(1.4477e-3, rel=1e-3)
    assert rows[0]["epsilon_half_pi"] == pytest.approx(3.655e-4, rel=1e-2)
    manifest = payload["manifest"]
    assert manifest["command"] == "epsilon"
    assert manifest["seeds"] is None
    assert "config_sha256" in manifest
    assert manifest["versions"]["numpy"] == np.__version__


def test_config_file_with_cli_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(
        {"scenario": "ideal", "fwhm_ps": 30.0, "sdp_tol": 1e-6}))
    report = tmp_path / "eps.json"
    code = main(["epsilon", "--config", str(cfg_path), "--fwhm-ps", "25",
                 "--widths", "50", "--json-out", str(report)])
    assert code == 0
    manifest = json.loads(report.read_text())["manifest"]
    assert manifest["config"]["scenario"] == "ideal"  # from the file
    assert manifest["config"]["fwhm_ps"] == 25.0      # flag overrides file
    assert manifest["config"]["sdp_tol"] == 1e-6


def test_config_unknown_key_exit_2(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"bogus_key": 1}))
    assert main(["epsilon", "--config", str(cfg_path)]) == 2
    assert "unknown config keys: bogus_key" in capsys.readouterr().err


def test_config_unknown_section_key_exit_2(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"channel": {"loss": 0.2}}))
    assert main(["epsilon", "--config", str(cfg_path)]) == 2
    assert "channel" in capsys.readouterr().err


def test_keyrate_writes_outputs(tmp_path, capsys):
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    argv = ["keyrate", "--scenario", "ideal", "--decoy-mode", "oracle",
            "--distances", "0,5"]
    assert main(argv + ["--out-dir", str(out1)]) == 0
    assert main(argv + ["--out-dir", str(out2)]) == 0
    csv1 = (out1 / "sweep.csv").read_bytes()
    csv2 = (out2 / "sweep.csv").read_bytes()
    assert csv1 == csv2  # deterministic pipeline, byte-identical output
    lines = csv1.decode().strip().split("\n")
    assert lines[0] == "distance_km,rate,e_ph,e_bit,q_signal,p_pass_L_key"
    assert len(lines) == 3
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["points_requested"] == 2
    assert manifest["points_computed"] == 2
    assert manifest["max_distance_km"] == 5.0
    sweep = json.loads((out1 / "sweep.json").read_text())
    assert [p["distance_km"] for p in sweep] == [0.0, 5.0]
    assert sweep[0]["rate"] > 0.0


def test_keyrate_empty_distances(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"distances_km": []}))
    assert main(["keyrate", "--config", str(cfg_path)]) == 1
    assert "empty distance list" in capsys.readouterr().err


def test_usd_flawed(capsys):
    assert main(["usd", "--flawed-eps", "0.04"]) == 0
    out = capsys.readouterr().out
    assert "linearly independent: True" in out
    assert "4.000000e-02" in out  # exclusion-projector success equals epsilon
    assert "uniform USD success probability" in out
    assert "completeness residual" in out


def test_usd_dependent(capsys):
    assert main(["usd", "--flawed-eps", "0"]) == 0
    out = capsys.readouterr().out
    assert "linearly independent: False" in out
    assert "infeasible" in out


def test_usd_random_orthonormal(capsys):
    assert main(["usd", "--random-orthonormal", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "linearly independent: True" in out
    assert "1.000000e+00" in out  # orthonormal states discriminate perfectly


def test_synth_profile(tmp_path, capsys):
    out = tmp_path / "profile.csv"
    assert main(["synth-profile", "--nominal-phase", "pi/2",
                 "--out", str(out)]) == 0
    text = out.read_text().strip().split("\n")
    assert text[0] == "time_ps,phase_rad"
    assert len(text) > 10000
    values = np.array([float(line.split(",")[1]) for line in text[1:]])
    # the ringing cascade overshoots the target by a few percent
    assert math.pi / 2 < np.max(np.abs(values)) < 1.15 * math.pi / 2
    assert "peak |phase|" in capsys.readouterr().out


def test_ingest_canonicalizes(tmp_path, capsys):
    src = tmp_path / "raw.csv"
    src.write_text("t,val\n2.0,0.3\n0.0,0.1\n1.0,0.2\n3.0,0.4\n4.0,0.5\n")
    dst = tmp_path / "clean.csv"
    assert main(["ingest", "--input", str(src), "--time-column", "t",
                 "--value-column", "val", "--out", str(dst)]) == 0
    out = capsys.readouterr().out
    assert "samples" in out
    lines = dst.read_text().strip().split("\n")
    assert lines[0] == "time_ps,phase_rad"
    times = [float(line.split(",")[0]) for line in lines[1:]]
    assert times == sorted(times)


def test_ingest_to_phase_roundtrip(tmp_path):
    t = np.arange(0.0, 10.0 + 1e-9, 0.5)
    phase = 0.3 * t  # ramp within [0, pi]
    intensity = np.sin(phase / 2.0) ** 2
    src = tmp_path / "fringe.csv"
    rows = "\n".join(f"{ti:.6g},{vi:.12g}" for ti, vi in zip(t, intensity))
    src.write_text("time_ps,intensity\n" + rows + "\n")
    dst = tmp_path / "phase.csv"
    assert main(["ingest", "--input", str(src), "--kind", "intensity",
                 "--time-column", "0", "--value-column", "1",
                 "--to-phase", "--out", str(dst)]) == 0
    lines = dst.read_text().strip().split("\n")
    assert lines[0] == "time_ps,phase_rad"
    recovered = np.array([float(line.split(",")[1]) for line in lines[1:]])
    assert recovered == pytest.approx(phase, abs=1e-6)


def test_ingest_to_phase_wrong_kind(tmp_path, capsys):
    src = tmp_path / "raw.csv"
    src.write_text("time_ps,phase_rad\n0,0.1\n1,0.2\n2,0.3\n3,0.4\n")
    assert main(["ingest", "--input", str(src), "--to-phase"]) == 2
    assert "requires" in capsys.readouterr().err


def test_ingest_missing_file(tmp_path, capsys):
    assert main(["ingest", "--input", str(tmp_path / "nope.csv")]) == 2
    assert "modleak:" in capsys.readouterr().err


def test_parser_prog_name():
    parser = build_parser()
    assert parser.prog == "modleak"
