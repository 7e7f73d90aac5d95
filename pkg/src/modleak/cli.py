"""Command-line surface for the modulation-leakage toolkit.

Subcommands
-----------
epsilon
    Qubit-deviation report for the pi and pi/2 profiles at one or more
    optical pulse widths.
keyrate
    Distance sweep of the certified secret key rate; writes CSV, JSON,
    and a run manifest.
usd
    Unambiguous-state-discrimination verdict and POVM report for the
    flawed three-state family (or a random orthonormal triple).
synth-profile
    Synthesize the band-limited cascade phase profile and write it as
    CSV.
ingest
    Validate and canonicalize a measured profile CSV (optionally
    converting interference intensity to phase).

All commands accept ``--config PATH`` with a JSON file; command-line
flags override file values.  Every defaulted parameter is echoed into
the emitted run manifest so a run can be reproduced from its outputs
alone.  The pipeline is deterministic (no seeds): identical configs
produce byte-identical CSVs.

Exit codes: 0 success, 1 usage error, 2 computation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decoy import MODE_DECOY_LP, MODE_ORACLE
from .mdi_channel import ChannelParams, IntensitySet
from .profiles import (
    ALIGN_CENTROID,
    ALIGN_FIXED,
    ALIGN_MAX_FIDELITY,
    FilterCascadeSpec,
    KIND_INTENSITY,
    KIND_PHASE,
    KIND_VOLTAGE,
    ModulatorSpec,
    TemporalProfile,
    TimeGrid,
    GaussianPulseSpec,
    default_grid,
    gaussian_intensity,
    load_profile_csv,
    phase_from_intensity,
    spline_resample,
    synthesize_phase_profile,
)
from .qstate import epsilon, make_bb84_states
from .usd import (
    FiniteState,
    exclusion_projector,
    flawed_three_state,
    linear_independence,
    success_matrix,
    usd_povm,
)
from . import keyrate as kr

_CONFIG_KEYS = {
    "scenario", "fwhm_ps", "alignment", "fixed_offset_ps", "phase_fwhm_ps",
    "phase_peak_rad", "drive_width_ps", "cascade", "modulator", "channel",
    "intensities", "n_cut", "decoy_mode", "sdp_tol", "distances_km",
    "widths_ps", "output_dir", "profiles",
}

_CHANNEL_KEYS = {"fiber_loss_db_per_km", "dark_count_per_pulse",
                 "detector_efficiency", "phase_avg_points"}


class _Parser(argparse.ArgumentParser):
    """argparse that exits with code 1 on usage errors (2 is reserved)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self.exit_usage(message))

    def exit_usage(self, message):
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        return 1


def _parse_phase(text: str) -> float:
    """Parse a phase like "pi", "-pi/2", "0.5pi", or a plain float."""
    s = text.strip().lower().replace(" ", "")
    sign = 1.0
    if s.startswith("-"):
        sign = -1.0
        s = s[1:]
    if "pi" in s:
        head, _, tail = s.partition("pi")
        factor = float(head) if head else 1.0
        if tail.startswith("/"):
            factor /= float(tail[1:])
        elif tail:
            raise ValueError(f"cannot parse phase {text!r}")
        return sign * factor * math.pi
    return sign * float(s)


def _parse_float_list(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config root must be a JSON object")
    unknown = sorted(set(cfg) - _CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    for section, allowed in (("channel", _CHANNEL_KEYS),
                             ("cascade", {"stages", "sample_step_ps"}),
                             ("modulator", {"v_pi_volts"}),
                             ("intensities", {"mu", "signal_index"}),
                             ("profiles", {"pi_csv", "half_pi_csv",
                                           "minus_half_pi_csv", "time_column",
                                           "value_column"})):
        sub = cfg.get(section)
        if sub is None:
            continue
        if not isinstance(sub, dict):
            raise ValueError(f"config section {section!r} must be an object")
        bad = sorted(set(sub) - allowed)
        if bad:
            raise ValueError(f"unknown keys in config section {section!r}: "
                             f"{', '.join(bad)}")
    return cfg


def _effective_config(args) -> dict:
    """File config with defaults filled and CLI overrides applied."""
    cfg = {}
    if getattr(args, "config", None):
        cfg = _load_config(args.config)
    out = {
        "scenario": cfg.get("scenario", kr.SCENARIO_CASCADE),
        "fwhm_ps": float(cfg.get("fwhm_ps", 50.0)),
        "alignment": cfg.get("alignment", ALIGN_FIXED),
        "fixed_offset_ps": float(cfg.get("fixed_offset_ps", 135.0)),
        "phase_fwhm_ps": float(cfg.get("phase_fwhm_ps", 400.0)),
        "phase_peak_rad": float(cfg.get("phase_peak_rad", math.pi)),
        "drive_width_ps": float(cfg.get("drive_width_ps", 200.0)),
        "cascade": {
            "stages": [list(s) for s in cfg.get("cascade", {}).get(
                "stages", [[25.0, 2], [11.0, 2], [15.0, 2]])],
            "sample_step_ps": float(cfg.get("cascade", {}).get("sample_step_ps", 0.1)),
        },
        "modulator": {"v_pi_volts": float(cfg.get("modulator", {}).get("v_pi_volts", 5.5))},
        "channel": {
            "fiber_loss_db_per_km": float(cfg.get("channel", {}).get(
                "fiber_loss_db_per_km", 0.2)),
            "dark_count_per_pulse": float(cfg.get("channel", {}).get(
                "dark_count_per_pulse", 1e-6)),
            "detector_efficiency": float(cfg.get("channel", {}).get(
                "detector_efficiency", 1.0)),
            "phase_avg_points": int(cfg.get("channel", {}).get("phase_avg_points", 16)),
        },
        "intensities": {
            "mu": [float(m) for m in cfg.get("intensities", {}).get(
                "mu", [0.05, 0.1, 0.6])],
            "signal_index": int(cfg.get("intensities", {}).get("signal_index", 2)),
        },
        "n_cut": int(cfg.get("n_cut", 10)),
        "decoy_mode": cfg.get("decoy_mode", MODE_DECOY_LP),
        "sdp_tol": float(cfg.get("sdp_tol", 1e-7)),
        "distances_km": [float(d) for d in cfg.get(
            "distances_km", [0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70])],
        "widths_ps": [float(w) for w in cfg.get("widths_ps", [50.0, 25.0, 12.5])],
        "output_dir": cfg.get("output_dir", "out"),
        "profiles": cfg.get("profiles", None),
    }
    for attr, key in (("scenario", "scenario"), ("fwhm_ps", "fwhm_ps"),
                      ("alignment", "alignment"),
                      ("fixed_offset_ps", "fixed_offset_ps"),
                      ("drive_width_ps", "drive_width_ps"),
                      ("n_cut", "n_cut"), ("decoy_mode", "decoy_mode"),
                      ("sdp_tol", "sdp_tol"), ("out_dir", "output_dir")):
        val = getattr(args, attr, None)
        if val is not None:
            out[key] = val
    if getattr(args, "distances", None):
        out["distances_km"] = _parse_float_list(args.distances)
    if getattr(args, "widths", None):
        out["widths_ps"] = _parse_float_list(args.widths)
    return out


def _pipeline_config(cfg: dict) -> kr.PipelineConfig:
    return kr.PipelineConfig(
        scenario=cfg["scenario"],
        fwhm_ps=cfg["fwhm_ps"],
        alignment=cfg["alignment"],
        fixed_offset_ps=cfg["fixed_offset_ps"],
        phase_fwhm_ps=cfg["phase_fwhm_ps"],
        phase_peak_rad=cfg["phase_peak_rad"],
        drive_width_ps=cfg["drive_width_ps"],
        cascade=FilterCascadeSpec(
            stages=tuple((float(c), int(o)) for c, o in cfg["cascade"]["stages"]),
            sample_step_ps=cfg["cascade"]["sample_step_ps"]),
        modulator=ModulatorSpec(v_pi_volts=cfg["modulator"]["v_pi_volts"]),
        channel=ChannelParams(
            distance_km=0.0,
            fiber_loss_db_per_km=cfg["channel"]["fiber_loss_db_per_km"],
            dark_count_per_pulse=cfg["channel"]["dark_count_per_pulse"],
            detector_efficiency=cfg["channel"]["detector_efficiency"],
            phase_avg_points=cfg["channel"]["phase_avg_points"]),
        intensities=IntensitySet(mu=tuple(cfg["intensities"]["mu"]),
                                 signal_index=cfg["intensities"]["signal_index"]),
        n_cut=cfg["n_cut"],
        decoy_mode=cfg["decoy_mode"],
        sdp_tol=cfg["sdp_tol"],
    )


def _manifest(cfg: dict, command: str) -> dict:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return {
        "command": command,
        "config": cfg,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "versions": {
            "modleak": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "cvxopt": __import__("cvxopt").__version__,
        },
        "seeds": None,  # the pipeline is deterministic
    }


def _profile_from_csv(path, column_map=None, kind=KIND_PHASE) -> TemporalProfile:
    t, v = load_profile_csv(path, column_map=column_map)
    step = float(min(np.min(np.diff(t)), 0.5))
    step = max(step, 0.01)
    count = int(math.floor((t[-1] - t[0]) / step)) + 1
    grid = TimeGrid(start_ps=float(t[0]), step_ps=step, count=count)
    vals = spline_resample(t, v, grid, extension="hold")
    return TemporalProfile(grid=grid, values=vals, kind=kind)


def _states_for_epsilon(cfg: dict, width_ps: float) -> list:
    """Four signal states at one optical width (profile source per config)."""
    if cfg.get("profiles"):
        prof_cfg = cfg["profiles"]
        column_map = {}
        if "time_column" in prof_cfg:
            column_map["time"] = prof_cfg["time_column"]
        if "value_column" in prof_cfg:
            column_map["value"] = prof_cfg["value_column"]
        names = ("pi_csv", "half_pi_csv", "minus_half_pi_csv")
        missing = [n for n in names if n not in prof_cfg]
        if missing:
            raise ValueError(f"profiles config needs {', '.join(missing)}")
        pi_p, half_p, mhalf_p = (
            _profile_from_csv(prof_cfg[n], column_map or None) for n in names)
        pulse = gaussian_intensity(GaussianPulseSpec(fwhm_ps=width_ps), default_grid())
        return make_bb84_states(pi_p, half_p, mhalf_p, pulse,
                                alignment=cfg["alignment"],
                                fixed_offset_ps=cfg["fixed_offset_ps"])
    pipeline = _pipeline_config({**cfg, "fwhm_ps": width_ps})
    return kr.build_states(pipeline)


def cmd_epsilon(args) -> int:
    cfg = _effective_config(args)
    rows = []
    print(f"{'width_ps':>9}  {'epsilon_pi':>12}  {'epsilon_half_pi':>15}")
    for width in cfg["widths_ps"]:
        states = _states_for_epsilon(cfg, width)
        qa_pi = epsilon(states[1])
        qa_half = epsilon(states[2])
        rows.append({"width_ps": width, "epsilon_pi": qa_pi.epsilon,
                     "epsilon_half_pi": qa_half.epsilon,
                     "theta_star_pi_rad": qa_pi.theta_star_rad,
                     "theta_star_half_pi_rad": qa_half.theta_star_rad})
        print(f"{width:9.3f}  {qa_pi.epsilon:12.6e}  {qa_half.epsilon:15.6e}")
    if args.json_out:
        payload = {"manifest": _manifest(cfg, "epsilon"), "rows": rows}
        Path(args.json_out).write_text(json.dumps(payload, indent=2))
        print(f"wrote {args.json_out}")
    return 0


def cmd_keyrate(args) -> int:
    cfg = _effective_config(args)
    if not cfg["distances_km"]:
        return _usage_error("empty distance list")
    pipeline = _pipeline_config(cfg)
    distances = sorted(cfg["distances_km"])
    points = kr.sweep(pipeline, distances)
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "sweep.csv"
    kr.write_sweep_csv(points, csv_path)
    (out_dir / "sweep.json").write_text(kr.sweep_json(points))
    manifest = _manifest(cfg, "keyrate")
    manifest["points_requested"] = len(distances)
    manifest["points_computed"] = len(points)
    manifest["max_distance_km"] = kr.max_distance(points)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"wrote {csv_path} ({len(points)}/{len(distances)} points, "
          f"max positive-rate distance {manifest['max_distance_km']:g} km)")
    if not points:
        print("all sweep points failed", file=sys.stderr)
        return 2
    return 0


def cmd_usd(args) -> int:
    if args.random_orthonormal:
        rng = np.random.default_rng(args.seed)
        raw = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        q, _ = np.linalg.qr(raw)
        states = [FiniteState(vector=q[:, k], label=f"ortho{k}") for k in range(3)]
        eps_val = None
    else:
        eps_val = args.flawed_eps if args.flawed_eps is not None else 0.04
        states = flawed_three_state(eps_val)
    independent = linear_independence(states)
    print(f"states: {[s.label for s in states]}")
    print(f"linearly independent: {independent}")
    if eps_val is not None:
        proj = exclusion_projector(states, target=1)
        print(f"exclusion-projector success on {states[1].label}: "
              f"{proj.probability(states[1]):.6e} (epsilon = {eps_val:.6e})")
    if not independent:
        print("USD infeasible for this family (dependent states).")
        return 0
    povm = usd_povm(states)
    probs = success_matrix(states, povm)
    print(f"uniform USD success probability: {probs[0, 0]:.6e}")
    print("outcome x state probabilities:")
    header = "  ".join(f"{s.label:>12}" for s in states)
    print(f"{'':>16}{header}")
    for k, el in enumerate(povm):
        cells = "  ".join(f"{probs[k, j]:12.4e}" for j in range(len(states)))
        print(f"{el.label:>16}{cells}")
    residual = np.eye(states[0].dim, dtype=complex) - sum(e.matrix for e in povm)
    print(f"completeness residual: {np.max(np.abs(residual)):.2e}")
    return 0


def cmd_synth_profile(args) -> int:
    cfg = _effective_config(args)
    nominal = _parse_phase(args.nominal_phase)
    profile = synthesize_phase_profile(
        cfg["drive_width_ps"], nominal,
        cascade=FilterCascadeSpec(
            stages=tuple((float(c), int(o)) for c, o in cfg["cascade"]["stages"]),
            sample_step_ps=cfg["cascade"]["sample_step_ps"]),
        mod=ModulatorSpec(v_pi_volts=cfg["modulator"]["v_pi_volts"]))
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        fh.write("time_ps,phase_rad\n")
        for t, v in zip(profile.grid.times(), profile.values):
            fh.write(f"{t:.6g},{v:.12g}\n")
    peak = float(np.max(np.abs(profile.values)))
    print(f"wrote {out}: {profile.grid.count} samples on "
          f"[{profile.grid.start_ps:g}, {profile.grid.end_ps:g}] ps, "
          f"peak |phase| {peak:.6f} rad (target {abs(nominal):.6f})")
    return 0


def cmd_ingest(args) -> int:
    column_map = {}
    if args.time_column is not None:
        column_map["time"] = _column_key(args.time_column)
    if args.value_column is not None:
        column_map["value"] = _column_key(args.value_column)
    kind = args.kind
    profile = _profile_from_csv(args.input, column_map or None, kind=kind)
    if args.to_phase:
        if kind != KIND_INTENSITY:
            raise ValueError("--to-phase requires --kind intensity")
        profile = phase_from_intensity(profile)
    g = profile.grid
    print(f"{args.input}: {g.count} samples, span [{g.start_ps:g}, {g.end_ps:g}] ps, "
          f"step {g.step_ps:g} ps, value range "
          f"[{profile.values.min():.6g}, {profile.values.max():.6g}] ({profile.kind})")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(f"time_ps,{profile.kind}\n")
            for t, v in zip(g.times(), profile.values):
                fh.write(f"{t:.6g},{v:.12g}\n")
        print(f"wrote {args.out}")
    return 0


def _column_key(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _usage_error(message: str) -> int:
    print(f"modleak: error: {message}", file=sys.stderr)
    return 1


def build_parser() -> _Parser:
    parser = _Parser(prog="modleak",
                     description="Hidden multi-dimensional modulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--scenario", choices=kr.SCENARIOS)
        p.add_argument("--alignment",
                       choices=[ALIGN_FIXED, ALIGN_CENTROID, ALIGN_MAX_FIDELITY])
        p.add_argument("--fixed-offset-ps", dest="fixed_offset_ps", type=float)
        p.add_argument("--fwhm-ps", dest="fwhm_ps", type=float)
        p.add_argument("--n-cut", dest="n_cut", type=int)
        p.add_argument("--decoy-mode", dest="decoy_mode",
                       choices=[MODE_DECOY_LP, MODE_ORACLE])
        p.add_argument("--sdp-tol", dest="sdp_tol", type=float)

    p_eps = sub.add_parser("epsilon", help="qubit-deviation report")
    add_common(p_eps)
    p_eps.add_argument("--widths", help="comma-separated optical FWHM list (ps)")
    p_eps.add_argument("--json-out", help="write rows + manifest as JSON")
    p_eps.set_defaults(func=cmd_epsilon)

    p_kr = sub.add_parser("keyrate", help="key-rate distance sweep")
    add_common(p_kr)
    p_kr.add_argument("--distances", help="comma-separated distances (km)")
    p_kr.add_argument("--out-dir", dest="out_dir", help="output directory")
    p_kr.set_defaults(func=cmd_keyrate)

    p_usd = sub.add_parser("usd", help="USD verdict and POVM report")
    p_usd.add_argument("--flawed-eps", dest="flawed_eps", type=float,
                       help="epsilon of the flawed three-state family")
    p_usd.add_argument("--random-orthonormal", action="store_true",
                       help="use a random orthonormal triple instead")
    p_usd.add_argument("--seed", type=int, default=0,
                       help="seed for --random-orthonormal")
    p_usd.set_defaults(func=cmd_usd)

    p_syn = sub.add_parser("synth-profile", help="synthesize the cascade phase profile")
    add_common(p_syn)
    p_syn.add_argument("--nominal-phase", default="pi",
                       help='target phase, e.g. "pi", "pi/2", "-pi/2", "1.57"')
    p_syn.add_argument("--drive-width-ps", dest="drive_width_ps", type=float)
    p_syn.add_argument("--out", default="cascade_profile.csv")
    p_syn.set_defaults(func=cmd_synth_profile)

    p_ing = sub.add_parser("ingest", help="validate and canonicalize a profile CSV")
    p_ing.add_argument("--input", required=True)
    p_ing.add_argument("--kind", default=KIND_PHASE,
                       choices=[KIND_INTENSITY, KIND_VOLTAGE, KIND_PHASE])
    p_ing.add_argument("--time-column", help="index or header name")
    p_ing.add_argument("--value-column", help="index or header name")
    p_ing.add_argument("--to-phase", action="store_true",
                       help="convert normalized interference intensity to phase")
    p_ing.add_argument("--out", help="write the canonicalized CSV here")
    p_ing.set_defaults(func=cmd_ingest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"modleak: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
