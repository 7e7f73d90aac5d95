"""Asymptotic secret key rate: per-distance evaluation and sweeps.

One distance point runs the whole pipeline: build the four signal
states, simulate the relay gains at all intensity pairs, bound the
single-photon-pair pass probabilities by the decoy LP, bound the phase
error rate by the SDP, and combine:

    R = max(0, p_L [1 - h2(e_ph)] - p_U h2(e_bit)),

with p_L/p_U the certified single-photon-pair key-basis pass bounds
(including the Poisson emission weight (mu_s e^{-mu_s})^2 and the
uniform 1/4 bit-pair average) and e_bit the single-photon key-basis
error bounded from the same LP intervals (opposite-bit upper bounds over
opposite-bit upper plus equal-bit lower).  Privacy amplification and
error correction are thus charged against the same certified
single-photon population; the raw signal gain and QBER of the gain
table are carried along as diagnostics (q_signal), since with
interferometric key encoding the multiphoton passes are uncorrelated in
bit value and would otherwise swamp the error-correction term at every
distance.

Four source scenarios are built in: "ideal" (constant nominal phases),
"square_average" (constant but shifted to the Gaussian profile's
intensity-weighted averages), "gaussian_phase" (a pi-peak Gaussian
profile much wider than the pulse), and "cascade" (profiles synthesized
through the band-limited modulator chain).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .decoy import MODE_DECOY_LP, MODE_ORACLE, pass_bounds
from .mdi_channel import ChannelParams, GainTable, IntensitySet, gain_table
from .phase_error_sdp import SdpSolution, assemble, solve
from .profiles import (
    ALIGN_FIXED,
    FilterCascadeSpec,
    GaussianPulseSpec,
    KIND_PHASE,
    ModulatorSpec,
    TemporalProfile,
    average_phase,
    default_grid,
    gaussian_intensity,
    synthesize_phase_profile,
)
from .qstate import (
    EncodedState,
    constant_phase_state,
    equal_bit_key_indices,
    joint_gram,
    key_combo_indices,
    make_bb84_states,
    make_ideal_bb84,
    opposite_bit_key_indices,
    BASIS_CONJ,
    BASIS_KEY,
)

__all__ = [
    "SCENARIO_IDEAL",
    "SCENARIO_SQUARE_AVERAGE",
    "SCENARIO_GAUSSIAN",
    "SCENARIO_CASCADE",
    "SCENARIOS",
    "KeyRatePoint",
    "PipelineConfig",
    "binary_entropy",
    "build_states",
    "key_rate",
    "evaluate_distance",
    "sweep",
    "max_distance",
    "find_max_distance",
    "write_sweep_csv",
    "sweep_json",
]

log = logging.getLogger(__name__)

SCENARIO_IDEAL = "ideal"
SCENARIO_SQUARE_AVERAGE = "square_average"
SCENARIO_GAUSSIAN = "gaussian_phase"
SCENARIO_CASCADE = "cascade"
SCENARIOS = (SCENARIO_IDEAL, SCENARIO_SQUARE_AVERAGE, SCENARIO_GAUSSIAN,
             SCENARIO_CASCADE)

CSV_COLUMNS = ("distance_km", "rate", "e_ph", "e_bit", "q_signal", "p_pass_L_key")


def binary_entropy(p: float) -> float:
    """h2(p) = -p log2 p - (1-p) log2(1-p), with h2(0) = h2(1) = 0."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"binary entropy argument {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True)
class KeyRatePoint:
    """One evaluated distance of the key-rate sweep."""

    distance_km: float
    rate_per_pulse: float
    e_ph: float
    e_bit: float
    q_signal: float
    p_pass_L_key: float

    def __post_init__(self):
        vals = (self.distance_km, self.rate_per_pulse, self.e_ph, self.e_bit,
                self.q_signal, self.p_pass_L_key)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite key-rate point: {vals}")
        if self.rate_per_pulse < 0:
            raise ValueError(f"rate_per_pulse {self.rate_per_pulse} < 0")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to evaluate a scenario at any distance.

    The channel's own distance is a placeholder; sweeps override it per
    point via `ChannelParams.at_distance`.
    """

    scenario: str = SCENARIO_CASCADE
    fwhm_ps: float = 50.0
    alignment: str = ALIGN_FIXED
    fixed_offset_ps: float = 135.0
    phase_fwhm_ps: float = 400.0
    phase_peak_rad: float = math.pi
    drive_width_ps: float = 200.0
    cascade: FilterCascadeSpec = FilterCascadeSpec()
    modulator: ModulatorSpec = ModulatorSpec()
    channel: ChannelParams = ChannelParams()
    intensities: IntensitySet = IntensitySet()
    n_cut: int = 10
    decoy_mode: str = MODE_DECOY_LP
    sdp_tol: float = 1e-7

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; "
                             f"choose one of {SCENARIOS}")
        if self.fwhm_ps <= 0 or self.phase_fwhm_ps <= 0 or self.drive_width_ps <= 0:
            raise ValueError("widths must be positive")
        if self.decoy_mode not in (MODE_DECOY_LP, MODE_ORACLE):
            raise ValueError(f"unknown decoy mode {self.decoy_mode!r}")
        if self.n_cut < 5:
            raise ValueError(f"n_cut {self.n_cut} < 5")


def _gaussian_phase_profile(config: PipelineConfig, scale: float) -> TemporalProfile:
    grid = default_grid()
    sigma = config.phase_fwhm_ps / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    t = grid.times()
    vals = scale * config.phase_peak_rad * np.exp(-(t ** 2) / (2.0 * sigma * sigma))
    return TemporalProfile(grid=grid, values=vals, kind=KIND_PHASE)


def build_states(config: PipelineConfig) -> list:
    """The four signal states of the configured scenario.

    The source is symmetric: Alice and Bob use the same four states.
    """
    grid = default_grid()
    pulse = gaussian_intensity(GaussianPulseSpec(fwhm_ps=config.fwhm_ps), grid)
    if config.scenario == SCENARIO_IDEAL:
        return make_ideal_bb84(pulse)
    if config.scenario == SCENARIO_SQUARE_AVERAGE:
        # Constant phases at the flawed profiles' intensity-weighted means.
        avg = average_phase(_gaussian_phase_profile(config, 1.0), pulse)
        labels = [(BASIS_KEY, 0), (BASIS_KEY, 1), (BASIS_CONJ, 0), (BASIS_CONJ, 1)]
        return [constant_phase_state(pulse, k * avg, lab)
                for k, lab in zip((0.0, 1.0, 0.5, -0.5), labels)]
    if config.scenario == SCENARIO_GAUSSIAN:
        labels = [(BASIS_KEY, 0), (BASIS_KEY, 1), (BASIS_CONJ, 0), (BASIS_CONJ, 1)]
        out = []
        for k, lab in zip((0.0, 1.0, 0.5, -0.5), labels):
            phase = _gaussian_phase_profile(config, k)
            out.append(EncodedState(intensity=pulse, phase=phase, label=lab))
        return out
    profiles = [synthesize_phase_profile(config.drive_width_ps, s * math.pi,
                                         config.cascade, config.modulator)
                for s in (1.0, 0.5, -0.5)]
    return make_bb84_states(profiles[0], profiles[1], profiles[2], pulse,
                            alignment=config.alignment,
                            fixed_offset_ps=config.fixed_offset_ps)


def key_rate(bounds, sol: SdpSolution, gains: GainTable,
             intensities: IntensitySet = IntensitySet(),
             distance_km: float = 0.0) -> KeyRatePoint:
    """Combine certified bounds and gains into one key-rate point.

    Parameters
    ----------
    bounds : PassBounds
        Decoy intervals for the 16 combos.
    sol : SdpSolution
        Certified phase-error bound.
    gains : GainTable
        Raw gains (for the q_signal diagnostic).
    intensities : IntensitySet
    distance_km : float
        Recorded in the output point.
    """
    keys = key_combo_indices()
    opp = opposite_bit_key_indices()
    eq = equal_bit_key_indices()
    mu_s = intensities.signal
    weight = (mu_s * math.exp(-mu_s)) ** 2
    p_low = weight * 0.25 * float(bounds.lower[keys].sum())
    p_up = weight * 0.25 * float(bounds.upper[keys].sum())
    s = intensities.signal_index
    q_signal = 0.25 * float(gains.q[s, s, keys].sum())
    err_num = float(bounds.upper[opp].sum())
    err_den = err_num + float(bounds.lower[eq].sum())
    e_bit = err_num / err_den if err_den > 0 else 0.5
    rate = max(0.0, p_low * (1.0 - binary_entropy(sol.e_ph_upper))
               - p_up * binary_entropy(e_bit))
    return KeyRatePoint(distance_km=distance_km, rate_per_pulse=rate,
                        e_ph=sol.e_ph_upper, e_bit=e_bit, q_signal=q_signal,
                        p_pass_L_key=p_low)


def evaluate_distance(config: PipelineConfig, distance_km: float,
                      states: list = None) -> KeyRatePoint:
    """Full pipeline at one distance (states may be passed in to reuse)."""
    if states is None:
        states = build_states(config)
    ch = config.channel.at_distance(distance_km)
    table = gain_table(states, states, config.intensities, ch)
    bounds = pass_bounds(table, config.intensities, config.n_cut,
                         mode=config.decoy_mode, states_a=states,
                         states_b=states, ch=ch)
    gram = joint_gram(states, states)
    sol = solve(assemble(gram, bounds), tol=config.sdp_tol)
    return key_rate(bounds, sol, table, config.intensities, distance_km)


def sweep(config: PipelineConfig, distances_km: list) -> list:
    """Evaluate the pipeline at each distance; failures are logged and skipped.

    Distances must be sorted ascending.  Returns the successful
    KeyRatePoints in distance order.
    """
    if len(distances_km) == 0:
        raise ValueError("empty distance list")
    if any(b < a for a, b in zip(distances_km, distances_km[1:])):
        raise ValueError("distances must be sorted ascending")
    states = build_states(config)
    points = []
    for d in distances_km:
        try:
            points.append(evaluate_distance(config, float(d), states))
        except Exception:
            log.warning("key-rate evaluation failed at %.3f km", d, exc_info=True)
    return points


def max_distance(points: list) -> float:
    """Largest swept distance with a positive rate (0.0 if none)."""
    best = 0.0
    for p in points:
        if p.rate_per_pulse > 0.0 and p.distance_km > best:
            best = p.distance_km
    return best


def find_max_distance(config: PipelineConfig, states: list = None,
                      start_km: float = 5.0, cap_km: float = 400.0,
                      resolution_km: float = 0.5) -> float:
    """Locate the maximum secure distance by doubling plus bisection.

    Returns 0.0 when even distance 0 yields no key.  The answer is the
    interval midpoint once the bracket is narrower than resolution_km.
    """
    if states is None:
        states = build_states(config)
    if evaluate_distance(config, 0.0, states).rate_per_pulse <= 0.0:
        return 0.0
    d_lo, d_hi = 0.0, start_km
    while d_hi < cap_km:
        if evaluate_distance(config, d_hi, states).rate_per_pulse <= 0.0:
            break
        d_lo = d_hi
        d_hi *= 2.0
    while d_hi - d_lo > resolution_km:
        mid = 0.5 * (d_lo + d_hi)
        if evaluate_distance(config, mid, states).rate_per_pulse > 0.0:
            d_lo = mid
        else:
            d_hi = mid
    return 0.5 * (d_lo + d_hi)


def _format_value(x: float) -> str:
    return f"{x:.12g}"


def write_sweep_csv(points: list, path) -> None:
    """Write sweep points as CSV with a fixed column order and format.

    The formatting is deterministic so identical runs produce
    byte-identical files.
    """
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for p in points:
            writer.writerow([_format_value(v) for v in (
                p.distance_km, p.rate_per_pulse, p.e_ph, p.e_bit,
                p.q_signal, p.p_pass_L_key)])


def sweep_json(points: list) -> str:
    import json

    return json.dumps([{k: getattr(p, a) for k, a in zip(
        CSV_COLUMNS, ("distance_km", "rate_per_pulse", "e_ph", "e_bit",
                      "q_signal", "p_pass_L_key"))} for p in points], indent=2)
