"""Honest MDI-QKD relay model: coherent pulses, interference, threshold clicks.

Alice and Bob each send phase-randomized coherent pulses carrying one of
the four signal encodings toward an untrusted central relay.  The relay
interferes them on a 50:50 beamsplitter, splits each output port into H
and V threshold detectors (modes 1H, 1V, 2H, 2V) and announces a pass
when the click pattern matches a |Psi+> Bell-state projection: both
detectors of one port fire while the other port stays silent.

For coherent inputs with mean photon numbers mu_a, mu_b, per-arm
transmittance eta and a global phase offset Delta between the parties,
the detector-mode mean photon numbers are time-integrated quadratures of
the interfered fields; the temporal/polarization structure of the
encodings enters only through the pairwise overlap integrals
(T_H, T_V) of `qstate.mode_overlaps`.  Clicks are independent
Poissonian threshold events, p = 1 - (1 - dark) e^{-nbar}, and Delta is
averaged over a uniform grid (phase randomization).

`single_photon_pass_oracle` gives the exact pass probability when each
party emits exactly one photon; the decoy-state linear program is
checked against it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .qstate import (
    EncodedState,
    joint_index_map,
    key_combo_indices,
    mode_overlaps,
    opposite_bit_key_indices,
)

__all__ = [
    "ChannelParams",
    "IntensitySet",
    "GainTable",
    "pass_probability",
    "gain_table",
    "single_photon_pass_oracle",
]


@dataclass(frozen=True)
class ChannelParams:
    """Channel and detector model parameters.

    Parameters
    ----------
    distance_km : float
        Fiber length from each party to the relay (per side, not total).
    fiber_loss_db_per_km : float
        Attenuation coefficient; 0.2 dB/km is standard telecom fiber.
    dark_count_per_pulse : float
        Dark-count probability per detector per pulse slot.
    detector_efficiency : float
        Folded into the transmittance; in (0, 1].
    phase_avg_points : int
        Size of the uniform grid used to average the global phase.
    """

    distance_km: float = 0.0
    fiber_loss_db_per_km: float = 0.2
    dark_count_per_pulse: float = 1e-6
    detector_efficiency: float = 1.0
    phase_avg_points: int = 16

    def __post_init__(self):
        if self.distance_km < 0:
            raise ValueError(f"distance_km {self.distance_km} < 0")
        if not (0.0 <= self.dark_count_per_pulse < 1.0):
            raise ValueError(f"dark count {self.dark_count_per_pulse} outside [0, 1)")
        if not (0.0 < self.detector_efficiency <= 1.0):
            raise ValueError(f"detector efficiency {self.detector_efficiency} outside (0, 1]")
        if self.phase_avg_points < 1:
            raise ValueError("phase_avg_points must be >= 1")
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"transmittance {self.eta} outside (0, 1]")

    @property
    def eta(self) -> float:
        """Per-arm transmittance including detector efficiency."""
        return self.detector_efficiency * 10.0 ** (
            -self.fiber_loss_db_per_km * self.distance_km / 10.0)

    def at_distance(self, distance_km: float) -> "ChannelParams":
        """Copy with a different per-side distance."""
        return ChannelParams(
            distance_km=distance_km,
            fiber_loss_db_per_km=self.fiber_loss_db_per_km,
            dark_count_per_pulse=self.dark_count_per_pulse,
            detector_efficiency=self.detector_efficiency,
            phase_avg_points=self.phase_avg_points,
        )


@dataclass(frozen=True)
class IntensitySet:
    """Decoy intensity settings, weakest to strongest.

    The last entry (by default) is the signal intensity used for key
    generation; the others serve as decoys.
    """

    mu: tuple = (0.05, 0.1, 0.6)
    signal_index: int = 2

    def __post_init__(self):
        m = tuple(float(x) for x in self.mu)
        object.__setattr__(self, "mu", m)
        if len(m) < 2:
            raise ValueError("need at least two intensities for decoy analysis")
        if any(x <= 0 for x in m):
            raise ValueError(f"intensities must be positive, got {m}")
        if any(b <= a for a, b in zip(m, m[1:])):
            raise ValueError(f"intensities must be strictly increasing, got {m}")
        if not (0 <= self.signal_index < len(m)):
            raise ValueError(f"signal_index {self.signal_index} out of range")

    @property
    def signal(self) -> float:
        return self.mu[self.signal_index]


@dataclass(frozen=True)
class GainTable:
    """Pass probabilities q[mu_a][mu_b][combo] plus the signal-state QBER.

    `combo` runs over the 16 joint labels of `qstate.joint_index_map`.
    `e_bit_signal` is the raw bit error rate of passed signal pulses:
    opposite-bit key-basis gain over total key-basis gain at the signal
    intensity pair (0.5 by convention when no key-basis pulse passes).
    """

    q: np.ndarray = field(repr=False)
    e_bit_signal: float = 0.0
    intensities: IntensitySet = IntensitySet()
    index_map: list = field(default_factory=joint_index_map)

    def __post_init__(self):
        arr = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "q", arr)
        n_mu = len(self.intensities.mu)
        if arr.shape != (n_mu, n_mu, len(self.index_map)):
            raise ValueError(f"gain array shape {arr.shape} inconsistent with "
                             f"{n_mu} intensities and {len(self.index_map)} combos")
        if np.any(arr < 0) or np.any(arr > 1) or not np.all(np.isfinite(arr)):
            raise ValueError("gains must lie in [0, 1]")
        if not (0.0 <= self.e_bit_signal <= 1.0):
            raise ValueError(f"e_bit_signal {self.e_bit_signal} outside [0, 1]")

    def combo_gains(self, combo: int) -> np.ndarray:
        """The (n_mu, n_mu) gain matrix of one joint combination."""
        return self.q[:, :, combo]

    def to_json(self) -> str:
        """Flat JSON keyed by "mu_a,mu_b,x_A,i_A,x_B,i_B"."""
        out = {}
        for ia, mu_a in enumerate(self.intensities.mu):
            for ib, mu_b in enumerate(self.intensities.mu):
                for c, (xa, ja, xb, jb) in enumerate(self.index_map):
                    key = f"{mu_a:g},{mu_b:g},{xa},{ja},{xb},{jb}"
                    out[key] = self.q[ia, ib, c]
        out["e_bit_signal"] = self.e_bit_signal
        return json.dumps(out, indent=2, sort_keys=True)


def _pass_from_overlaps(t_h: complex, t_v: complex, mu_a: float, mu_b: float,
                        ch: ChannelParams) -> float:
    """Delta-averaged Psi+ pass probability given the two overlap integrals."""
    eta = ch.eta
    dark = ch.dark_count_per_pulse
    n_pts = ch.phase_avg_points
    root = math.sqrt(mu_a * mu_b)
    base = mu_a / 2.0 + mu_b / 2.0
    total = 0.0
    for k in range(n_pts):
        z = np.exp(1j * (2.0 * math.pi * k / n_pts))
        beat_h = 2.0 * root * (z * t_h).real
        beat_v = 2.0 * root * (z * t_v).real
        n1h = eta / 2.0 * (base + beat_h)
        n2h = eta / 2.0 * (base - beat_h)
        n1v = eta / 2.0 * (base + beat_v)
        n2v = eta / 2.0 * (base - beat_v)
        p1h, p1v, p2h, p2v = (1.0 - (1.0 - dark) * math.exp(-n)
                              for n in (n1h, n1v, n2h, n2v))
        total += (p1h * p1v * (1.0 - p2h) * (1.0 - p2v)
                  + p2h * p2v * (1.0 - p1h) * (1.0 - p1v))
    return total / n_pts


def pass_probability(state_a: EncodedState, state_b: EncodedState,
                     mu_a: float, mu_b: float, ch: ChannelParams) -> float:
    """Probability that the relay announces Psi+ for one pulse pair.

    Parameters
    ----------
    state_a, state_b : EncodedState
        Alice's and Bob's encodings (shared grid).
    mu_a, mu_b : float
        Mean photon numbers of the coherent pulses.
    ch : ChannelParams
        Loss, dark counts, and phase-averaging resolution.
    """
    if mu_a < 0 or mu_b < 0:
        raise ValueError("mean photon numbers must be nonnegative")
    t_h, t_v = mode_overlaps(state_a, state_b)
    return _pass_from_overlaps(t_h, t_v, mu_a, mu_b, ch)


def gain_table(states_a: list, states_b: list, intensities: IntensitySet,
               ch: ChannelParams) -> GainTable:
    """All 3 x 3 x 16 pass probabilities plus the signal-state QBER.

    Combo index (s_a, s_b) -> 4 s_a + s_b with the per-party setting
    order [key0, key1, conj0, conj1], matching `joint_index_map`.
    """
    if len(states_a) != 4 or len(states_b) != 4:
        raise ValueError("need 4 states per party")
    overlaps = [mode_overlaps(states_a[sa], states_b[sb])
                for sa in range(4) for sb in range(4)]
    n_mu = len(intensities.mu)
    q = np.zeros((n_mu, n_mu, 16))
    for ia, mu_a in enumerate(intensities.mu):
        for ib, mu_b in enumerate(intensities.mu):
            for c, (t_h, t_v) in enumerate(overlaps):
                q[ia, ib, c] = _pass_from_overlaps(t_h, t_v, mu_a, mu_b, ch)
    s = intensities.signal_index
    key_total = float(q[s, s, key_combo_indices()].sum())
    opp_total = float(q[s, s, opposite_bit_key_indices()].sum())
    e_bit = opp_total / key_total if key_total > 0 else 0.5
    return GainTable(q=q, e_bit_signal=e_bit, intensities=intensities)


def single_photon_pass_oracle(state_a: EncodedState, state_b: EncodedState,
                              ch: ChannelParams) -> float:
    """Exact Psi+ probability when both parties emit exactly one photon.

    Enumerates photon-arrival cases (both, one, neither) with
    probabilities eta^2, eta(1-eta), (1-eta)^2.  In the two-photon case
    the same-port coincidence probabilities follow from second-order
    interference of the wavepackets and reduce to the overlap integrals:
    with c = Re(T_H conj(T_V)),

        p_HV (per port)  = 1/8 + c/2,
        p_HH (per port)  = (1/4)(1/4 + |T_H|^2),
        p_VV (per port)  = (1/4)(1/4 + |T_V|^2).

    Dark counts complete patterns on silent detectors.  Used as the
    ground truth the decoy LP bounds must bracket.
    """
    t_h, t_v = mode_overlaps(state_a, state_b)
    eta = ch.eta
    d = ch.dark_count_per_pulse
    cross = (t_h * np.conj(t_v)).real
    p_hv = 0.125 + 0.5 * cross
    p_hh = 0.25 * (0.25 + abs(t_h) ** 2)
    p_vv = 0.25 * (0.25 + abs(t_v) ** 2)
    both = (1.0 - d) ** 2 * (2.0 * p_hv + d * 2.0 * (p_hh + p_vv))
    one = d * (1.0 - d) ** 2
    neither = 2.0 * d * d * (1.0 - d) ** 2
    return (eta ** 2 * both
            + 2.0 * eta * (1.0 - eta) * one
            + (1.0 - eta) ** 2 * neither)
