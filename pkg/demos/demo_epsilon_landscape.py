"""Where the pulse sits on the phase ramp decides how leaky the source is.

A band-limited modulator cannot realize a flat phase step: the cascade
response ramps up, rings past the target, and settles.  An optical pulse
carved out of that waveform therefore straddles a *time-varying* phase,
and the emitted state is no longer a perfect polarization qubit - it
acquires a small component outside the qubit space, quantified by the
deviation epsilon.

This script maps epsilon as a function of where the pulse center sits on
the synthesized profile, then shows how the deviation shrinks when the
pulse is made shorter than the ramp features.

Run:  python3 demos/demo_epsilon_landscape.py
"""

import math

import numpy as np

from modleak.profiles import (
    GaussianPulseSpec,
    default_grid,
    gaussian_intensity,
    synthesize_phase_profile,
)
from modleak.qstate import epsilon, make_bb84_states


def main() -> None:
    pulse = gaussian_intensity(GaussianPulseSpec(fwhm_ps=50.0), default_grid())
    profiles = [synthesize_phase_profile(200.0, s * math.pi)
                for s in (1.0, 0.5, -0.5)]

    print("epsilon vs pulse placement on the synthesized pi profile")
    print(f"{'offset_ps':>10}  {'epsilon_pi':>12}  note")
    best = (None, 1.0)
    for offset in np.arange(60.0, 201.0, 10.0):
        states = make_bb84_states(profiles[0], profiles[1], profiles[2], pulse,
                                  alignment="fixed", fixed_offset_ps=float(offset))
        eps = epsilon(states[1]).epsilon
        note = ""
        if eps < best[1]:
            best = (offset, eps)
        if offset == 90.0:
            note = "<- overshoot peak of the ringing"
        if offset == 135.0:
            note = "<- default operating point"
        print(f"{offset:10.1f}  {eps:12.4e}  {note}")
    print(f"\nflattest spot: offset {best[0]:.0f} ps with epsilon {best[1]:.3e}")
    print("the landscape has a narrow valley where the ringing crosses the")
    print("target phase; a realistic fixed timing sits on its shoulder.\n")

    print("epsilon vs optical pulse width at the default placement")
    print(f"{'fwhm_ps':>8}  {'epsilon_pi':>12}  {'epsilon_half_pi':>15}")
    prev = None
    for width in (50.0, 25.0, 12.5):
        p = gaussian_intensity(GaussianPulseSpec(fwhm_ps=width), default_grid())
        states = make_bb84_states(profiles[0], profiles[1], profiles[2], p,
                                  alignment="fixed", fixed_offset_ps=135.0)
        e_pi = epsilon(states[1]).epsilon
        e_half = epsilon(states[2]).epsilon
        factor = f"  ({prev / e_pi:.1f}x smaller)" if prev else ""
        print(f"{width:8.1f}  {e_pi:12.4e}  {e_half:15.4e}{factor}")
        prev = e_pi
    print("\nhalving the pulse width cuts the deviation by well over 2x:")
    print("a short pulse samples the ramp where it is locally flat, so the")
    print("leakage is quadratic in the phase spread across the pulse.")


if __name__ == "__main__":
    main()
