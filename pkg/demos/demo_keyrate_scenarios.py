"""How much secure distance does the hidden time-phase structure cost?

Four sources, identical except for their phase profiles, run the full
certified pipeline (decoy LP bounds -> phase-error SDP -> key rate):

  ideal           flat phases at exactly {0, pi, +/-pi/2}
  square_average  flat phases shifted to the flawed profiles' averages
                  (what a time-blind calibration would report as "fine")
  gaussian_phase  a smooth pi-peaked phase bump much wider than the pulse
  cascade         profiles synthesized through the band-limited modulator

The punchline: a source whose *average* phases look perfect loses almost
nothing, but the hidden temporal structure of the realistic profiles
silently costs tens of kilometers of secure reach.

Run:  python3 demos/demo_keyrate_scenarios.py      (about a minute)
"""

import time

from modleak.keyrate import (
    PipelineConfig,
    SCENARIOS,
    build_states,
    evaluate_distance,
    find_max_distance,
)


def main() -> None:
    distances = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0]
    results = {}
    for scenario in SCENARIOS:
        config = PipelineConfig(scenario=scenario)
        states = build_states(config)
        t0 = time.perf_counter()
        rows = [evaluate_distance(config, d, states) for d in distances]
        reach = find_max_distance(config, states=states)
        results[scenario] = (rows, reach)
        print(f"[{scenario}: swept {len(distances)} points + max-distance "
              f"search in {time.perf_counter() - t0:.1f}s]")

    print("\nsecret key rate per pulse (0 = no certifiable key)")
    header = "  ".join(f"{s:>15}" for s in SCENARIOS)
    print(f"{'km':>4}  {header}")
    for i, d in enumerate(distances):
        cells = "  ".join(f"{results[s][0][i].rate_per_pulse:15.3e}"
                          for s in SCENARIOS)
        print(f"{d:4.0f}  {cells}")

    print("\ncertified phase-error bound at 20 km")
    for s in SCENARIOS:
        print(f"  {s:>15}: e_ph <= {results[s][0][2].e_ph:.4f}")

    base = results["ideal"][1]
    print("\nmaximum secure distance")
    for s in SCENARIOS:
        reach = results[s][1]
        loss = 100.0 * (base - reach) / base
        print(f"  {s:>15}: {reach:5.1f} km  ({loss:+5.1f}% vs ideal)")
    print("\nthe square_average source is indistinguishable from ideal by")
    print("time-averaged calibration, yet the profiles that *generate* those")
    print("averages cut the secure reach by roughly half.")


if __name__ == "__main__":
    main()
