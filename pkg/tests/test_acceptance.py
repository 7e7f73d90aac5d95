"""Acceptance suite: one test per release criterion.

Each test computes its verdict, records a one-line PASS/FAIL summary
through the `acceptance` fixture (printed after the run), and then
asserts, so a red criterion shows up both in the pytest report and in
the per-criterion summary block.
"""

import time

import numpy as np
import pytest

from _oracles import full_two_block_value, random_gram_instance
from modleak.cli import main as cli_main
from modleak.decoy import MODE_ORACLE, PassBounds, pass_bounds
from modleak.keyrate import (
    PipelineConfig,
    SCENARIO_CASCADE,
    SCENARIO_GAUSSIAN,
    SCENARIO_IDEAL,
    SCENARIO_SQUARE_AVERAGE,
    build_states,
    find_max_distance,
)
from modleak.mdi_channel import (
    ChannelParams,
    IntensitySet,
    gain_table,
    single_photon_pass_oracle,
)
from modleak.phase_error_sdp import STATUS_OPTIMAL, assemble, solve
from modleak.qstate import epsilon, epsilon_scan, joint_gram
from modleak.usd import (
    exclusion_projector,
    flawed_three_state,
    linear_independence,
    success_matrix,
    usd_povm,
)


@pytest.fixture(scope="module")
def eps_data():
    t0 = time.perf_counter()
    states = build_states(PipelineConfig())
    qa_pi = epsilon(states[1])
    qa_half = epsilon(states[2])
    elapsed = time.perf_counter() - t0
    return {"states": states, "pi": qa_pi, "half": qa_half, "elapsed": elapsed}


@pytest.fixture(scope="module")
def cascade_lp_data():
    """Decoy-LP bounds and exact oracle values at four distances."""
    t0 = time.perf_counter()
    config = PipelineConfig()
    states = build_states(config)
    ints = IntensitySet()
    rows = []
    for d in (0.0, 10.0, 25.0, 50.0):
        ch = config.channel.at_distance(d)
        table = gain_table(states, states, ints, ch)
        bounds = pass_bounds(table, ints)
        oracle = np.array([
            single_photon_pass_oracle(states[c // 4], states[c % 4], ch)
            for c in range(16)])
        rows.append({"distance": d, "bounds": bounds, "oracle": oracle})
    elapsed = time.perf_counter() - t0
    return {"states": states, "rows": rows, "elapsed": elapsed}


def test_criterion_1_epsilon_windows(acceptance, eps_data):
    t0 = time.perf_counter()
    scan_pi = epsilon_scan(eps_data["states"][1])
    scan_half = epsilon_scan(eps_data["states"][2])
    elapsed = eps_data["elapsed"] + (time.perf_counter() - t0)
    eps_pi = eps_data["pi"].epsilon
    eps_half = eps_data["half"].epsilon
    dev_pi = abs(eps_pi - scan_pi.epsilon)
    dev_half = abs(eps_half - scan_half.epsilon)
    ok = (0.5e-3 <= eps_pi <= 2.0e-3 and 1.3e-4 <= eps_half <= 5.1e-4
          and dev_pi <= 1e-10 and dev_half <= 1e-10 and elapsed < 5.0)
    acceptance(1, "epsilon windows and scan agreement", ok,
               f"eps_pi={eps_pi:.6e}, eps_half={eps_half:.6e}, "
               f"scan dev <= {max(dev_pi, dev_half):.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_epsilon_ratio(acceptance, eps_data):
    ratio = eps_data["pi"].epsilon / eps_data["half"].epsilon
    elapsed = eps_data["elapsed"]
    ok = abs(ratio / 4.0 - 1.0) <= 0.15 and elapsed < 5.0
    acceptance(2, "pi vs pi/2 deviation ratio near 4", ok,
               f"ratio={ratio:.4f}, {elapsed:.2f}s")
    assert ok


def test_criterion_3_width_scaling(acceptance):
    t0 = time.perf_counter()
    eps = []
    for width in (50.0, 25.0, 12.5):
        states = build_states(PipelineConfig(fwhm_ps=width))
        eps.append(epsilon(states[1]).epsilon)
    elapsed = time.perf_counter() - t0
    decreasing = eps[0] > eps[1] > eps[2]
    factors = [eps[0] / eps[1], eps[1] / eps[2]]
    ok = decreasing and all(f >= 2.0 for f in factors) and elapsed < 10.0
    acceptance(3, "narrower pulses suppress the deviation", ok,
               f"eps={['%.3e' % e for e in eps]}, "
               f"factors={['%.2f' % f for f in factors]}, {elapsed:.2f}s")
    assert ok


def test_criterion_4_distance_reductions(acceptance):
    t0 = time.perf_counter()
    reach = {}
    for scenario in (SCENARIO_IDEAL, SCENARIO_SQUARE_AVERAGE,
                     SCENARIO_GAUSSIAN, SCENARIO_CASCADE):
        config = PipelineConfig(scenario=scenario)
        reach[scenario] = find_max_distance(config)
    elapsed = time.perf_counter() - t0
    base = reach[SCENARIO_IDEAL]
    red = {s: 100.0 * (base - reach[s]) / base for s in reach}
    ok = (base > 0.0
          and 35.0 <= red[SCENARIO_GAUSSIAN] <= 65.0
          and 45.0 <= red[SCENARIO_CASCADE] <= 75.0
          and red[SCENARIO_SQUARE_AVERAGE] < 10.0
          and elapsed < 1800.0)
    detail = ", ".join(f"{s}={reach[s]:.1f}km({red[s]:+.1f}%)" for s in reach)
    acceptance(4, "key-rate distance reductions per scenario", ok,
               f"{detail}, {elapsed:.1f}s")
    assert ok


def test_criterion_5_sdp_validation(acceptance, cascade_lp_data):
    t0 = time.perf_counter()
    gaps = []

    # (a) reduced SDP equals the full two-block SDP on random instances
    rng = np.random.default_rng(424242)
    max_diff = 0.0
    all_optimal = True
    for _ in range(50):
        gram, bounds, combos, pairs = random_gram_instance(rng)
        sol = solve(assemble(gram, bounds, key_combos=combos,
                             coherence_pairs=pairs))
        all_optimal &= sol.status == STATUS_OPTIMAL
        if sol.status == STATUS_OPTIMAL:
            gaps.append(sol.duality_gap)
        reference = full_two_block_value(gram.entries, bounds.lower,
                                         bounds.upper, pairs)
        max_diff = max(max_diff, abs(sol.dual_objective - reference))

    # (b) certified duality gaps, including the production pipeline solves
    gram16 = joint_gram(cascade_lp_data["states"], cascade_lp_data["states"])
    for row in cascade_lp_data["rows"]:
        sol = solve(assemble(gram16, row["bounds"]))
        if sol.status == STATUS_OPTIMAL:
            gaps.append(sol.duality_gap)
    max_gap = max(gaps)

    # (c) zero-noise ideal source certifies (almost) no phase error
    ideal = build_states(PipelineConfig(scenario=SCENARIO_IDEAL))
    ch0 = ChannelParams(distance_km=0.0, dark_count_per_pulse=0.0)
    table0 = gain_table(ideal, ideal, IntensitySet(), ch0)
    bounds0 = pass_bounds(table0, IntensitySet(), mode=MODE_ORACLE,
                          states_a=ideal, states_b=ideal, ch=ch0)
    sol0 = solve(assemble(joint_gram(ideal, ideal), bounds0))
    e_ph_ideal = sol0.e_ph_upper

    # (d) widening the intervals never lowers the certified bound
    monotone = True
    previous = -1.0
    for scale in np.linspace(1.0, 0.1, 10):
        widened = PassBounds(lower=bounds0.lower * scale,
                             upper=1.0 - (1.0 - bounds0.upper) * scale)
        e = solve(assemble(joint_gram(ideal, ideal), widened)).e_ph_upper
        monotone &= e >= previous - 1e-8
        previous = e
    elapsed = time.perf_counter() - t0

    ok = (all_optimal and max_diff <= 1e-6 and max_gap <= 1e-7
          and e_ph_ideal < 1e-4 and monotone and elapsed < 300.0)
    acceptance(5, "SDP certificates validated", ok,
               f"max|reduced-full|={max_diff:.2e}, max gap={max_gap:.2e}, "
               f"ideal e_ph={e_ph_ideal:.2e}, widening monotone={monotone}, "
               f"{elapsed:.1f}s")
    assert ok


def test_criterion_6_decoy_sandwich(acceptance, cascade_lp_data):
    worst = 0.0
    ok = True
    for row in cascade_lp_data["rows"]:
        lo, hi = row["bounds"].lower, row["bounds"].upper
        y = row["oracle"]
        ok &= bool(np.all(lo <= y + 1e-9) and np.all(y <= hi + 1e-9))
        worst = max(worst, float(np.max(lo - y)), float(np.max(y - hi)))
    elapsed = cascade_lp_data["elapsed"]
    ok = ok and elapsed < 300.0
    acceptance(6, "decoy LP bounds sandwich the exact yields", ok,
               f"4 distances x 16 combos, worst violation {worst:.1e}, "
               f"{elapsed:.1f}s")
    assert ok


def test_criterion_7_usd_reports(acceptance):
    t0 = time.perf_counter()
    independence_ok = not linear_independence(flawed_three_state(0.0))
    for e in (1e-6, 0.04, 0.3):
        independence_ok &= linear_independence(flawed_three_state(e))

    states = flawed_three_state(0.04)
    povm = usd_povm(states)
    total = sum(el.matrix for el in povm)
    completeness = float(np.max(np.abs(total - np.eye(states[0].dim))))
    probs = success_matrix(states, povm)
    unambiguity = float(np.max(np.abs(probs[:3] - np.diag(np.diag(probs[:3])))))
    residuals_ok = completeness < 1e-10 and unambiguity < 1e-10

    projector_ok = True
    worst_proj = 0.0
    for e in (1e-6, 0.04, 0.2):
        fam = flawed_three_state(e)
        proj = exclusion_projector(fam, target=1)
        dev = abs(proj.probability(fam[1]) - e)
        worst_proj = max(worst_proj, dev)
        projector_ok &= dev <= 1e-12
    elapsed = time.perf_counter() - t0

    ok = independence_ok and residuals_ok and projector_ok and elapsed < 1.0
    acceptance(7, "USD feasibility, POVM residuals, projector success", ok,
               f"independence iff eps>0: {independence_ok}, residuals "
               f"<= {max(completeness, unambiguity):.1e}, |proj-eps| <= "
               f"{worst_proj:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_8_reproducible_sweep(acceptance, tmp_path):
    t0 = time.perf_counter()
    argv = ["keyrate", "--distances", "0,10"]
    code1 = cli_main(argv + ["--out-dir", str(tmp_path / "r1")])
    code2 = cli_main(argv + ["--out-dir", str(tmp_path / "r2")])
    csv1 = (tmp_path / "r1" / "sweep.csv").read_bytes()
    csv2 = (tmp_path / "r2" / "sweep.csv").read_bytes()
    elapsed = time.perf_counter() - t0
    ok = code1 == 0 and code2 == 0 and csv1 == csv2
    acceptance(8, "repeated sweeps are byte-identical", ok,
               f"exit codes ({code1}, {code2}), {len(csv1)} bytes, "
               f"identical={csv1 == csv2}, {elapsed:.1f}s")
    assert ok
