"""Tests for decoy-state linear-programming bounds on single-pair yields."""

import json
import math

import numpy as np
import pytest

from modleak.decoy import (
    MODE_DECOY_LP,
    MODE_ORACLE,
    LpInfeasibleError,
    PassBounds,
    pass_bounds,
    poisson_weights,
    y11_bounds,
)
from modleak.mdi_channel import (
    ChannelParams,
    IntensitySet,
    gain_table,
    single_photon_pass_oracle,
)
from modleak.qstate import make_ideal_bb84
from modleak.profiles import default_grid, gaussian_intensity, GaussianPulseSpec


@pytest.fixture(scope="module")
def ideal_states():
    pulse = gaussian_intensity(GaussianPulseSpec(fwhm_ps=50.0), default_grid())
    return make_ideal_bb84(pulse)


def test_poisson_weights_sum_and_values():
    w = poisson_weights(0.6, 10)
    assert w.shape == (11,)
    assert w[0] == pytest.approx(math.exp(-0.6), rel=1e-12)
    assert w[1] == pytest.approx(0.6 * math.exp(-0.6), rel=1e-12)
    # the truncated tail is small for mu <= 0.6 and n_cut = 10
    assert 1.0 - w.sum() < 1e-8
    assert np.all(w >= 0.0)


def test_poisson_weights_zero_mu():
    w = poisson_weights(0.0, 6)
    assert w[0] == 1.0
    assert np.all(w[1:] == 0.0)


def test_pass_bounds_validation():
    with pytest.raises(ValueError, match="length"):
        PassBounds(lower=np.zeros(3), upper=np.zeros(4))
    with pytest.raises(ValueError):
        PassBounds(lower=np.array([0.5]), upper=np.array([0.2]))
    with pytest.raises(ValueError):
        PassBounds(lower=np.array([-0.5]), upper=np.array([0.2]))
    b = PassBounds(lower=np.zeros(16), upper=np.ones(16))
    assert b.n_combos == 16
    payload = json.loads(b.to_json())
    assert len(payload["lower"]) == 16
    assert payload["upper"][0] == 1.0


def test_y11_bounds_input_validation():
    ints = IntensitySet()
    with pytest.raises(ValueError, match="shape"):
        y11_bounds(np.zeros((2, 3)), ints)
    with pytest.raises(ValueError, match="n_cut"):
        y11_bounds(np.zeros((3, 3)), ints, n_cut=3)
    with pytest.raises(ValueError):
        y11_bounds(np.full((3, 3), 1.5), ints)


def test_y11_bounds_analytic_model():
    # yields Y_nm = 1 - 2^{-(n+m)} give gains 1 - e^{-(mu+nu)/2} in
    # closed form; the LP interval must bracket the true Y_11 = 0.75
    ints = IntensitySet()
    mus = np.array(ints.mu)
    gains = 1.0 - np.exp(-mus[:, None] / 2.0) * np.exp(-mus[None, :] / 2.0)
    lo, hi = y11_bounds(gains, ints)
    assert lo <= 0.75 <= hi
    assert lo > 0.7
    assert hi - lo < 0.05


def test_y11_bounds_zero_gains():
    ints = IntensitySet()
    lo, hi = y11_bounds(np.zeros((3, 3)), ints)
    assert lo == 0.0
    # the tail slack keeps the upper bound from collapsing exactly to zero,
    # but it must remain tiny because every observed gain is zero
    assert hi < 1e-4


def test_y11_bounds_infeasible_raises():
    ints = IntensitySet()
    gains = np.zeros((3, 3))
    # weakest pair clicks always while the strongest never does: impossible
    gains[0, 0] = 1.0
    with pytest.raises(LpInfeasibleError, match="violated"):
        y11_bounds(gains, ints)


def test_sandwich_against_oracle(ideal_states):
    ch = ChannelParams(distance_km=10.0)
    ints = IntensitySet()
    table = gain_table(ideal_states, ideal_states, ints, ch)
    bounds = pass_bounds(table, ints)
    for combo in range(16):
        y_true = single_photon_pass_oracle(
            ideal_states[combo // 4], ideal_states[combo % 4], ch
        )
        assert bounds.lower[combo] <= y_true + 1e-9
        assert bounds.upper[combo] >= y_true - 1e-9


def test_extra_intensity_tightens(ideal_states):
    ch = ChannelParams(distance_km=10.0)
    three = IntensitySet()
    four = IntensitySet(mu=(0.05, 0.1, 0.2, 0.6), signal_index=3)
    t3 = gain_table(ideal_states, ideal_states, three, ch)
    t4 = gain_table(ideal_states, ideal_states, four, ch)
    b3 = pass_bounds(t3, three)
    b4 = pass_bounds(t4, four)
    slack = 1e-9
    assert np.all(b4.lower >= b3.lower - slack)
    assert np.all(b4.upper <= b3.upper + slack)
    # and at least one combo must tighten appreciably
    gain3 = b3.upper - b3.lower
    gain4 = b4.upper - b4.lower
    assert gain4.max() < gain3.max()


def test_n_cut_convergence(ideal_states):
    ch = ChannelParams(distance_km=10.0)
    ints = IntensitySet()
    table = gain_table(ideal_states, ideal_states, ints, ch)
    b10 = pass_bounds(table, ints, n_cut=10)
    b14 = pass_bounds(table, ints, n_cut=14)
    assert np.max(np.abs(b10.lower - b14.lower)) < 1e-6
    assert np.max(np.abs(b10.upper - b14.upper)) < 1e-6


def test_lp_determinism(ideal_states):
    ch = ChannelParams(distance_km=25.0)
    ints = IntensitySet()
    table = gain_table(ideal_states, ideal_states, ints, ch)
    a = pass_bounds(table, ints)
    b = pass_bounds(table, ints)
    assert np.array_equal(a.lower, b.lower)
    assert np.array_equal(a.upper, b.upper)


def test_oracle_mode(ideal_states):
    ch = ChannelParams(distance_km=10.0)
    ints = IntensitySet()
    table = gain_table(ideal_states, ideal_states, ints, ch)
    bounds = pass_bounds(
        table,
        ints,
        mode=MODE_ORACLE,
        states_a=ideal_states,
        states_b=ideal_states,
        ch=ch,
    )
    assert np.array_equal(bounds.lower, bounds.upper)
    y00 = single_photon_pass_oracle(ideal_states[0], ideal_states[0], ch)
    assert bounds.lower[0] == pytest.approx(y00, rel=1e-12)


def test_oracle_mode_requires_states(ideal_states):
    ch = ChannelParams(distance_km=10.0)
    ints = IntensitySet()
    table = gain_table(ideal_states, ideal_states, ints, ch)
    with pytest.raises(ValueError, match="oracle"):
        pass_bounds(table, ints, mode=MODE_ORACLE)
    with pytest.raises(ValueError, match="mode"):
        pass_bounds(table, ints, mode="nonsense")


def test_bounds_clamped_to_unit_interval(ideal_states):
    ch = ChannelParams(distance_km=0.0)
    ints = IntensitySet()
    table = gain_table(ideal_states, ideal_states, ints, ch)
    bounds = pass_bounds(table, ints)
    assert np.all(bounds.lower >= 0.0)
    assert np.all(bounds.upper <= 1.0)
    assert np.all(bounds.lower <= bounds.upper)
