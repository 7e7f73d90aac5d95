"""Decoy-state bounds on single-photon-pair pass probabilities.

Phase-randomized coherent pulses of intensity mu are Poissonian photon-
number mixtures, so each observed gain is a Poisson-weighted sum of
number-resolved yields Y_nm:

    q_{mu,nu} = sum_{n,m} P(n|mu) P(m|nu) Y_nm,   P(n|mu) = e^{-mu} mu^n / n!.

With several intensities per side, the unknown yields are constrained by
one equation per intensity pair; truncating at n_cut and moving the
(provably bounded) Poisson tail to the right-hand side turns each
equation into a two-sided inequality.  Linear programs over
Y_nm in [0, 1] then give certified lower/upper bounds on the
single-photon-pair yield Y_11 for every one of the 16 joint signal
combinations.  These are the pass-probability intervals consumed by the
phase-error SDP.

The `oracle` mode replaces the LP by the exact photon-pair probability
from `mdi_channel.single_photon_pass_oracle` (an infinite-decoy stand-in
used for sandwich checks).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .mdi_channel import ChannelParams, GainTable, IntensitySet, single_photon_pass_oracle

__all__ = [
    "MODE_DECOY_LP",
    "MODE_ORACLE",
    "LpInfeasibleError",
    "PassBounds",
    "poisson_weights",
    "y11_bounds",
    "pass_bounds",
]

MODE_DECOY_LP = "decoy_lp"
MODE_ORACLE = "oracle"


class LpInfeasibleError(ValueError):
    """The gain data admit no photon-number yield model (inconsistent inputs)."""


@dataclass(frozen=True)
class PassBounds:
    """Per-combo intervals [lower, upper] for the single-photon-pair yield."""

    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower/upper must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if np.any(lo < -1e-12) or np.any(hi > 1.0 + 1e-12):
            raise ValueError("bounds must lie in [0, 1]")
        if np.any(lo > hi + 1e-12):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n_combos(self) -> int:
        return self.lower.size

    def to_json(self) -> str:
        return json.dumps({"lower": self.lower.tolist(),
                           "upper": self.upper.tolist()}, indent=2)


def poisson_weights(mu: float, n_cut: int) -> np.ndarray:
    """P(n | mu) for n = 0..n_cut."""
    return np.array([math.exp(-mu) * mu ** n / math.factorial(n)
                     for n in range(n_cut + 1)])


def _lp_system(gains: np.ndarray, intensities: IntensitySet, n_cut: int):
    """Inequality system A x <= b over raveled yields Y_nm."""
    mus = intensities.mu
    weights = {mu: poisson_weights(mu, n_cut) for mu in mus}
    rows, rhs, labels = [], [], []
    for ia, mu_a in enumerate(mus):
        for ib, mu_b in enumerate(mus):
            w = np.outer(weights[mu_a], weights[mu_b]).ravel()
            tail = 1.0 - weights[mu_a].sum() * weights[mu_b].sum()
            q = float(gains[ia, ib])
            rows.append(w)
            rhs.append(q)
            labels.append((mu_a, mu_b, "upper"))
            rows.append(-w)
            rhs.append(-(q - tail))
            labels.append((mu_a, mu_b, "lower"))
    return np.array(rows), np.array(rhs), labels


def y11_bounds(gains: np.ndarray, intensities: IntensitySet = IntensitySet(),
               n_cut: int = 10) -> tuple:
    """Certified (lower, upper) bounds on Y_11 for one combo.

    Parameters
    ----------
    gains : numpy.ndarray
        (n_mu, n_mu) observed pass probabilities for this combination.
    intensities : IntensitySet
        The decoy intensities indexing the gain matrix.
    n_cut : int
        Photon-number truncation (>= 5); the Poisson tail above it is
        absorbed into the constraint slack, keeping the bounds sound.

    Raises
    ------
    LpInfeasibleError
        If no yield assignment reproduces the gains (inconsistent data).
    """
    gains = np.asarray(gains, dtype=float)
    n_mu = len(intensities.mu)
    if gains.shape != (n_mu, n_mu):
        raise ValueError(f"gain matrix shape {gains.shape}, expected {(n_mu, n_mu)}")
    if np.any(gains < 0) or np.any(gains > 1):
        raise ValueError("gains must lie in [0, 1]")
    if n_cut < 5:
        raise ValueError(f"n_cut {n_cut} < 5 truncates too aggressively")
    a_ub, b_ub, labels = _lp_system(gains, intensities, n_cut)
    n_var = (n_cut + 1) ** 2
    cost = np.zeros(n_var)
    cost[1 * (n_cut + 1) + 1] = 1.0
    results = {}
    for sense, c in (("lower", cost), ("upper", -cost)):
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=(0.0, 1.0), method="highs")
        if res.status == 2:
            worst = _most_violated(a_ub, b_ub, labels)
            raise LpInfeasibleError(
                f"decoy LP infeasible; tightest conflicting constraint: {worst}")
        if res.status != 0:
            raise LpInfeasibleError(f"decoy LP did not converge (status {res.status}: "
                                    f"{res.message})")
        results[sense] = res.fun if sense == "lower" else -res.fun
    return max(results["lower"], 0.0), min(results["upper"], 1.0)


def _most_violated(a_ub, b_ub, labels) -> str:
    """Describe the constraint hardest to satisfy (diagnostic for infeasibility)."""
    # Feasibility-phase LP: minimize the uniform slack s with A x - s <= b.
    n_var = a_ub.shape[1]
    c = np.zeros(n_var + 1)
    c[-1] = 1.0
    a_ext = np.hstack([a_ub, -np.ones((a_ub.shape[0], 1))])
    bounds = [(0.0, 1.0)] * n_var + [(0.0, None)]
    res = linprog(c, A_ub=a_ext, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        return "unavailable (slack LP failed)"
    x = res.x[:-1]
    residuals = a_ub @ x - b_ub
    k = int(np.argmax(residuals))
    mu_a, mu_b, side = labels[k]
    return (f"{side} constraint at (mu_a={mu_a:g}, mu_b={mu_b:g}) "
            f"violated by {residuals[k]:.3e}")


def pass_bounds(table: GainTable, intensities: IntensitySet = IntensitySet(),
                n_cut: int = 10, mode: str = MODE_DECOY_LP,
                states_a: list = None, states_b: list = None,
                ch: ChannelParams = None) -> PassBounds:
    """Yield intervals for all 16 combos.

    In "decoy_lp" mode each combo's interval comes from `y11_bounds`
    on that combo's gain matrix.  In "oracle" mode the interval
    degenerates to the exact photon-pair value (requires the states and
    channel used to build the table).
    """
    n_combos = table.q.shape[2]
    if mode == MODE_DECOY_LP:
        lower = np.zeros(n_combos)
        upper = np.zeros(n_combos)
        for c in range(n_combos):
            lower[c], upper[c] = y11_bounds(table.combo_gains(c), intensities, n_cut)
        return PassBounds(lower=lower, upper=upper)
    if mode == MODE_ORACLE:
        if states_a is None or states_b is None or ch is None:
            raise ValueError("oracle mode needs states_a, states_b, and ch")
        vals = np.array([single_photon_pass_oracle(states_a[sa], states_b[sb], ch)
                         for sa in range(4) for sb in range(4)])
        return PassBounds(lower=vals.copy(), upper=vals.copy())
    raise ValueError(f"unknown mode {mode!r}")
