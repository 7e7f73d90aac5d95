"""Single-photon time (x) polarization states and qubit-deviation measures.

A phase-modulated source emits, ideally, polarization qubits
(|H> + e^{i phi}|V>)/sqrt(2).  When the modulation phase varies over the
optical pulse, the emitted state couples the temporal mode to the
polarization and leaves the qubit subspace:

    |psi> = integral dt sqrt(f(t)) |t> (x) (|H> + e^{i phi(t)}|V>)/sqrt(2),

with f(t) the normalized intensity profile.  Overlaps between two such
states reduce to one-dimensional quadratures because the time bins |t>
are orthonormal:

    <a|b> = integral dt sqrt(f_a f_b) * (1 + e^{i(phi_b - phi_a)})/2.

The deviation from the closest constant-phase (qubit) state is measured
by epsilon = 1 - max_theta |<theta|psi>|^2.  Writing
M = integral f(t) e^{i phi(t)} dt, the maximizing constant phase is
theta* = arg M and epsilon = 1 - (1 + |M|)^2 / 4 in closed form; a
brute-force scan over theta is kept in `epsilon_scan` as an independent
check.  For small phase variance, epsilon ~ Var_f[phi] / 2.

Conventions: the key-generation basis is {phi = 0, phi = pi} (bit 0
carries no modulation and hence no flaw); the conjugate basis is
{phi = +pi/2, phi = -pi/2}.  Joint Alice (x) Bob Gram matrices use the
lexicographic index (x_A, i_A, x_B, i_B) with Key = 0 < Conj = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .profiles import (
    ALIGN_FIXED,
    KIND_INTENSITY,
    KIND_PHASE,
    TemporalProfile,
    TimeGrid,
    align_profiles,
    spline_resample,
)

__all__ = [
    "BASIS_KEY",
    "BASIS_CONJ",
    "EncodedState",
    "QubitApproximation",
    "GramMatrix",
    "mode_overlaps",
    "overlap",
    "epsilon",
    "epsilon_scan",
    "average_phase_of_state",
    "constant_phase_state",
    "make_ideal_bb84",
    "make_bb84_states",
    "joint_gram",
    "joint_index_map",
    "key_combo_indices",
    "opposite_bit_key_indices",
    "equal_bit_key_indices",
]

BASIS_KEY = 0
BASIS_CONJ = 1


@dataclass(frozen=True)
class EncodedState:
    """An intensity profile paired with a phase profile on one grid.

    Parameters
    ----------
    intensity : TemporalProfile
        Normalized intensity f(t) (unit trapezoid integral).
    phase : TemporalProfile
        Modulation phase phi(t) in radians.
    label : tuple
        (basis, bit) with basis in {BASIS_KEY, BASIS_CONJ}, bit in {0, 1}.
    """

    intensity: TemporalProfile
    phase: TemporalProfile
    label: tuple = (BASIS_KEY, 0)

    def __post_init__(self):
        if self.intensity.grid != self.phase.grid:
            raise ValueError("intensity and phase must share one grid")
        if self.intensity.kind != KIND_INTENSITY:
            raise ValueError("intensity profile has wrong kind")
        if self.phase.kind != KIND_PHASE:
            raise ValueError("phase profile has wrong kind")
        total = self.intensity.integral()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"intensity integral {total} is not 1 (normalize first)")
        basis, bit = self.label
        if basis not in (BASIS_KEY, BASIS_CONJ) or bit not in (0, 1):
            raise ValueError(f"bad state label {self.label!r}")

    @property
    def grid(self) -> TimeGrid:
        return self.intensity.grid


@dataclass(frozen=True)
class QubitApproximation:
    """Closest constant-phase qubit state and the residual deviation.

    epsilon = 1 - |<theta*|psi>|^2 with theta* the best constant phase.
    """

    theta_star_rad: float
    epsilon: float

    def __post_init__(self):
        if not (-1e-12 <= self.epsilon <= 1.0):
            raise ValueError(f"epsilon {self.epsilon} outside [0, 1]")


def mode_overlaps(a: EncodedState, b: EncodedState) -> tuple:
    """Per-polarization temporal overlap integrals (T_H, T_V).

    T_H = (1/2) integral sqrt(f_a f_b) dt is the overlap of the two H
    wavepackets; T_V picks up the relative modulation phase,
    T_V = (1/2) integral sqrt(f_a f_b) e^{i(phi_b - phi_a)} dt.
    The full inner product is <a|b> = T_H + T_V.
    """
    if a.grid != b.grid:
        raise ValueError("states live on different grids; resample first")
    root = np.sqrt(a.intensity.values * b.intensity.values)
    t_h = complex(np.trapezoid(root, dx=a.grid.step_ps)) / 2.0
    rel = root * np.exp(1j * (b.phase.values - a.phase.values))
    t_v = complex(np.trapezoid(rel, dx=a.grid.step_ps)) / 2.0
    return t_h, t_v


def overlap(a: EncodedState, b: EncodedState) -> complex:
    """Inner product <a|b> of two encoded states.

    Returns
    -------
    complex
        integral sqrt(f_a f_b) (1 + e^{i(phi_b - phi_a)})/2 dt.
    """
    t_h, t_v = mode_overlaps(a, b)
    return t_h + t_v


def _phase_moment(state: EncodedState) -> complex:
    """M = integral f(t) e^{i phi(t)} dt."""
    vals = state.intensity.values * np.exp(1j * state.phase.values)
    return complex(np.trapezoid(vals, dx=state.grid.step_ps))


def epsilon(state: EncodedState) -> QubitApproximation:
    """Qubit deviation of a state, in closed form.

    The fidelity to the constant-phase state |theta> is
    |<theta|psi>|^2 = |1 + e^{-i theta} M|^2 / 4, maximized at
    theta* = arg M, giving epsilon = 1 - (1 + |M|)^2 / 4.
    """
    m = _phase_moment(state)
    eps = 1.0 - (1.0 + abs(m)) ** 2 / 4.0
    return QubitApproximation(theta_star_rad=float(np.angle(m)), epsilon=max(eps, 0.0))


def epsilon_scan(state: EncodedState, coarse_points: int = 720,
                 tol: float = 1e-12) -> QubitApproximation:
    """Qubit deviation via brute-force maximization over theta.

    Independent check of `epsilon`: evaluates the constant-phase fidelity
    on a theta grid over [-pi, pi) and refines the best point by bounded
    golden-section search.  Agrees with the closed form to better than
    1e-10 on smooth profiles.
    """
    from scipy.optimize import minimize_scalar

    m = _phase_moment(state)

    def neg_fidelity(theta):
        return -abs(1.0 + np.exp(-1j * theta) * m) ** 2 / 4.0

    thetas = np.linspace(-math.pi, math.pi, coarse_points, endpoint=False)
    vals = np.array([neg_fidelity(th) for th in thetas])
    k = int(np.argmin(vals))
    span = 2 * math.pi / coarse_points
    res = minimize_scalar(neg_fidelity, bounds=(thetas[k] - span, thetas[k] + span),
                          method="bounded", options={"xatol": tol})
    best = float(res.x)
    eps = 1.0 + float(neg_fidelity(best))
    return QubitApproximation(theta_star_rad=best, epsilon=max(eps, 0.0))


def average_phase_of_state(state: EncodedState) -> float:
    """Intensity-weighted average phase of the state, in radians."""
    vals = state.intensity.values * state.phase.values
    return float(np.trapezoid(vals, dx=state.grid.step_ps))


def constant_phase_state(intensity: TemporalProfile, phase_rad: float,
                         label=(BASIS_KEY, 0)) -> EncodedState:
    """State with a time-independent phase (an exact qubit, epsilon = 0)."""
    phase = TemporalProfile(grid=intensity.grid,
                            values=np.full(intensity.grid.count, float(phase_rad)),
                            kind=KIND_PHASE)
    return EncodedState(intensity=intensity, phase=phase, label=label)


def make_ideal_bb84(intensity: TemporalProfile) -> list:
    """The four exact BB84 states {0, pi, +pi/2, -pi/2} on one pulse."""
    nominal = [
        (0.0, (BASIS_KEY, 0)),
        (math.pi, (BASIS_KEY, 1)),
        (math.pi / 2.0, (BASIS_CONJ, 0)),
        (-math.pi / 2.0, (BASIS_CONJ, 1)),
    ]
    return [constant_phase_state(intensity, ph, lab) for ph, lab in nominal]


def _resample_shifted(profile: TemporalProfile, grid: TimeGrid, shift_ps: float) -> np.ndarray:
    """Evaluate a profile at grid times + shift with hold-ends extension."""
    src_t = profile.grid.times()
    moved = TimeGrid(start_ps=grid.start_ps + shift_ps, step_ps=grid.step_ps,
                     count=grid.count)
    return spline_resample(src_t, profile.values, moved, extension="hold")


def make_bb84_states(
    pi_profile: TemporalProfile,
    half_pi_profile: TemporalProfile,
    minus_half_pi_profile: TemporalProfile,
    intensity: TemporalProfile,
    alignment: str = ALIGN_FIXED,
    fixed_offset_ps: float = 135.0,
) -> list:
    """Build the four signal states from measured or synthesized profiles.

    Key bit 0 is unmodulated (phi = 0); key bit 1 uses the pi profile;
    the conjugate bits use the +/- pi/2 profiles.  The optical pulse is
    placed on the profiles' time axis according to the alignment
    strategy, and each phase profile is spline-resampled onto the
    intensity grid in the pulse frame.

    Parameters
    ----------
    pi_profile, half_pi_profile, minus_half_pi_profile : TemporalProfile
        Phase profiles (rad) on their native (possibly finer) grids.
    intensity : TemporalProfile
        Normalized optical pulse on the analysis grid.
    alignment : str
        "fixed" (default), "centroid", or "max_fidelity"; see
        `profiles.align_profiles`.
    fixed_offset_ps : float
        Pulse-center position for the "fixed" strategy.

    Returns
    -------
    list of EncodedState
        [key0, key1, conj0, conj1].
    """
    grid = intensity.grid

    def eps_at_shift(shift):
        vals = _resample_shifted(pi_profile, grid, shift)
        phase = TemporalProfile(grid=grid, values=vals, kind=KIND_PHASE)
        return epsilon(EncodedState(intensity=intensity, phase=phase)).epsilon

    offset = align_profiles(pi_profile, intensity, strategy=alignment,
                            fixed_offset_ps=fixed_offset_ps, epsilon_fn=eps_at_shift)

    def shifted_state(profile, label):
        vals = _resample_shifted(profile, grid, offset)
        phase = TemporalProfile(grid=grid, values=vals, kind=KIND_PHASE)
        return EncodedState(intensity=intensity, phase=phase, label=label)

    return [
        constant_phase_state(intensity, 0.0, (BASIS_KEY, 0)),
        shifted_state(pi_profile, (BASIS_KEY, 1)),
        shifted_state(half_pi_profile, (BASIS_CONJ, 0)),
        shifted_state(minus_half_pi_profile, (BASIS_CONJ, 1)),
    ]


def joint_index_map() -> list:
    """Joint labels (x_A, i_A, x_B, i_B), lexicographic, Key = 0 < Conj = 1."""
    labels = []
    for x_a in (BASIS_KEY, BASIS_CONJ):
        for i_a in (0, 1):
            for x_b in (BASIS_KEY, BASIS_CONJ):
                for i_b in (0, 1):
                    labels.append((x_a, i_a, x_b, i_b))
    return labels


def key_combo_indices() -> list:
    """Joint indices with both parties in the key basis."""
    return [k for k, (xa, _, xb, _) in enumerate(joint_index_map())
            if xa == BASIS_KEY and xb == BASIS_KEY]


def equal_bit_key_indices() -> list:
    """Key-basis joint indices with equal encoded bits."""
    return [k for k, (xa, ia, xb, ib) in enumerate(joint_index_map())
            if xa == BASIS_KEY and xb == BASIS_KEY and ia == ib]


def opposite_bit_key_indices() -> list:
    """Key-basis joint indices with opposite encoded bits."""
    return [k for k, (xa, ia, xb, ib) in enumerate(joint_index_map())
            if xa == BASIS_KEY and xb == BASIS_KEY and ia != ib]


@dataclass(frozen=True)
class GramMatrix:
    """Hermitian matrix of pairwise overlaps between joint states.

    Parameters
    ----------
    entries : numpy.ndarray
        Complex (dim, dim) array, Hermitian, PSD, unit diagonal.
    index_map : list
        Joint label per row/column.
    """

    entries: np.ndarray = field(repr=False)
    index_map: list = field(default_factory=joint_index_map)

    def __post_init__(self):
        g = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", g)
        n = g.shape[0]
        if g.shape != (n, n) or n != len(self.index_map):
            raise ValueError(f"entries shape {g.shape} inconsistent with index map")
        if np.max(np.abs(g - g.conj().T)) > 1e-9:
            raise ValueError("Gram matrix is not Hermitian")
        if np.max(np.abs(np.diag(g) - 1.0)) > 1e-9:
            raise ValueError("Gram matrix diagonal is not 1")
        min_eig = float(np.linalg.eigvalsh((g + g.conj().T) / 2.0)[0])
        if min_eig < -1e-8:
            raise ValueError(f"Gram matrix not PSD (min eigenvalue {min_eig})")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def numerical_rank(self, cutoff: float = 1e-9) -> int:
        """Count of eigenvalues above the cutoff."""
        eigs = np.linalg.eigvalsh((self.entries + self.entries.conj().T) / 2.0)
        return int(np.sum(eigs > cutoff))


def joint_gram(alice: list, bob: list) -> GramMatrix:
    """Joint Alice (x) Bob Gram matrix of the 16 signal combinations.

    Entry [(a', b'), (a, b)] factorizes into
    overlap(A_{a'}, A_a) * overlap(B_{b'}, B_b).
    """
    if len(alice) != 4 or len(bob) != 4:
        raise ValueError("need 4 states per party")
    s_a = np.array([[overlap(alice[i], alice[j]) for j in range(4)] for i in range(4)])
    s_b = np.array([[overlap(bob[i], bob[j]) for j in range(4)] for i in range(4)])
    return GramMatrix(entries=np.kron(s_a, s_b), index_map=joint_index_map())
