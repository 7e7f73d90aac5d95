"""Unambiguous state discrimination (USD) for small families of pure states.

If an adversary can delay the classical basis announcement, a source
whose four signal states are linearly independent (which happens exactly
when the modulation flaw epsilon > 0) is vulnerable to USD: a
measurement that sometimes fails, but never misidentifies.  This module
builds such measurements for n <= d <= 16 linearly independent pure
states via reciprocal (biorthogonal) states:

    Psi = [psi_1 ... psi_n],   tilde(Psi) = Psi (Psi^dag Psi)^{-1},

so that <tilde_j|psi_k> = delta_jk.  The rank-one elements
E_k = c |tilde_k><tilde_k| identify state k with probability c and never
click on the others; the largest uniform c keeping the inconclusive
element I - sum E_k positive semidefinite is found by bisection.

`exclusion_projector` builds the cheaper one-sided measurement that
projects onto the orthocomplement of all states but one: for the flawed
three-state family below it identifies the modulated key state with
probability exactly epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MAX_DIM",
    "FiniteState",
    "PovmElement",
    "flawed_three_state",
    "linear_independence",
    "gram",
    "usd_povm",
    "exclusion_projector",
    "success_matrix",
]

MAX_DIM = 16


@dataclass(frozen=True)
class FiniteState:
    """A normalized pure state in C^d, d <= 16.

    Parameters
    ----------
    vector : numpy.ndarray
        Complex amplitudes; must have unit norm within 1e-9.
    label : str
        Free-form name used in reports.
    """

    vector: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex)
        object.__setattr__(self, "vector", v)
        if v.ndim != 1:
            raise ValueError("state vector must be one-dimensional")
        if v.size < 1 or v.size > MAX_DIM:
            raise ValueError(f"dimension {v.size} outside [1, {MAX_DIM}]")
        if not np.all(np.isfinite(v)):
            raise ValueError("state vector has non-finite entries")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state vector norm {norm} is not 1")

    @property
    def dim(self) -> int:
        return self.vector.size


@dataclass(frozen=True)
class PovmElement:
    """A Hermitian PSD operator with spectrum in [0, 1]."""

    matrix: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("POVM element must be square")
        if np.max(np.abs(m - m.conj().T)) > 1e-9:
            raise ValueError("POVM element is not Hermitian")
        eigs = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
        if eigs[0] < -1e-10 or eigs[-1] > 1.0 + 1e-10:
            raise ValueError(f"POVM element spectrum [{eigs[0]}, {eigs[-1]}] outside [0, 1]")

    def probability(self, state: FiniteState) -> float:
        """Outcome probability <psi|E|psi>."""
        v = state.vector
        return float(np.real(v.conj() @ self.matrix @ v))


def flawed_three_state(eps: float) -> list:
    """Three-state family distinguishing a flawed pi-modulated signal.

    The unmodulated key state |0'>, the flawed modulated key state
    |1'> = sqrt(1-eps)|1> + sqrt(eps)|2> (the |2> component is the
    leakage out of the qubit span), and the conjugate-basis state
    (|0> + |1>)/sqrt(2).  For eps = 0 the family is linearly dependent
    and USD of |1'> is impossible; any eps > 0 restores independence.

    Parameters
    ----------
    eps : float
        Qubit deviation of the modulated state, in [0, 1).
    """
    if not (0.0 <= eps < 1.0):
        raise ValueError(f"eps {eps} outside [0, 1)")
    v0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    v1 = np.array([0.0, math.sqrt(1.0 - eps), math.sqrt(eps)], dtype=complex)
    v2 = np.array([1.0, 1.0, 0.0], dtype=complex) / math.sqrt(2.0)
    return [
        FiniteState(vector=v0, label="key0"),
        FiniteState(vector=v1, label="key1_flawed"),
        FiniteState(vector=v2, label="conj"),
    ]


def gram(states: list) -> np.ndarray:
    """Gram matrix <psi_j|psi_k> of a state family."""
    n = len(states)
    g = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            g[j, k] = np.vdot(states[j].vector, states[k].vector)
    return g


def linear_independence(states: list, cutoff: float = 1e-10) -> bool:
    """Whether the family is linearly independent.

    Checked via the smallest eigenvalue of the Gram matrix, which is
    zero exactly on dependent families.
    """
    if not states:
        raise ValueError("empty state family")
    dims = {s.dim for s in states}
    if len(dims) != 1:
        raise ValueError("states live in different dimensions")
    if len(states) > states[0].dim:
        return False
    g = gram(states)
    return float(np.linalg.eigvalsh(g)[0]) > cutoff


def _reciprocal_states(states: list) -> np.ndarray:
    """Columns tilde_k with <tilde_j|psi_k> = delta_jk."""
    psi = np.column_stack([s.vector for s in states])
    g = psi.conj().T @ psi
    return psi @ np.linalg.inv(g)


def usd_povm(states: list, bisection_steps: int = 60) -> list:
    """Equal-success unambiguous discrimination POVM.

    Returns n + 1 elements: E_k identifies state k and never clicks on
    the others; the last element ("inconclusive") absorbs the remaining
    weight.  The common success probability is the largest scale c such
    that I - c * sum_k |tilde_k><tilde_k| stays PSD, located by bisection
    on [0, 1].

    Raises
    ------
    ValueError
        If the family is linearly dependent (USD impossible).
    """
    if not linear_independence(states):
        raise ValueError("states are linearly dependent; USD is impossible")
    d = states[0].dim
    tilde = _reciprocal_states(states)
    total = np.zeros((d, d), dtype=complex)
    rank_ones = []
    for k in range(len(states)):
        t = tilde[:, k]
        op = np.outer(t, t.conj())
        rank_ones.append(op)
        total += op

    def psd_at(c):
        rest = np.eye(d) - c * total
        return float(np.linalg.eigvalsh((rest + rest.conj().T) / 2.0)[0]) >= -1e-12

    lo, hi = 0.0, 1.0
    if psd_at(hi):
        lo = hi
    else:
        for _ in range(bisection_steps):
            mid = 0.5 * (lo + hi)
            if psd_at(mid):
                lo = mid
            else:
                hi = mid
    c = lo
    elements = [PovmElement(matrix=c * op, label=f"identify_{states[k].label or k}")
                for k, op in enumerate(rank_ones)]
    fail = np.eye(d) - c * total
    fail = (fail + fail.conj().T) / 2.0
    # Clip the tiny negative eigenvalue left by the bisection tolerance.
    eigs, vecs = np.linalg.eigh(fail)
    fail = (vecs * np.clip(eigs, 0.0, None)) @ vecs.conj().T
    elements.append(PovmElement(matrix=fail, label="inconclusive"))
    return elements


def exclusion_projector(states: list, target: int) -> PovmElement:
    """Projector onto the orthocomplement of all states except the target.

    A click identifies the target state unambiguously; the success
    probability is <psi_target|P|psi_target>.  For `flawed_three_state`
    with target 1 this equals eps exactly.
    """
    if not (0 <= target < len(states)):
        raise ValueError(f"target {target} out of range")
    d = states[0].dim
    others = np.column_stack([s.vector for k, s in enumerate(states) if k != target])
    q, _ = np.linalg.qr(others)
    proj = np.eye(d) - q @ q.conj().T
    proj = (proj + proj.conj().T) / 2.0
    eigs, vecs = np.linalg.eigh(proj)
    proj = (vecs * np.clip(eigs, 0.0, 1.0)) @ vecs.conj().T
    return PovmElement(matrix=proj, label=f"exclude_all_but_{states[target].label or target}")


def success_matrix(states: list, elements: list) -> np.ndarray:
    """p[k, j] = probability of outcome k when state j was sent."""
    n, m = len(elements), len(states)
    p = np.empty((n, m))
    for k in range(n):
        for j in range(m):
            p[k, j] = elements[k].probability(states[j])
    return p
