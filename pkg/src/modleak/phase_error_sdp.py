"""Certified phase-error-rate bound via a reduced Gram-matrix SDP.

Security of the key reduces to bounding the phase error rate e_ph of the
single-photon-pair events.  The adversary's freedom is the Gram matrix
G_P of her post-announcement states for the 16 joint signal choices,
constrained by what she cannot change:

  * G_P >= 0 (it is a Gram matrix),
  * G_AB - G_P >= 0: the pass/fail decomposition of the source Gram
    G_AB into announcement blocks forces the fail block G_AB - G_P to be
    a Gram matrix too (the cross block enters no constraint and may be
    taken zero without loss of generality, halving the PSD dimension),
  * lower[s] <= G_P[s, s] <= upper[s]: the diagonal entries are the
    per-combination pass probabilities, bracketed by the decoy bounds.

e_ph is an affine function of two coherences of G_P.  In this encoding
the Psi+ announcement anti-correlates the virtual conjugate-basis
measurement, so with N = Re(G_P[k00,k11] + G_P[k01,k10]) (key-combo
index pairs), e_ph = 1/2 + N / D with D the key-basis pass total.  The
solver MAXIMIZES N over the feasible set and reports the certified dual
bound N_cert >= max N, giving

    e_ph_upper = clamp(1/2 + N_cert / D, 0, 1/2),

with D = sum of key-combo lower bounds when N_cert >= 0 and the sum of
upper bounds when N_cert < 0 (either choice keeps the quotient an upper
bound for any true pass total inside the intervals).  Reporting the dual
side means a solver that stops early can only overstate e_ph, never
understate it.

The complex PSD cones are realized through the real symmetric embedding
H -> [[Re H, -Im H], [Im H, Re H]] and handed to a dense primal-dual
interior-point solver (cvxopt).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from cvxopt import matrix as _cvxmat
from cvxopt import solvers as _solvers

from .decoy import PassBounds
from .qstate import GramMatrix, key_combo_indices

__all__ = [
    "STATUS_OPTIMAL",
    "STATUS_INFEASIBLE",
    "STATUS_NUMERICAL_LIMIT",
    "SdpProblem",
    "SdpSolution",
    "assemble",
    "solve",
    "solution_json",
]

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_NUMERICAL_LIMIT = "numerical_limit"

_DEFAULT_COHERENCE_PAIRS = ((0, 5), (1, 4))


@dataclass(frozen=True)
class SdpProblem:
    """Data of one reduced phase-error SDP instance.

    Parameters
    ----------
    g_ab : GramMatrix
        Source Gram matrix of the joint signal states.
    bounds : PassBounds
        Diagonal intervals for the pass block.
    key_combos : tuple
        Indices entering the denominator D (both parties in the key basis).
    coherence_pairs : tuple
        Off-diagonal (i, j) positions whose summed real part is N.
    """

    g_ab: GramMatrix
    bounds: PassBounds
    key_combos: tuple = (0, 1, 4, 5)
    coherence_pairs: tuple = _DEFAULT_COHERENCE_PAIRS

    def __post_init__(self):
        n = self.g_ab.dim
        if self.bounds.n_combos != n:
            raise ValueError(f"bounds cover {self.bounds.n_combos} combos, Gram has {n}")
        for k in self.key_combos:
            if not (0 <= k < n):
                raise ValueError(f"key combo index {k} out of range")
        for i, j in self.coherence_pairs:
            if not (0 <= i < j < n):
                raise ValueError(f"coherence pair ({i}, {j}) must satisfy 0 <= i < j < n")

    @property
    def dim(self) -> int:
        return self.g_ab.dim


@dataclass(frozen=True)
class SdpSolution:
    """Result of one solve; e_ph_upper always comes from the dual side."""

    e_ph_upper: float
    primal_objective: float
    dual_objective: float
    duality_gap: float
    status: str
    iterations: int = 0

    def __post_init__(self):
        if not (0.0 <= self.e_ph_upper <= 0.5):
            raise ValueError(f"e_ph_upper {self.e_ph_upper} outside [0, 0.5]")
        if self.duality_gap < -1e-9:
            raise ValueError(f"duality gap {self.duality_gap} < -1e-9")
        if self.status not in (STATUS_OPTIMAL, STATUS_INFEASIBLE, STATUS_NUMERICAL_LIMIT):
            raise ValueError(f"unknown status {self.status!r}")


def assemble(g_ab: GramMatrix, bounds: PassBounds, key_combos: tuple = None,
             coherence_pairs: tuple = None) -> SdpProblem:
    """Bundle Gram matrix and bounds into a problem instance.

    For the standard 16-dimensional joint Gram the key combos and
    coherence pairs default to the key-basis block; smaller test
    instances must name them explicitly.
    """
    if g_ab.dim == 16:
        if key_combos is None:
            key_combos = tuple(key_combo_indices())
        if coherence_pairs is None:
            coherence_pairs = _DEFAULT_COHERENCE_PAIRS
    elif key_combos is None or coherence_pairs is None:
        raise ValueError("non-16-dimensional instances need explicit key_combos "
                         "and coherence_pairs")
    return SdpProblem(g_ab=g_ab, bounds=bounds, key_combos=tuple(key_combos),
                      coherence_pairs=tuple(coherence_pairs))


def _hermitian_basis(n: int) -> list:
    """Real parametrization of Hermitian n x n: diagonals, then re/im pairs."""
    params = [(i, i, "diag") for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            params.append((i, j, "re"))
            params.append((i, j, "im"))
    return params


def _embed(h: np.ndarray) -> np.ndarray:
    """Complex Hermitian -> real symmetric of twice the size."""
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


_BASIS_CACHE = {}


def _cone_matrices(n: int):
    """Columns of the two PSD cone maps for dimension n (cached)."""
    if n in _BASIS_CACHE:
        return _BASIS_CACHE[n]
    params = _hermitian_basis(n)
    gs_pos = np.zeros((4 * n * n, len(params)))
    gs_cap = np.zeros((4 * n * n, len(params)))
    for k, (i, j, kind) in enumerate(params):
        basis = np.zeros((n, n), dtype=complex)
        if kind == "diag":
            basis[i, i] = 1.0
        elif kind == "re":
            basis[i, j] = 1.0
            basis[j, i] = 1.0
        else:
            basis[i, j] = 1j
            basis[j, i] = -1j
        emb = _embed(basis)
        gs_pos[:, k] = (-emb).ravel(order="F")
        gs_cap[:, k] = emb.ravel(order="F")
    _BASIS_CACHE[n] = (params, gs_pos, gs_cap)
    return _BASIS_CACHE[n]


def _denominator(problem: SdpProblem, n_cert: float) -> float:
    keys = list(problem.key_combos)
    if n_cert >= 0.0:
        return float(problem.bounds.lower[keys].sum())
    return float(problem.bounds.upper[keys].sum())


def _e_ph_from_cert(problem: SdpProblem, n_cert: float) -> float:
    d = _denominator(problem, n_cert)
    if d <= 0.0:
        return 0.5
    return min(max(0.5 + n_cert / d, 0.0), 0.5)


def solve(problem: SdpProblem, tol: float = 1e-7) -> SdpSolution:
    """Maximize the coherence sum N and certify its dual upper bound.

    Parameters
    ----------
    problem : SdpProblem
    tol : float
        Duality-gap requirement for status "optimal"; looser solves are
        demoted to "numerical_limit" but still report the sound dual
        value.

    Returns
    -------
    SdpSolution
        `primal_objective`/`dual_objective` are values of N (primal is
        the achieved value, dual the certified bound, dual >= primal).
    """
    n = problem.dim
    g = problem.g_ab.entries
    lower = problem.bounds.lower
    upper = problem.bounds.upper

    diag = np.real(np.diag(g))
    if np.any(lower > diag + 1e-9):
        # G_P[s,s] <= G_AB[s,s] is forced by G_AB - G_P >= 0.
        return SdpSolution(e_ph_upper=0.5, primal_objective=0.0, dual_objective=0.0,
                           duality_gap=0.0, status=STATUS_INFEASIBLE)
    d_lower = float(lower[list(problem.key_combos)].sum())
    if d_lower <= 0.0:
        # No certified key-basis passes: zero-data convention.
        return SdpSolution(e_ph_upper=0.5, primal_objective=0.0, dual_objective=0.0,
                           duality_gap=0.0, status=STATUS_NUMERICAL_LIMIT)

    params, gs_pos, gs_cap = _cone_matrices(n)
    cost = np.zeros(len(params))
    for k, (i, j, kind) in enumerate(params):
        if kind == "re" and (i, j) in problem.coherence_pairs:
            cost[k] = -1.0  # cvxopt minimizes; we want to maximize N.

    n_lin = 2 * n
    gl = np.zeros((n_lin, len(params)))
    hl = np.zeros(n_lin)
    for s in range(n):
        gl[s, s] = 1.0
        hl[s] = upper[s]
        gl[n + s, s] = -1.0
        hl[n + s] = -lower[s]

    def attempt(options):
        saved = dict(_solvers.options)
        _solvers.options.clear()
        _solvers.options.update(options)
        try:
            result = _solvers.sdp(
                _cvxmat(cost), Gl=_cvxmat(gl), hl=_cvxmat(hl),
                Gs=[_cvxmat(gs_pos), _cvxmat(gs_cap)],
                hs=[_cvxmat(np.zeros((2 * n, 2 * n))), _cvxmat(_embed(g))])
        except (ZeroDivisionError, ArithmeticError, ValueError):
            # Interior-point scaling can break down at extreme tolerances.
            return None
        finally:
            _solvers.options.clear()
            _solvers.options.update(saved)
        if result["primal objective"] is None or result["dual objective"] is None:
            if result["status"] != "primal infeasible":
                return None
        return result

    def gap_of(result):
        return float(result["primal objective"]) - float(result["dual objective"])

    sol = attempt({"show_progress": False, "maxiters": 200})
    if sol is None or sol["status"] != "optimal" or gap_of(sol) > tol:
        # Retry with tighter stopping criteria; keep whichever certifies.
        retry = attempt({"show_progress": False, "maxiters": 200,
                         "abstol": min(tol * 1e-2, 1e-9),
                         "reltol": min(tol * 1e-2, 1e-9), "feastol": 1e-8})
        if retry is not None and retry["status"] == "optimal" \
                and gap_of(retry) <= tol:
            sol = retry
        elif sol is None:
            sol = retry
    if sol is None:
        return SdpSolution(e_ph_upper=0.5, primal_objective=0.0, dual_objective=0.0,
                           duality_gap=0.0, status=STATUS_NUMERICAL_LIMIT)

    cvx_status = sol["status"]
    if cvx_status == "primal infeasible":
        return SdpSolution(e_ph_upper=0.5, primal_objective=0.0, dual_objective=0.0,
                           duality_gap=0.0, status=STATUS_INFEASIBLE)

    # Map back to N-space: primal achieved N, dual certified N bound.
    n_primal = -float(sol["primal objective"])
    n_cert = -float(sol["dual objective"])
    gap = n_cert - n_primal  # equals cvxopt primal minus dual objective
    status = STATUS_OPTIMAL if (cvx_status == "optimal" and gap <= tol) \
        else STATUS_NUMERICAL_LIMIT
    return SdpSolution(
        e_ph_upper=_e_ph_from_cert(problem, n_cert),
        primal_objective=n_primal,
        dual_objective=n_cert,
        duality_gap=max(gap, -1e-9),
        status=status,
        iterations=int(sol.get("iterations", 0)),
    )


def solution_json(problem: SdpProblem, solution: SdpSolution) -> str:
    """Audit record of one solve (objective, bounds, gap, iterations)."""
    record = {
        "e_ph_upper": solution.e_ph_upper,
        "primal_objective": solution.primal_objective,
        "dual_objective": solution.dual_objective,
        "duality_gap": solution.duality_gap,
        "status": solution.status,
        "iterations": solution.iterations,
        "denominator": _denominator(problem, solution.dual_objective),
        "key_combos": list(problem.key_combos),
        "coherence_pairs": [list(p) for p in problem.coherence_pairs],
        "bounds_lower": problem.bounds.lower.tolist(),
        "bounds_upper": problem.bounds.upper.tolist(),
    }
    return json.dumps(record, indent=2)
