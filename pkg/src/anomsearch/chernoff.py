"""The randomized Chernoff test baseline.

For each hypothesis, the test precomputes the maximin action distribution
over the C(M,K) probe sets: the mixed strategy whose next observation best
separates that hypothesis from its closest alternative in expected
log-likelihood ratio.  At run time it samples a probe set from the
distribution attached to the current maximum-likelihood hypothesis; the
stopping and decision rules are shared with the deterministic policy.

The maximin problem is a zero-sum matrix game solved exactly with a small
dense simplex using Bland's rule (deterministic and cycling-proof).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .policy import ProblemInstance
from .state import SearchState

WEIGHT_SUM_TOL = 1e-10


class DegenerateGameError(ValueError):
    """Some hypothesis pair is indistinguishable under every action."""


@dataclass(frozen=True)
class ActionDistribution:
    """Maximin mixed strategy over probe sets for one hypothesis."""

    actions: tuple[tuple[int, ...], ...]
    weights: np.ndarray
    value: float

    def __post_init__(self) -> None:
        if abs(float(self.weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("action weights must sum to 1")
        if self.value < 0.0:
            raise ValueError("maximin value must be nonnegative")


def enumerate_actions(m: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All K-subsets of cells in lexicographic order."""
    return tuple(combinations(range(m), k))


def pairwise_kl(inst: ProblemInstance, action: Sequence[int], m: int, j: int) -> float:
    """KL divergence between the joint observation of ``action`` under
    hypothesis m versus hypothesis j (single-target hypotheses).

    Observations from distinct cells are independent, and only the cells
    whose marginals differ between the two hypotheses contribute: cell m if
    probed (D(g_m||f_m)) and cell j if probed (D(f_j||g_j)).
    """
    if m == j:
        raise ValueError("hypotheses must differ")
    return _pairwise_kl_sets(inst, action, frozenset((m,)), frozenset((j,)))


def _pairwise_kl_sets(
    inst: ProblemInstance,
    action: Sequence[int],
    truth: frozenset[int],
    other: frozenset[int],
) -> float:
    total = 0.0
    for i in action:
        if i in truth and i not in other:
            total += inst.d_gf[i]
        elif i in other and i not in truth:
            total += inst.d_fg[i]
    return total


def _solve_game(payoff: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximin value and optimal row mixture of a nonnegative matrix game.

    The row player picks a distribution q over rows to maximize
    min_col (q @ payoff).  Requires a positive game value; solved through
    the bounded companion program max sum(y) s.t. payoff @ y <= 1, y >= 0,
    whose optimal row duals give the (unnormalized) maximin mixture.
    """
    payoff = np.asarray(payoff, dtype=float)
    nrow, ncol = payoff.shape
    if np.any(payoff.max(axis=0) <= 0.0):
        raise DegenerateGameError(
            "zero maximin value: some alternative is indistinguishable under every action"
        )
    tol = 1e-9 * max(1.0, float(payoff.max()))

    # tableau [A | I | b] with slack basis; objective maximizes sum(y)
    T = np.zeros((nrow, ncol + nrow + 1))
    T[:, :ncol] = payoff
    T[:, ncol : ncol + nrow] = np.eye(nrow)
    T[:, -1] = 1.0
    cost = np.zeros(ncol + nrow)
    cost[:ncol] = 1.0
    basis = list(range(ncol, ncol + nrow))

    while True:
        cb = cost[basis]
        reduced = cost - cb @ T[:, :-1]
        entering = -1
        for j in range(ncol + nrow):  # Bland: smallest eligible index
            if reduced[j] > tol:
                entering = j
                break
        if entering < 0:
            break
        col = T[:, entering]
        best_row, best_ratio = -1, math.inf
        for i in range(nrow):
            if col[i] > tol:
                ratio = T[i, -1] / col[i]
                if ratio < best_ratio - tol or (
                    abs(ratio - best_ratio) <= tol
                    and (best_row < 0 or basis[i] < basis[best_row])
                ):
                    best_row, best_ratio = i, ratio
        if best_row < 0:
            raise DegenerateGameError("unbounded companion program: game value is zero")
        pivot = T[best_row, entering]
        T[best_row] /= pivot
        for i in range(nrow):
            if i != best_row and T[i, entering] != 0.0:
                T[i] -= T[i, entering] * T[best_row]
        basis[best_row] = entering

    cb = cost[basis]
    x = cb @ T[:, ncol : ncol + nrow]  # row duals = unnormalized row mixture
    x = np.where(x > 0.0, x, 0.0)
    total = float(x.sum())
    if total <= 0.0:
        raise DegenerateGameError("zero maximin value")
    q = x / total
    value = float(min(q @ payoff[:, j] for j in range(ncol)))
    return value, q


def _alternatives(inst: ProblemInstance, hyp: tuple[int, ...]) -> list[tuple[int, ...]]:
    return [h for h in inst.hypotheses if h != hyp]


def solve_maximin_hypothesis(
    inst: ProblemInstance, hyp: tuple[int, ...]
) -> ActionDistribution:
    """Maximin action distribution separating ``hyp`` from all alternatives."""
    actions = enumerate_actions(inst.M, inst.K)
    truth = frozenset(hyp)
    alts = _alternatives(inst, hyp)
    payoff = np.array(
        [
            [_pairwise_kl_sets(inst, a, truth, frozenset(alt)) for alt in alts]
            for a in actions
        ]
    )
    value, q = _solve_game(payoff)
    return ActionDistribution(actions=actions, weights=q, value=value)


def solve_maximin(inst: ProblemInstance, m: int) -> ActionDistribution:
    """Maximin action distribution for single-target hypothesis m."""
    return solve_maximin_hypothesis(inst, (m,))


def ensure_action_distributions(
    inst: ProblemInstance,
) -> dict[tuple[int, ...], tuple[ActionDistribution, np.ndarray]]:
    """Solve (once) and cache the per-hypothesis distributions on the instance.

    Each entry also carries the cumulative weights used for categorical
    sampling; the cache is immutable after this call and shareable.
    """
    if inst._chernoff is None:
        table = {}
        for hyp in inst.hypotheses:
            ad = solve_maximin_hypothesis(inst, hyp)
            cum = np.cumsum(ad.weights)
            cum[-1] = 1.0
            table[hyp] = (ad, cum)
        inst._chernoff = table
    return inst._chernoff


def ml_estimate(state: SearchState) -> int:
    """Maximum-likelihood cell: argmax of the sum LLRs, ties to lowest index.

    Valid because all hypotheses' log-likelihoods differ from a common
    baseline exactly by the per-cell sum LLR.
    """
    return int(state.ranking[0])


def ml_estimate_set(state: SearchState, l: int) -> tuple[int, ...]:
    """Maximum-likelihood L-subset: the top-L ranked cells."""
    return tuple(sorted(int(i) for i in state.ranking[:l]))


def select_chernoff(
    state: SearchState, inst: ProblemInstance, rng: np.random.Generator
) -> tuple[int, ...]:
    """Draw one probe set from the distribution of the current ML hypothesis."""
    table = ensure_action_distributions(inst)
    hyp = ml_estimate_set(state, inst.L)
    ad, cum = table[hyp]
    i = int(np.searchsorted(cum, rng.random(), side="right"))
    return ad.actions[i]


def rate_chernoff(inst: ProblemInstance, m: int) -> float:
    """Gap growth rate of the Chernoff test under single-target hypothesis m:
    the maximin value min over alternatives of the q*-averaged pairwise KL."""
    ad = solve_maximin(inst, m)
    return ad.value


def rate_chernoff_aggregate(inst: ProblemInstance) -> float:
    """Prior-weighted harmonic mean of the per-hypothesis maximin values."""
    table = ensure_action_distributions(inst)
    vals = np.array([table[h][0].value for h in inst.hypotheses])
    return float(1.0 / np.sum(inst.priors / vals))
