"""Problem instances and the deterministic divergence-guided probe policy.

The policy ("dgfi") is driven entirely by the per-cell divergence pair
D(g||f), D(f||g): at each step it probes the block of consecutively ranked
cells whose observations grow the stopping statistic -- the gap between the
L-th and (L+1)-th largest sum LLRs -- at the fastest asymptotic rate.  It
stops once that gap reaches -log(c), where c is the per-observation cost,
and declares the top-L ranked cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .distributions import ProcessModel
from .state import SearchState, delta_s

PRIOR_SUM_TOL = 1e-12


class InstanceError(ValueError):
    """Invalid problem-instance parameters."""


@dataclass(frozen=True)
class RateProfile:
    """Asymptotic drift rates conditioned on a candidate anomalous set D.

    ``f_bar`` is the pooled decrease rate of the leading non-anomalous sum
    LLR when a single probe rotates over the complement of D (the harmonic
    sum of their D(f||g)); ``min_fg`` caps it once the slowest cell in the
    complement becomes the bottleneck, and ``k_tilde`` = min_fg/f_bar is the
    probe budget at which that cap starts to bind.  ``g_bar``/``min_gf`` are
    the mirror quantities for probes spent inside D.
    """

    f_bar: float
    min_fg: float
    k_tilde: float
    g_bar: float
    min_gf: float

    def f_at(self, kappa: float) -> float:
        """Decrease rate of the leading complement cell with kappa probes."""
        if kappa < 0:
            raise InstanceError(f"kappa must be nonnegative, got {kappa}")
        return min(kappa * self.f_bar, self.min_fg)

    def g_at(self, kappa: float) -> float:
        """Increase rate of the trailing cell of D with kappa probes."""
        if kappa < 0:
            raise InstanceError(f"kappa must be nonnegative, got {kappa}")
        return min(kappa * self.g_bar, self.min_gf)


@dataclass(frozen=True)
class PolicyAction:
    """Either continue probing ``cells`` (size K) or stop and declare them (size L)."""

    kind: str  # "continue" | "stop"
    cells: tuple[int, ...]


class ProblemInstance:
    """A complete search problem: cells, probe budget K, target count L, cost c.

    Hypotheses are the L-subsets of cells (plain cells when L == 1), listed
    in lexicographic order.  ``priors`` may be omitted (uniform), given per
    hypothesis, or -- for L > 1 -- given as M per-cell weights from which
    subset priors are formed proportionally to the product of member
    weights.  Instances are read-only after construction and safe to share;
    derived rate profiles are cached per conditioning set.
    """

    def __init__(
        self,
        models: Sequence[ProcessModel],
        K: int = 1,
        L: int = 1,
        c: float = 1e-3,
        priors: Sequence[float] | None = None,
    ) -> None:
        models = tuple(models)
        m = len(models)
        if m < 2:
            raise InstanceError(f"need at least 2 cells, got M={m}")
        if not 1 <= K < m:
            raise InstanceError(f"probe budget must satisfy 1 <= K < M, got K={K}, M={m}")
        if not 1 <= L < m:
            raise InstanceError(f"target count must satisfy 1 <= L < M, got L={L}, M={m}")
        if not 0.0 < c < 1.0:
            raise InstanceError(f"observation cost must lie in (0, 1), got c={c}")
        self.models = models
        self.M = m
        self.K = int(K)
        self.L = int(L)
        self.c = float(c)
        self.threshold = -math.log(self.c)
        self.d_gf = np.array([mod.d_gf for mod in models], dtype=float)
        self.d_fg = np.array([mod.d_fg for mod in models], dtype=float)
        if L == 1:
            self.hypotheses: tuple[tuple[int, ...], ...] = tuple((i,) for i in range(m))
        else:
            self.hypotheses = tuple(combinations(range(m), L))
        self.priors = self._resolve_priors(priors)
        self._profiles: dict[tuple[int, ...], RateProfile] = {}
        self._chernoff = None  # filled lazily by the chernoff module

    def _resolve_priors(self, priors: Sequence[float] | None) -> np.ndarray:
        n_hyp = len(self.hypotheses)
        if priors is None:
            return np.full(n_hyp, 1.0 / n_hyp)
        arr = np.asarray(priors, dtype=float)
        if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
            raise InstanceError("priors must be strictly positive and finite")
        if self.L > 1 and arr.shape[0] == self.M:
            # per-cell weights: subset prior proportional to the product of members
            arr = np.array([np.prod(arr[list(h)]) for h in self.hypotheses])
            return arr / arr.sum()
        if arr.shape[0] != n_hyp:
            raise InstanceError(
                f"priors must have length {n_hyp} (per hypothesis)"
                + (f" or {self.M} (per-cell weights)" if self.L > 1 else "")
                + f", got {arr.shape[0]}"
            )
        if abs(arr.sum() - 1.0) > PRIOR_SUM_TOL:
            raise InstanceError(f"priors must sum to 1 within {PRIOR_SUM_TOL}, got {arr.sum()!r}")
        return arr / arr.sum()

    def profile(self, subset: Iterable[int]) -> RateProfile:
        """Rate profile conditioned on ``subset`` being the anomalous set."""
        key = tuple(sorted(subset))
        prof = self._profiles.get(key)
        if prof is not None:
            return prof
        inside = set(key)
        if not inside or not inside.issubset(range(self.M)) or len(inside) >= self.M:
            raise InstanceError(f"conditioning set {key} must be a proper nonempty subset of cells")
        comp = [j for j in range(self.M) if j not in inside]
        d_out = self.d_fg[comp]
        d_in = self.d_gf[list(key)]
        if np.any(d_out == 0.0) or np.any(d_in == 0.0):
            raise InstanceError(
                "degenerate instance: some cell has zero divergence between its "
                "normal and anomalous distributions"
            )
        min_fg = float(d_out.min())
        f_bar = float(1.0 / np.sum(1.0 / d_out))
        min_gf = float(d_in.min())
        g_bar = float(1.0 / np.sum(1.0 / d_in))
        prof = RateProfile(
            f_bar=f_bar,
            min_fg=min_fg,
            k_tilde=float(np.sum(min_fg / d_out)),
            g_bar=g_bar,
            min_gf=min_gf,
        )
        self._profiles[key] = prof
        return prof

    def with_cost(self, c: float) -> "ProblemInstance":
        """Clone this instance with a different per-observation cost."""
        clone = ProblemInstance(self.models, K=self.K, L=self.L, c=c)
        clone.priors = self.priors.copy()
        return clone


def select_single(state: SearchState, inst: ProblemInstance) -> tuple[int, ...]:
    """Single-probe, single-target selection.

    Probe the top-ranked cell when its anomalous drift D(g||f) is at least
    the pooled decay rate of the remaining cells; otherwise probe the
    runner-up to push it down instead.
    """
    top = int(state.ranking[0])
    if inst.models[top].d_gf >= inst.profile((top,)).f_bar:
        return (top,)
    return (int(state.ranking[1]),)


def select_multi(state: SearchState, inst: ProblemInstance) -> tuple[int, ...]:
    """K-probe, single-target selection over consecutive ranked blocks.

    Compare the gap growth from probing ranks 1..K (top cell plus K-1
    chasers) against probing ranks 2..K+1 (all K probes chasing); ties go
    to the block that includes the top cell.
    """
    k = inst.K
    top = int(state.ranking[0])
    prof = inst.profile((top,))
    if inst.models[top].d_gf + prof.f_at(k - 1) >= prof.f_at(k):
        return tuple(int(i) for i in state.ranking[:k])
    return tuple(int(i) for i in state.ranking[1 : k + 1])


def select_multitarget(state: SearchState, inst: ProblemInstance) -> tuple[int, ...]:
    """Selection for L candidate anomalies (valid for any K).

    With D(n) the current top-L ranked cells: for K == 1 probe the L-th
    ranked cell when its pooled inside rate dominates the complement rate,
    else the (L+1)-th.  For K > 1 choose how many probes k* to spend inside
    D(n) by maximizing the combined gap growth, then probe the K
    consecutive ranks ending k* deep into D(n).  k* is clamped so the
    probed window stays inside the cell range, and ties prefer probing
    more candidate-anomalous cells.
    """
    l, k, m = inst.L, inst.K, inst.M
    ranking = state.ranking
    cand = tuple(sorted(int(i) for i in ranking[:l]))
    prof = inst.profile(cand)
    if k == 1:
        if prof.g_bar >= prof.f_bar:
            return (int(ranking[l - 1]),)
        return (int(ranking[l]),)
    k_lo = max(0, k + l - m)
    k_hi = min(k, l)
    best_k, best_val = k_lo, -math.inf
    for kk in range(k_lo, k_hi + 1):
        val = prof.f_at(k - kk) + prof.g_at(kk)
        if val >= best_val:
            best_k, best_val = kk, val
    start = l - best_k
    return tuple(int(i) for i in ranking[start : start + k])


def select_probes(state: SearchState, inst: ProblemInstance) -> tuple[int, ...]:
    """Dispatch to the selection rule matching the instance's K and L."""
    if inst.L > 1:
        return select_multitarget(state, inst)
    if inst.K > 1:
        return select_multi(state, inst)
    return select_single(state, inst)


def should_stop(state: SearchState, inst: ProblemInstance) -> bool:
    """Stop once the L-th vs (L+1)-th sum-LLR gap reaches -log(c)."""
    return delta_s(state, inst.L) >= inst.threshold


def decide(state: SearchState, inst: ProblemInstance) -> tuple[int, ...]:
    """Declare the top-L ranked cells (sorted by index)."""
    return tuple(sorted(int(i) for i in state.ranking[: inst.L]))


def policy_action(state: SearchState, inst: ProblemInstance) -> PolicyAction:
    """One step of the deterministic policy: stop-and-declare or continue."""
    if should_stop(state, inst):
        return PolicyAction(kind="stop", cells=decide(state, inst))
    return PolicyAction(kind="continue", cells=select_probes(state, inst))
