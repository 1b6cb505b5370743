"""Rate functions and asymptotic-optimality analysis.

All quantities are in nats.  For a single target, the policy's rate under
hypothesis m is I_m = max{D(g_m||f_m) + F_m(K-1), F_m(K)} and the best rate
any policy can achieve is I*_m = max over u in [0,1] of
u*D(g_m||f_m) + F_m(K-u), where F_m(kappa) = min{kappa*Fbar_m, min_j D(f_j||g_j)}
is piecewise linear with breakpoint Ktilde_m.  The deterministic policy
matches I*_m exactly unless the fractional maximizer u* falls strictly
between 0 and 1, which can happen for at most three probe budgets K per
instance.  Aggregates over hypotheses are prior-weighted harmonic means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .policy import InstanceError, ProblemInstance, RateProfile


def f_bar(inst: ProblemInstance, m: int) -> float:
    """Pooled single-probe decay rate of the cells other than m."""
    return inst.profile((m,)).f_bar


def f_kappa(inst: ProblemInstance, m: int, kappa: float) -> float:
    """Decay rate of the leading non-anomalous cell with kappa probes.

    kappa is accepted as a nonnegative real: fractional probe allocations
    arise when maximizing over the split between the candidate anomaly and
    its chasers.
    """
    return inst.profile((m,)).f_at(kappa)


def k_tilde(inst: ProblemInstance, m: int) -> float:
    """Probe budget at which the slowest other cell caps F_m (always >= 1)."""
    return inst.profile((m,)).k_tilde


def i_m_dgfi(inst: ProblemInstance, m: int) -> float:
    """Gap growth rate of the deterministic policy under hypothesis m."""
    prof = inst.profile((m,))
    return max(inst.d_gf[m] + prof.f_at(inst.K - 1), prof.f_at(inst.K))


def i_dgfi(inst: ProblemInstance) -> float:
    """Prior-weighted harmonic mean of the per-hypothesis policy rates (L=1)."""
    if inst.L != 1:
        raise InstanceError("i_dgfi is defined for single-target instances; see i_star_L")
    vals = np.array([i_m_dgfi(inst, m) for m in range(inst.M)])
    return float(1.0 / np.sum(inst.priors / vals))


def u_star(inst: ProblemInstance, m: int) -> float:
    """Optimal fractional probe share for the candidate anomaly (closed form).

    Equals 1 when probing the anomaly is at least as informative as chasing
    (D(g_m||f_m) >= Fbar_m); otherwise clamp(K - Ktilde_m, 0, 1).
    """
    prof = inst.profile((m,))
    if inst.d_gf[m] >= prof.f_bar:
        return 1.0
    return min(max(inst.K - prof.k_tilde, 0.0), 1.0)


def i_m_star(inst: ProblemInstance, m: int) -> float:
    """Best achievable gap growth rate under hypothesis m for any policy."""
    u = u_star(inst, m)
    return u * inst.d_gf[m] + inst.profile((m,)).f_at(inst.K - u)


def i_star(inst: ProblemInstance) -> float:
    """Prior-weighted harmonic mean of the optimal per-hypothesis rates (L=1)."""
    if inst.L != 1:
        raise InstanceError("i_star is defined for single-target instances; see i_star_L")
    vals = np.array([i_m_star(inst, m) for m in range(inst.M)])
    return float(1.0 / np.sum(inst.priors / vals))


def optimality_check(inst: ProblemInstance) -> list[bool]:
    """Per-hypothesis verdicts: the deterministic policy attains I*_m iff
    D(g_m||f_m) >= Fbar_m, or K <= Ktilde_m, or K >= Ktilde_m + 1."""
    out = []
    for m in range(inst.M):
        prof = inst.profile((m,))
        out.append(
            inst.d_gf[m] >= prof.f_bar
            or inst.K <= prof.k_tilde
            or inst.K >= prof.k_tilde + 1.0
        )
    return out


def pathological_k(inst: ProblemInstance) -> list[int]:
    """Probe budgets K in {2..M-1} where some hypothesis loses optimality.

    Fbar_m and Ktilde_m do not depend on K, so one pass over the cached
    profiles covers every budget.  At most three budgets can appear, and
    K = 1 never does.
    """
    bad = []
    for k in range(2, inst.M):
        for m in range(inst.M):
            prof = inst.profile((m,))
            if inst.d_gf[m] >= prof.f_bar:
                continue
            if prof.k_tilde < k < prof.k_tilde + 1.0:
                bad.append(k)
                break
    return bad


@dataclass(frozen=True)
class SubsetRates:
    """Rates conditioned on a candidate anomalous set D of size L."""

    subset: tuple[int, ...]
    profile: RateProfile

    @property
    def f_bar(self) -> float:
        return self.profile.f_bar

    @property
    def g_bar(self) -> float:
        return self.profile.g_bar

    def f_at(self, kappa: float) -> float:
        return self.profile.f_at(kappa)

    def g_at(self, kappa: float) -> float:
        return self.profile.g_at(kappa)

    @property
    def rate(self) -> float:
        """Single-probe gap growth rate under hypothesis D: max{Fbar_D, Gbar_D}."""
        return max(self.profile.f_bar, self.profile.g_bar)


def multitarget_rates(inst: ProblemInstance, subset: Sequence[int]) -> SubsetRates:
    """Rates for a candidate anomalous set: harmonic pools over the set and
    its complement, their capped kappa-probe forms, and the hypothesis rate."""
    key = tuple(sorted(int(i) for i in subset))
    return SubsetRates(subset=key, profile=inst.profile(key))


def i_star_L(inst: ProblemInstance) -> float:
    """Prior-weighted harmonic mean of the per-subset rates (K = 1 analysis)."""
    vals = np.array([multitarget_rates(inst, h).rate for h in inst.hypotheses])
    return float(1.0 / np.sum(inst.priors / vals))


def _subset_rate_k(inst: ProblemInstance, subset: tuple[int, ...]) -> float:
    # best integer split of K probes between the set and its complement
    prof = inst.profile(subset)
    k, l, m = inst.K, len(subset), inst.M
    k_lo, k_hi = max(0, k + l - m), min(k, l)
    return max(prof.f_at(k - kk) + prof.g_at(kk) for kk in range(k_lo, k_hi + 1))


def u_star_subset(inst: ProblemInstance, subset: Sequence[int]) -> tuple[float, float]:
    """Fractional split diagnostic for multi-target, multi-probe instances.

    Maximizes F_D(K-u) + G_D(u) over real u in [0, K].  Both pieces are
    piecewise linear, so the maximum sits at an endpoint or a breakpoint;
    ties prefer the larger u.  Returns (u, value).
    """
    prof = inst.profile(tuple(sorted(int(i) for i in subset)))
    k = float(inst.K)
    candidates = {0.0, k}
    if prof.f_bar > 0:
        candidates.add(k - prof.min_fg / prof.f_bar)
    if prof.g_bar > 0:
        candidates.add(prof.min_gf / prof.g_bar)
    best_u, best_val = 0.0, -math.inf
    for u in sorted(c for c in candidates if 0.0 <= c <= k):
        val = prof.f_at(k - u) + prof.g_at(u)
        if val >= best_val:
            best_u, best_val = u, val
    return best_u, best_val


def dgfi_rate(inst: ProblemInstance) -> float:
    """The deterministic policy's aggregate rate for any (K, L).

    Single target: harmonic mean of I_m.  Multiple targets with K = 1: the
    per-subset rate max{Fbar_D, Gbar_D}, which the policy attains.  For
    K > 1 with multiple targets the best integer probe split is used (the
    fractional-split optimum is conjectural there).
    """
    if inst.L == 1:
        return i_dgfi(inst)
    if inst.K == 1:
        return i_star_L(inst)
    vals = np.array([_subset_rate_k(inst, h) for h in inst.hypotheses])
    return float(1.0 / np.sum(inst.priors / vals))


def optimal_rate(inst: ProblemInstance) -> float:
    """Upper-bound aggregate rate for any policy on this instance."""
    if inst.L == 1:
        return i_star(inst)
    if inst.K == 1:
        return i_star_L(inst)
    vals = np.array([u_star_subset(inst, h)[1] for h in inst.hypotheses])
    return float(1.0 / np.sum(inst.priors / vals))


def car_oracle(speeds: Sequence[float], kappa: int, horizon: int) -> float:
    """Brute-force check of the capped harmonic rate F(kappa).

    Simulate cars that start at the origin and drive toward -infinity, one
    driver per car: at each step the kappa cars closest to the origin (ties
    broken by index) each advance by their own speed.  The average speed of
    the closest car over the horizon converges to F(kappa).
    """
    speeds = [float(s) for s in speeds]
    n = len(speeds)
    if not all(s > 0 and math.isfinite(s) for s in speeds):
        raise ValueError("car speeds must be positive and finite")
    if not 1 <= kappa <= n:
        raise ValueError(f"need 1 <= kappa <= {n} cars, got kappa={kappa}")
    if horizon < 10_000:
        raise ValueError(f"horizon must be at least 10000 steps, got {horizon}")
    pos = [0.0] * n
    idx = list(range(n))
    if kappa == n:
        # every car has a driver; the trailing edge moves at the slowest speed
        slow = min(speeds)
        return slow
    for _ in range(horizon):
        # stable sort keeps ascending index among equal positions
        drivers = sorted(idx, key=pos.__getitem__, reverse=True)[:kappa]
        for j in drivers:
            pos[j] -= speeds[j]
    return -max(pos) / horizon


@dataclass
class RateReport:
    """Full per-cell and aggregate rate analysis of an instance."""

    M: int
    K: int
    L: int
    d_gf: list[float]
    d_fg: list[float]
    f_bar: list[float]
    k_tilde: list[float]
    i_m_dgfi: list[float]
    u_star: list[float]
    i_m_star: list[float]
    optimal: list[bool]
    pathological_k: list[int]
    i_dgfi: float
    i_star: float
    rate_policy: float = field(default=float("nan"))
    rate_bound: float = field(default=float("nan"))

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "K": self.K,
            "L": self.L,
            "d_gf": self.d_gf,
            "d_fg": self.d_fg,
            "f_bar": self.f_bar,
            "k_tilde": self.k_tilde,
            "i_m_dgfi": self.i_m_dgfi,
            "u_star": self.u_star,
            "i_m_star": self.i_m_star,
            "optimal": self.optimal,
            "pathological_k": self.pathological_k,
            "i_dgfi": self.i_dgfi,
            "i_star": self.i_star,
            "rate_policy": self.rate_policy,
            "rate_bound": self.rate_bound,
        }


def build_rate_report(inst: ProblemInstance) -> RateReport:
    """Evaluate every per-cell rate quantity and the aggregate verdicts."""
    ms = range(inst.M)
    per_i = [i_m_dgfi(inst, m) for m in ms]
    per_star = [i_m_star(inst, m) for m in ms]
    agg_i = float(1.0 / np.sum(np.full(inst.M, 1.0 / inst.M) / per_i))
    agg_star = float(1.0 / np.sum(np.full(inst.M, 1.0 / inst.M) / per_star))
    if inst.L == 1:
        agg_i = i_dgfi(inst)
        agg_star = i_star(inst)
    return RateReport(
        M=inst.M,
        K=inst.K,
        L=inst.L,
        d_gf=[float(x) for x in inst.d_gf],
        d_fg=[float(x) for x in inst.d_fg],
        f_bar=[f_bar(inst, m) for m in ms],
        k_tilde=[k_tilde(inst, m) for m in ms],
        i_m_dgfi=per_i,
        u_star=[u_star(inst, m) for m in ms],
        i_m_star=per_star,
        optimal=optimality_check(inst),
        pathological_k=pathological_k(inst),
        i_dgfi=agg_i,
        i_star=agg_star,
        rate_policy=dgfi_rate(inst),
        rate_bound=optimal_rate(inst),
    )
