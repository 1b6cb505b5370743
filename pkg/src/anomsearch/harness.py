"""Monte Carlo harness: sequential trials, aggregation, and parameter sweeps.

Reproducibility contract: trial i of an experiment draws its observations
from a generator seeded by a strong mix of (base_seed, i), and the true
hypothesis sequence comes from a separate stream derived from base_seed
alone, so results are identical for any worker count and any scheduling.
Aggregation folds trials in index order.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rates
from .chernoff import ensure_action_distributions, rate_chernoff_aggregate, select_chernoff
from .distributions import make_sampler
from .policy import ProblemInstance, decide, select_probes, should_stop
from .state import advance_inplace, init_state

POLICIES = ("dgfi", "chernoff")

_SEED_MASK = (1 << 64) - 1
_HYP_STREAM_TAG = 0x68797073  # disjoint from trial indices at any sane scale


@dataclass
class TrialResult:
    """Outcome of one sequential search trial."""

    true_set: tuple[int, ...]
    declared: tuple[int, ...]
    tau: int
    correct: bool
    truncated: bool
    seed: int
    trace: list[tuple[int, tuple[int, ...], tuple[float, ...]]] | None = None


@dataclass
class ExperimentReport:
    """Aggregate statistics over an experiment's trials."""

    policy: str
    M: int
    K: int
    L: int
    c: float
    seed: int
    trials: int
    pe_hat: float
    pe_bound: float
    mean_tau: float
    tau_ci95: float
    bayes_risk: float
    rate_I: float
    rate_Istar: float
    truncation_rate: float
    max_horizon: int
    per_hypothesis: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "M": self.M,
            "K": self.K,
            "L": self.L,
            "c": self.c,
            "seed": self.seed,
            "trials": self.trials,
            "pe_hat": self.pe_hat,
            "pe_bound": self.pe_bound,
            "mean_tau": self.mean_tau,
            "tau_ci95": self.tau_ci95,
            "bayes_risk": self.bayes_risk,
            "rate_I": self.rate_I,
            "rate_Istar": self.rate_Istar,
            "truncation_rate": self.truncation_rate,
            "max_horizon": self.max_horizon,
            "per_hypothesis": self.per_hypothesis,
        }


def error_bound(inst: ProblemInstance) -> float:
    """Error-probability bound for the stopping rule: (M-1)c for one target,
    (M-L)*L*c for L targets."""
    if inst.L == 1:
        return (inst.M - 1) * inst.c
    return (inst.M - inst.L) * inst.L * inst.c


def trial_seed(base_seed: int, index: int) -> int:
    """Derive trial i's observation seed from (base_seed, i)."""
    ss = np.random.SeedSequence((base_seed & _SEED_MASK, index))
    return int(ss.generate_state(1, np.uint64)[0])


def default_horizon(inst: ProblemInstance) -> int:
    """Truncation horizon: ~200x the asymptotic mean delay plus an additive
    allowance for the O(M) probe floor that dominates when divergences are
    large relative to -log c.  Truncation under this bound is vanishingly
    rare and is surfaced via truncation_rate."""
    return math.ceil(200.0 * inst.threshold / rates.dgfi_rate(inst)) + 50 * inst.M


def run_trial(
    inst: ProblemInstance,
    policy: str,
    true_set: Sequence[int],
    seed: int,
    max_horizon: int | None = None,
    trace: bool = False,
) -> TrialResult:
    """Run one search to stopping (or truncation) and return its outcome.

    Cells in ``true_set`` emit observations from their anomalous
    distribution g, all others from f.  Identical arguments always produce
    identical results.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    true_set = tuple(sorted(int(i) for i in true_set))
    if len(true_set) != inst.L or not all(0 <= i < inst.M for i in true_set):
        raise ValueError(f"true set {true_set} is not a valid L={inst.L} subset")
    horizon = default_horizon(inst) if max_horizon is None else int(max_horizon)
    if policy == "chernoff":
        ensure_action_distributions(inst)

    rng = np.random.Generator(np.random.PCG64(seed & _SEED_MASK))
    anomalous = set(true_set)
    samplers = [
        make_sampler(mod.present if i in anomalous else mod.absent)
        for i, mod in enumerate(inst.models)
    ]
    models = inst.models
    state = init_state(inst.M)
    rows = [] if trace else None
    truncated = False
    while True:
        if should_stop(state, inst):
            break
        if state.n >= horizon:
            truncated = True
            break
        if policy == "dgfi":
            probes = select_probes(state, inst)
        else:
            probes = select_chernoff(state, inst, rng)
        ys = [samplers[i](rng) for i in probes]
        advance_inplace(state, probes, ys, models)
        if rows is not None:
            rows.append((state.n, probes, tuple(float(s) for s in state.sums)))
    declared = decide(state, inst)
    return TrialResult(
        true_set=true_set,
        declared=declared,
        tau=state.n,
        correct=declared == true_set,
        truncated=truncated,
        seed=int(seed),
        trace=rows,
    )


def draw_hypotheses(inst: ProblemInstance, base_seed: int, trials: int) -> np.ndarray:
    """Hypothesis indices for each trial, drawn from the prior on a dedicated
    stream so they do not depend on trial execution at all."""
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((base_seed & _SEED_MASK, _HYP_STREAM_TAG)))
    )
    return rng.choice(len(inst.hypotheses), size=trials, p=inst.priors)


def _run_block(args) -> list[tuple[int, bool, bool]]:
    inst, policy, hyp_idx, seeds, horizon = args
    out = []
    for h, s in zip(hyp_idx, seeds):
        r = run_trial(inst, policy, inst.hypotheses[h], int(s), max_horizon=horizon)
        out.append((r.tau, r.correct, r.truncated))
    return out


def run_experiment(
    inst: ProblemInstance,
    policy: str,
    trials: int,
    base_seed: int,
    max_horizon: int | None = None,
    workers: int = 1,
) -> ExperimentReport:
    """Run ``trials`` independent searches and aggregate their statistics.

    The report is identical for any ``workers`` value; parallel workers only
    change wall-clock time.  Truncated trials count as errors and contribute
    tau = max_horizon to the delay.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    horizon = default_horizon(inst) if max_horizon is None else int(max_horizon)
    if policy == "chernoff":
        ensure_action_distributions(inst)  # solve the games once, pre-fork
    hyp_idx = draw_hypotheses(inst, base_seed, trials)
    seeds = np.array([trial_seed(base_seed, i) for i in range(trials)], dtype=np.uint64)

    if workers <= 1:
        rows = _run_block((inst, policy, hyp_idx, seeds, horizon))
    else:
        bounds = np.linspace(0, trials, num=min(workers, trials) * 4 + 1, dtype=int)
        blocks = [
            (inst, policy, hyp_idx[a:b], seeds[a:b], horizon)
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        with multiprocessing.Pool(processes=workers) as pool:
            rows = [r for block in pool.map(_run_block, blocks) for r in block]

    tau = np.array([r[0] for r in rows], dtype=np.int64)
    correct = np.array([r[1] for r in rows], dtype=bool)
    truncated = np.array([r[2] for r in rows], dtype=bool)
    errors = ~correct | truncated
    pe_hat = float(errors.sum() / trials)
    mean_tau = float(tau.sum() / trials)
    sd = float(tau.std(ddof=1)) if trials > 1 else 0.0
    per_hyp = []
    for h, hyp in enumerate(inst.hypotheses):
        mask = hyp_idx == h
        n_h = int(mask.sum())
        per_hyp.append(
            {
                "hypothesis": list(hyp),
                "trials": n_h,
                "errors": int(errors[mask].sum()),
                "mean_tau": float(tau[mask].mean()) if n_h else None,
            }
        )
    if policy == "dgfi":
        rate_policy = rates.dgfi_rate(inst)
    else:
        rate_policy = rate_chernoff_aggregate(inst)
    return ExperimentReport(
        policy=policy,
        M=inst.M,
        K=inst.K,
        L=inst.L,
        c=inst.c,
        seed=int(base_seed),
        trials=trials,
        pe_hat=pe_hat,
        pe_bound=error_bound(inst),
        mean_tau=mean_tau,
        tau_ci95=1.96 * sd / math.sqrt(trials),
        bayes_risk=pe_hat + inst.c * mean_tau,
        rate_I=rate_policy,
        rate_Istar=rates.optimal_rate(inst),
        truncation_rate=float(truncated.sum() / trials),
        max_horizon=horizon,
        per_hypothesis=per_hyp,
    )


@dataclass
class SweepPoint:
    """One sweep value with its report and asymptotic-ratio diagnostics."""

    value: float
    report: ExperimentReport
    delay_ratio: float
    risk_ratio: float


def run_sweep(
    instances: Sequence[tuple[float, ProblemInstance]],
    policy: str,
    trials: int,
    base_seed: int,
    max_horizon: int | None = None,
    workers: int = 1,
) -> list[SweepPoint]:
    """Run one experiment per (value, instance) pair and attach the delay and
    risk ratios normalized by the policy rate: mean_tau*I/(-log c) and
    bayes_risk*I/(-c log c), both of which approach 1 as c goes to 0."""
    points = []
    for value, inst in instances:
        report = run_experiment(
            inst, policy, trials, base_seed, max_horizon=max_horizon, workers=workers
        )
        log_c = -math.log(inst.c)
        points.append(
            SweepPoint(
                value=float(value),
                report=report,
                delay_ratio=report.mean_tau * report.rate_I / log_c,
                risk_ratio=report.bayes_risk * report.rate_I / (inst.c * log_c),
            )
        )
    return points
